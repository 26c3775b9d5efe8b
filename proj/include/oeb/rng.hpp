#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace oeb {

// splitmix64 finalizer, used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a; stable across platforms, used for tags and digests.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// A seeded random stream. Child streams are derived by key, so the same
// (root, key path) always yields the same sequence regardless of how many
// draws other streams have consumed.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : seed_(mix64(seed)), engine_(seed_) {}

    RngStream derive(std::uint64_t key) const { return RngStream(seed_ ^ mix64(key + 0x632be59bd9b4e019ULL)); }
    RngStream derive(std::string_view tag) const { return derive(fnv1a64(tag)); }

    std::uint64_t seed() const noexcept { return seed_; }
    std::mt19937_64& engine() noexcept { return engine_; }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mean = 0.0, double sd = 1.0) {
        return std::normal_distribution<double>(mean, sd)(engine_);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace oeb
