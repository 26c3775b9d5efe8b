#pragma once

#include <vector>

#include "oeb/core.hpp"
#include "oeb/rng.hpp"

namespace testutil {

// Arms get ids 1..N and a single feature equal to their position.
inline oeb::PopulationYear make_pop(const std::vector<double>& rewards, const std::vector<double>& weights = {},
                                    int year = 2006) {
    std::vector<oeb::ArmRecord> arms;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        oeb::ArmRecord a;
        a.id = oeb::ArmId{static_cast<std::int64_t>(i + 1)};
        a.features = {static_cast<double>(i)};
        a.weight = weights.empty() ? 1.0 : weights[i];
        a.true_reward = rewards[i];
        a.tpi = 1000.0 * static_cast<double>(i + 1);
        a.year = year;
        arms.push_back(a);
    }
    return oeb::PopulationYear(year, std::move(arms));
}

inline std::vector<double> uniform_vector(oeb::RngStream& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& x : v) x = lo + (hi - lo) * rng.uniform();
    return v;
}

}  // namespace testutil
