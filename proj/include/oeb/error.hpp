#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oeb {

// Coarse failure classes; the CLI maps each to its own exit code.
enum class ErrorCategory {
    usage = 2,
    config = 3,
    data = 4,
    io = 5,
    infeasible = 6,
    model = 7,
    internal = 8,
};

std::string_view category_name(ErrorCategory c) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& what) { throw Error(c, what); }

inline void require(bool cond, ErrorCategory c, const std::string& what) {
    if (!cond) fail(c, what);
}

}  // namespace oeb
