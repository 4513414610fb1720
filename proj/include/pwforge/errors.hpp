#pragma once

#include <stdexcept>
#include <string>

namespace pwforge {

// Error taxonomy, mapped onto CLI exit codes:
//   config_error / precondition_error / resolution_error -> 2
//   io_error                                             -> 3
//   numeric_error                                        -> 4

struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct precondition_error : std::invalid_argument {
    explicit precondition_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// A request that cannot be met at the current grid/sampling resolution
// (caller may retry with a finer discretization).
struct resolution_error : std::runtime_error {
    explicit resolution_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Feasibility search failed at the given sampling resolution.
struct infeasible_error : std::runtime_error {
    explicit infeasible_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical invariant failed past tolerance at runtime.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pwforge
