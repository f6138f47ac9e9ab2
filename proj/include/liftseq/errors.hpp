#pragma once

#include <stdexcept>
#include <string>

namespace liftseq {

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Normal equations stay singular even after diagonal jitter.
struct SingularSystem : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Projected-gradient iterate left the finite range.
struct NonFiniteIterate : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dual bisection bracket does not change sign; the bracket is provably
// valid, so this indicates a bug upstream.
struct BracketFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Backtracking step shrank below 1e-16.
struct LineSearchStall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidSpec : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace liftseq
