#ifndef HMDESIGN_ERRORS_HPP
#define HMDESIGN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hmdesign {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SizeMismatch : Error {
    using Error::Error;
};
struct NonFinite : Error {
    using Error::Error;
};
struct ZeroPower : Error {
    using Error::Error;
};
struct NonPositiveScale : Error {
    using Error::Error;
};
struct UnsupportedOrder : Error {
    using Error::Error;
};
struct IndexOutOfRange : Error {
    using Error::Error;
};
struct NoLpBits : Error {
    using Error::Error;
};
struct InvalidSpec : Error {
    using Error::Error;
};
struct LinearSolveFailure : Error {
    using Error::Error;
};
struct NoFeasibleStart : Error {
    using Error::Error;
};
struct NotBracketed : Error {
    using Error::Error;
};
struct EmptyInput : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

// Thrown when no multi-start attempt produced a feasible design. Carries the
// best HP rate seen so callers can report how far the threshold was missed.
struct Infeasible : Error {
    Infeasible(const std::string& what, double best_r_h_seen)
        : Error(what), best_r_h(best_r_h_seen) {}
    double best_r_h;
};

}  // namespace hmdesign

#endif
