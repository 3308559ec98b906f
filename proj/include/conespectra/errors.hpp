#pragma once

#include <stdexcept>
#include <string>

namespace conespectra {

/// Invalid input parameters (bad dimension, angle out of range, ...).
class invalid_parameter : public std::invalid_argument {
public:
    explicit invalid_parameter(const std::string& msg) : std::invalid_argument(msg) {}
};

/// The (d,l) = (3,0) fiber is excluded from the flat-metric transform;
/// callers must use the weighted meridian form for it.
class excluded_fiber : public std::domain_error {
public:
    explicit excluded_fiber(const std::string& msg) : std::domain_error(msg) {}
};

/// A numerical routine failed to converge or a factorization broke down.
class numerical_failure : public std::runtime_error {
public:
    explicit numerical_failure(const std::string& msg) : std::runtime_error(msg) {}
};

/// A mathematically guaranteed inequality was violated; indicates a bug
/// in assembly or solver, never a tolerance issue.
class invariant_violation : public std::logic_error {
public:
    explicit invariant_violation(const std::string& msg) : std::logic_error(msg) {}
};

} // namespace conespectra
