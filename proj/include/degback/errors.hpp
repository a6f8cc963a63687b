#pragma once

#include <stdexcept>
#include <string>

namespace degback {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Iterative procedure (root finding, quadrature refinement, time stepping)
/// did not reach its tolerance within the allotted budget.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense solve refused because the matrix is singular or its condition
/// estimate exceeds the configured threshold.
class IllConditionedError : public std::runtime_error {
public:
    IllConditionedError(const std::string& what, double cond)
        : std::runtime_error(what), condition_estimate(cond) {}
    double condition_estimate;
};

/// Target decay rate hits (or comes within the margin of) a resonant value.
class ResonanceError : public std::runtime_error {
public:
    ResonanceError(const std::string& what, int n, int k, double distance, double suggested)
        : std::runtime_error(what), n(n), k(k), distance(distance), suggested_lambda(suggested) {}
    int n;
    int k;  // 0 when the offending value is a single eigenvalue
    double distance;
    double suggested_lambda;
};

/// Invalid run configuration; `field` names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field(field) {}
    std::string field;
};

}  // namespace degback
