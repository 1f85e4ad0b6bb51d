#pragma once

#include <stdexcept>
#include <string>

namespace turnpike {

/// Broad failure classes; the CLI maps these onto exit codes.
enum class ErrorKind {
    parameter,      ///< invalid input value (validation)
    domain,         ///< argument outside a function's domain
    evaluation,     ///< non-finite value produced while integrating or sampling
    bracketing,     ///< root bracket without a sign change
    convergence,    ///< iteration cap exceeded
    wellposedness,  ///< divergent integral or ill-posed optimization problem
    range,          ///< value outside the range of a utility
    contract,       ///< caller broke an operation's precondition (e.g. non-concave input)
    coverage,       ///< evaluation point outside a replication grid
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// True for failures caused by inputs rather than by the numerics.
    bool is_validation() const noexcept {
        return kind_ == ErrorKind::parameter || kind_ == ErrorKind::domain ||
               kind_ == ErrorKind::contract || kind_ == ErrorKind::coverage ||
               kind_ == ErrorKind::range;
    }

private:
    ErrorKind kind_;
};

/// Raised by marginal() at a kink; carries the one-sided derivatives.
class NonDifferentiableError : public Error {
public:
    NonDifferentiableError(double x, double left, double right);

    double at() const noexcept { return x_; }
    double left_slope() const noexcept { return left_; }
    double right_slope() const noexcept { return right_; }

private:
    double x_;
    double left_;
    double right_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace turnpike
