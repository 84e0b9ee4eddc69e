#pragma once

#include <stdexcept>
#include <string>

namespace netobs {

// Base for all library errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Violated call contract: dimension mismatch, invalid configuration value.
class ContractError : public Error {
  public:
    using Error::Error;
};

// File syntax or schema problem; message carries line/field diagnostics.
class ParseError : public Error {
  public:
    using Error::Error;
};

// Input outside the mathematical domain of an operation.
class DomainError : public Error {
  public:
    using Error::Error;
};

// Newton iteration for an implicit step did not converge.
class StepFailure : public Error {
  public:
    StepFailure(const std::string& msg, int step_index, double residual)
        : Error(msg), step_index_(step_index), residual_(residual) {}
    int step_index() const { return step_index_; }
    double residual() const { return residual_; }

  private:
    int step_index_;
    double residual_;
};

// Singular linear system inside a step or sensitivity solve.
class SingularMatrixError : public Error {
  public:
    using Error::Error;
};

// Adaptive reference integration could not meet its tolerance.
class IntegrationFailure : public Error {
  public:
    using Error::Error;
};

// Combinatorial enumeration would exceed the configured budget.
class BudgetError : public Error {
  public:
    using Error::Error;
};

inline void require(bool condition, const std::string& msg) {
    if (!condition) throw ContractError(msg);
}

}  // namespace netobs
