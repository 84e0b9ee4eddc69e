#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "netobs/sensitivity.hpp"

namespace netobs {

struct SensorMask {
    std::vector<int> bits;  // 0/1 per node

    int n() const { return static_cast<int>(bits.size()); }
    int count() const;
    std::string to_string() const;  // e.g. "010110"
    bool operator==(const SensorMask& other) const { return bits == other.bits; }
};

struct SelectionConstraints {
    int n = 0;
    int r = 0;
    std::vector<int> forced;    // always sensors
    std::vector<int> excluded;  // never sensors

    void validate() const;
    std::vector<int> free_nodes() const;  // neither forced nor excluded
};

// Objective of a mask: eigenvalues of the Gram matrix J^T J above the
// degeneracy threshold n * eps * lambda_max. A mask with fewer than n
// retained eigenvalues is degenerate and its log-det is -inf; such masks are
// ordered by retained count first, then by the sum of retained logs.
struct ObjectiveValue {
    int retained = 0;
    double log_sum = 0.0;  // sum of logs of retained eigenvalues
    bool degenerate = true;

    double objective() const;  // log det, -inf when degenerate
};

bool better(const ObjectiveValue& a, const ObjectiveValue& b);
bool equivalent(const ObjectiveValue& a, const ObjectiveValue& b);

struct SelectionResult {
    SensorMask mask;
    ObjectiveValue value;
    double objective = 0.0;  // value.objective()
    long evaluations = 0;
    std::string solver;
    bool degenerate = true;
};

using MaskObjective = std::function<ObjectiveValue(const SensorMask&)>;

// log det(J1(b,x0)^T J1(b,x0)) from the unsigned output Jacobian stack; one
// trajectory simulation per call.
ObjectiveValue selection_objective(const DiscreteModel& dm, const StateVector& x0, int N,
                                   const SensorMask& mask);

MaskObjective jacobian_objective(const DiscreteModel& dm, const StateVector& x0, int N);

ObjectiveValue gram_objective_value(const Matrix& gram, int n);

// All feasible masks; refuses when the count exceeds the budget. Ties broken
// by the lexicographically smallest bit tuple.
SelectionResult select_exhaustive(const MaskObjective& objective,
                                  const SelectionConstraints& constraints,
                                  long budget = 1000000);
SelectionResult select_exhaustive(const DiscreteModel& dm, const StateVector& x0, int N,
                                  const SelectionConstraints& constraints,
                                  long budget = 1000000);

// Greedy forward selection maximizing the objective gain; ties by smallest
// node index.
SelectionResult select_greedy(const MaskObjective& objective,
                              const SelectionConstraints& constraints);
SelectionResult select_greedy(const DiscreteModel& dm, const StateVector& x0, int N,
                              const SelectionConstraints& constraints);

// Multi-start single-swap hill climbing; the budget caps total objective
// evaluations (the starting masks are always evaluated). Deterministic per
// seed.
SelectionResult select_stochastic(const MaskObjective& objective,
                                  const SelectionConstraints& constraints, long budget,
                                  std::uint64_t seed, int starts = 5);
SelectionResult select_stochastic(const DiscreteModel& dm, const StateVector& x0, int N,
                                  const SelectionConstraints& constraints, long budget,
                                  std::uint64_t seed, int starts = 5);

// Uniform over feasible masks; deterministic per seed.
SensorMask random_selection(const SelectionConstraints& constraints, std::uint64_t seed);

// Compressed r x n selection matrix (one row per selected node).
Matrix mask_to_selection_matrix(const SensorMask& mask);
// diag(b), n x n.
Matrix mask_to_output_matrix(const SensorMask& mask);

std::string selection_csv_header();
std::string selection_csv_row(const SelectionResult& result, std::uint64_t seed);

}  // namespace netobs
