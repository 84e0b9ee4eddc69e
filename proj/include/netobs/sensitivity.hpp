#pragma once

#include <vector>

#include "netobs/discretize.hpp"

namespace netobs {

// Stacked output Jacobian of the discrete-time observation map. Block k is
// sgn * C * (dx_k/dx_{k-1}) ... (dx_1/dx_0), with sgn = -1 for the signed
// (residual) form and +1 for the selection-objective form.
struct JacobianStack {
    Matrix full;                       // (N * C.rows()) x n
    std::vector<Matrix> step_factors;  // dx_j/dx_{j-1}, j = 1..N-1
    Matrix output_matrix;              // the C used for the blocks
    bool signed_rows = false;
    int N = 0;
    int n = 0;

    int block_rows() const { return static_cast<int>(output_matrix.rows()); }
};

// One-step state sensitivity dx_j/dx_{j-1} for a converged step. BE and TI
// use the implicit-function-theorem inverses; IRK solves the 2n x 2n stage
// sensitivity system and combines the stage blocks.
Matrix step_jacobian(const DiscreteModel& dm, const StepResult& step_result,
                     const StateVector& x_prev);

JacobianStack stack_output_jacobian(const DiscreteModel& dm, const StateVector& x0, int N,
                                    const Matrix& C, bool signed_rows);

// Same stack assembled from an existing trajectory (no extra simulation).
JacobianStack stack_from_trajectory(const DiscreteModel& dm, const Trajectory& traj,
                                    const Matrix& C, bool signed_rows);

// Central finite differences of the simulated outputs with respect to x0,
// per-coordinate step 1e-6 * (1 + |x0_i|). Test oracle.
Matrix finite_difference_stack(const DiscreteModel& dm, const StateVector& x0, int N,
                               const Matrix& C, bool signed_rows);

std::string jacobian_stack_csv(const JacobianStack& stack);

}  // namespace netobs
