#pragma once

#include <optional>
#include <vector>

#include "netobs/sensitivity.hpp"

namespace netobs {

// Output samples y_0..y_{N-1} with the selection matrix that produced them.
// Every row of C has exactly one entry equal to 1.
struct ObservationSet {
    std::vector<StateVector> y;
    Matrix C;
    double h = 0.0;
    Scheme scheme = Scheme::IRK;

    int N() const { return static_cast<int>(y.size()); }
    int r() const { return static_cast<int>(C.rows()); }
};

void validate_observation_set(const ObservationSet& obs, int n);

struct SolverSettings {
    double gradient_tol = 1e-8;   // infinity norm of the projected gradient
    double step_tol = 1e-12;      // relative accepted-step 2-norm
    int max_iterations = 500;
    double initial_radius = 1.0;
    double expand = 2.0;
    double shrink = 0.25;
    double accept_ratio = 0.1;
};

struct EstimationProblem {
    ObservationSet observations;
    DiscreteModel dm;
    StateVector initial_guess;
    StateVector lower_bounds;
    StateVector upper_bounds;
    SolverSettings settings;
};

EstimationProblem make_estimation_problem(ObservationSet observations, DiscreteModel dm,
                                          StateVector initial_guess);

struct IterationRecord {
    int iteration = 0;
    double residual_norm = 0.0;  // ||g||_2 at the current accepted point
    double radius = 0.0;
    double step_norm = 0.0;
    bool accepted = false;
};

struct EstimationResult {
    StateVector x0_hat;
    std::optional<double> eta;   // only when the true initial state is known
    int iterations = 0;          // z
    double residual_norm = 0.0;  // final ||g||_2
    double kappa = 1.0;          // condition number of the final Jacobian
    int rank = 0;
    bool rank_ok = false;
    bool shape_ok = false;       // N r >= n
    bool converged = false;
    std::vector<IterationRecord> trace;
};

// g(x0) = col(y_0 - C x_0, ..., y_{N-1} - C x_{N-1}) along the discrete model
// trajectory started at x0.
StateVector residual(const EstimationProblem& problem, const StateVector& x0);

// Trust-region Gauss-Newton with reflective handling of active bounds and a
// dogleg subproblem. Residual evaluation failures at trial points count as
// infinite objective, which shrinks the trust region.
EstimationResult estimate_initial_state(const EstimationProblem& problem,
                                        const StateVector* x0_true = nullptr);

// eta = ||x0_hat - x0_true||_2 / ||x0_true||_2.
double estimation_error(const StateVector& x0_hat, const StateVector& x0_true);

// Per-step xi_k = ||x_k - x*_k||_2 / ||x*_k||_2; NaN marks steps where the
// reference state is zero.
std::vector<double> trajectory_error(const Trajectory& traj, const Trajectory& reference);

struct RankInfo {
    int rank = 0;
    double kappa = 1.0;  // sigma_max / sigma_min over retained singular values
    bool ok = false;     // rank == n
};

RankInfo rank_check(const JacobianStack& stack);

// Report written by the CLI: x0_hat, diagnostics, convergence flag.
std::string estimation_report_csv(const EstimationResult& result,
                                  const std::vector<std::string>& names);

}  // namespace netobs
