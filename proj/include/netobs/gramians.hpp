#pragma once

#include <cstdint>
#include <vector>

#include "netobs/sensor_select.hpp"

namespace netobs {

// Perturbation and quadrature parameters for the empirical observability
// Gramians. tau = segments * dt; trajectories are produced by the IRK
// discrete model at step dt and integrals use the trapezoidal rule on the
// equidistant grid.
struct GramianConfig {
    std::vector<Matrix> T_set;     // orthogonal perturbation matrices (defs 1 and 3)
    std::vector<double> scales;    // positive scales c_m (defs 1 and 3)
    double gamma = 0.5;            // def 2 perturbation size
    double tau = 0.0;
    int segments = 0;              // Q
    double dt = 0.0;
    StateVector x0;                // base state (defs 2 and 3)

    void validate(int n, int definition) const;
};

struct EmpiricalGramian {
    Matrix matrix;      // n x n, symmetric PSD up to roundoff
    int definition = 0; // 1, 2 or 3
    int clipped = 0;    // perturbed initial states clipped at the state bounds
};

// Definition 1: responses from initial conditions c_m T_l e_i about the
// origin, deviations about the trajectory mean. The T->inf mean is estimated
// by the final sample, consistent with choosing tau so trajectories reach
// steady state.
EmpiricalGramian gramian_def1(const ContinuousModel& model, const Matrix& C,
                              const GramianConfig& config);

// Definition 2: central differences of outputs from x0 +- gamma e_i,
// factor 1/(4 gamma^2).
EmpiricalGramian gramian_def2(const ContinuousModel& model, const Matrix& C,
                              const GramianConfig& config);

// Definition 3: central differences from x0 +- c_m T_l e_i, combined over
// the scale and rotation sets.
EmpiricalGramian gramian_def3(const ContinuousModel& model, const Matrix& C,
                              const GramianConfig& config);

// Observability Gramian of dx/dt = A x, y = C x over [0, tau]: Simpson
// quadrature of exp(A^T t) C^T C exp(A t); tau = infinity solves the
// Lyapunov equation and requires Hurwitz A. Test oracle.
Matrix analytic_linear_gramian(const Matrix& A, const Matrix& C, double tau);

// QR of seeded standard-normal matrices, column signs fixed so the diagonal
// is non-negative; each matrix is orthogonal and deterministic per seed.
std::vector<Matrix> random_orthogonal_set(int n, int v, std::uint64_t seed);

// Gramian-based sensor selection: the output matrix is masked by b and the
// objective is log det of the resulting Gramian, searched with the shared
// discrete solvers.
enum class SearchSolver { Exhaustive, Greedy, Stochastic };

MaskObjective gramian_objective(const ContinuousModel& model, const GramianConfig& config,
                                int definition);

SelectionResult gramian_select(const ContinuousModel& model, const GramianConfig& config,
                               const SelectionConstraints& constraints, int definition,
                               SearchSolver solver = SearchSolver::Stochastic,
                               long budget = 1000, std::uint64_t seed = 0);

std::string gramian_csv(const EmpiricalGramian& gramian);
std::string gramian_eigenvalue_report(const EmpiricalGramian& gramian);

}  // namespace netobs
