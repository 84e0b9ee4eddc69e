#include "netobs/gramians.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "netobs/csvio.hpp"
#include "netobs/rng.hpp"

namespace netobs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Outputs y_0..y_Q of the IRK discrete model at step dt.
std::vector<Eigen::VectorXd> output_samples(const ContinuousModel& model, const Matrix& C,
                                            const StateVector& x0, double dt, int segments) {
    DiscreteModel dm{model, Scheme::IRK, dt};
    const Trajectory traj = simulate(dm, x0, segments + 1);
    std::vector<Eigen::VectorXd> y;
    y.reserve(traj.states.size());
    for (const StateVector& x : traj.states) y.push_back(C * x);
    return y;
}

StateVector clip_to_bounds(const ContinuousModel& model, const StateVector& x, int* clipped) {
    StateVector out = x.cwiseMax(model.lower_bounds).cwiseMin(model.upper_bounds);
    if (clipped && out != x) ++*clipped;
    return out;
}

Matrix trapezoid_sum(const std::vector<Matrix>& F, double dt) {
    Matrix acc = Matrix::Zero(F.front().rows(), F.front().cols());
    for (std::size_t q = 1; q < F.size(); ++q) {
        acc += 0.5 * (F[q - 1] + F[q]) * dt;
    }
    return acc;
}

void warn_clipped(int clipped, int definition) {
    if (clipped > 0) {
        std::cerr << "gramian definition " << definition << ": clipped " << clipped
                  << " perturbed initial states at the state bounds\n";
    }
}

}  // namespace

void GramianConfig::validate(int n, int definition) const {
    require(dt > 0.0, "gramian config: dt must be positive");
    require(segments >= 1, "gramian config: segments must be >= 1");
    require(std::abs(tau - segments * dt) <= 1e-9 * std::max(1.0, tau),
            "gramian config: tau must equal segments * dt");
    if (definition == 1 || definition == 3) {
        require(!T_set.empty(), "gramian config: T_set is empty");
        for (const Matrix& T : T_set) {
            require(T.rows() == n && T.cols() == n, "gramian config: T size mismatch");
            const double defect = (T.transpose() * T - Matrix::Identity(n, n)).norm();
            require(defect <= 1e-10, "gramian config: T_set matrix is not orthogonal");
        }
        require(!scales.empty(), "gramian config: scale set is empty");
        for (double c : scales) require(c > 0.0, "gramian config: scales must be positive");
    }
    if (definition == 2) {
        require(gamma > 0.0, "gramian config: gamma must be positive");
    }
    if (definition == 2 || definition == 3) {
        require(x0.size() == n, "gramian config: x0 size mismatch");
    }
}

EmpiricalGramian gramian_def1(const ContinuousModel& model, const Matrix& C,
                              const GramianConfig& config) {
    const int n = model.n;
    config.validate(n, 1);
    require(C.cols() == n, "gramian_def1: output matrix size mismatch");

    const int v = static_cast<int>(config.T_set.size());
    const int s = static_cast<int>(config.scales.size());
    const int Q = config.segments;

    EmpiricalGramian result;
    result.definition = 1;
    result.matrix = Matrix::Zero(n, n);

    for (int l = 0; l < v; ++l) {
        const Matrix& T = config.T_set[l];
        for (int m = 0; m < s; ++m) {
            const double c = config.scales[m];
            // Deviations of each perturbation response about its mean,
            // D_q = [y^1_q - mean^1, ..., y^n_q - mean^n].
            std::vector<Matrix> D(Q + 1, Matrix::Zero(C.rows(), n));
            for (int i = 0; i < n; ++i) {
                StateVector start = c * T.col(i);
                start = clip_to_bounds(model, start, &result.clipped);
                const auto y = output_samples(model, C, start, config.dt, Q);
                const Eigen::VectorXd mean = y.back();
                for (int q = 0; q <= Q; ++q) D[q].col(i) = y[q] - mean;
            }
            std::vector<Matrix> F(Q + 1);
            for (int q = 0; q <= Q; ++q) {
                F[q] = T * (D[q].transpose() * D[q]) * T.transpose();
            }
            result.matrix += trapezoid_sum(F, config.dt) / (v * s * c * c);
        }
    }
    result.matrix = 0.5 * (result.matrix + result.matrix.transpose());
    warn_clipped(result.clipped, 1);
    return result;
}

EmpiricalGramian gramian_def2(const ContinuousModel& model, const Matrix& C,
                              const GramianConfig& config) {
    const int n = model.n;
    config.validate(n, 2);
    require(C.cols() == n, "gramian_def2: output matrix size mismatch");

    const int Q = config.segments;
    EmpiricalGramian result;
    result.definition = 2;

    std::vector<Matrix> Phi(Q + 1, Matrix::Zero(C.rows(), n));
    for (int i = 0; i < n; ++i) {
        StateVector xp = config.x0;
        StateVector xm = config.x0;
        xp[i] += config.gamma;
        xm[i] -= config.gamma;
        xp = clip_to_bounds(model, xp, &result.clipped);
        xm = clip_to_bounds(model, xm, &result.clipped);
        const auto yp = output_samples(model, C, xp, config.dt, Q);
        const auto ym = output_samples(model, C, xm, config.dt, Q);
        for (int q = 0; q <= Q; ++q) Phi[q].col(i) = yp[q] - ym[q];
    }
    std::vector<Matrix> F(Q + 1);
    for (int q = 0; q <= Q; ++q) F[q] = Phi[q].transpose() * Phi[q];
    result.matrix = trapezoid_sum(F, config.dt) / (4.0 * config.gamma * config.gamma);
    result.matrix = 0.5 * (result.matrix + result.matrix.transpose());
    warn_clipped(result.clipped, 2);
    return result;
}

EmpiricalGramian gramian_def3(const ContinuousModel& model, const Matrix& C,
                              const GramianConfig& config) {
    const int n = model.n;
    config.validate(n, 3);
    require(C.cols() == n, "gramian_def3: output matrix size mismatch");

    const int v = static_cast<int>(config.T_set.size());
    const int s = static_cast<int>(config.scales.size());
    const int Q = config.segments;

    EmpiricalGramian result;
    result.definition = 3;
    result.matrix = Matrix::Zero(n, n);

    for (int l = 0; l < v; ++l) {
        const Matrix& T = config.T_set[l];
        for (int m = 0; m < s; ++m) {
            const double c = config.scales[m];
            std::vector<Matrix> Phi(Q + 1, Matrix::Zero(C.rows(), n));
            for (int i = 0; i < n; ++i) {
                const StateVector dir = c * T.col(i);
                StateVector xp = clip_to_bounds(model, config.x0 + dir, &result.clipped);
                StateVector xm = clip_to_bounds(model, config.x0 - dir, &result.clipped);
                const auto yp = output_samples(model, C, xp, config.dt, Q);
                const auto ym = output_samples(model, C, xm, config.dt, Q);
                for (int q = 0; q <= Q; ++q) Phi[q].col(i) = yp[q] - ym[q];
            }
            std::vector<Matrix> F(Q + 1);
            for (int q = 0; q <= Q; ++q) {
                F[q] = T * (Phi[q].transpose() * Phi[q]) * T.transpose();
            }
            result.matrix += trapezoid_sum(F, config.dt) / (4.0 * v * s * c * c);
        }
    }
    result.matrix = 0.5 * (result.matrix + result.matrix.transpose());
    warn_clipped(result.clipped, 3);
    return result;
}

Matrix analytic_linear_gramian(const Matrix& A, const Matrix& C, double tau) {
    require(A.rows() == A.cols(), "analytic_linear_gramian: A must be square");
    require(C.cols() == A.rows(), "analytic_linear_gramian: C size mismatch");
    require(A.allFinite() && C.allFinite(), "analytic_linear_gramian: non-finite input");
    const int n = static_cast<int>(A.rows());
    const Matrix CtC = C.transpose() * C;

    if (std::isinf(tau)) {
        Eigen::EigenSolver<Matrix> eig(A);
        for (int i = 0; i < n; ++i) {
            if (eig.eigenvalues()[i].real() >= 0.0) {
                throw DomainError(
                    "analytic_linear_gramian: tau = infinity requires a Hurwitz A");
            }
        }
        // Vectorized Lyapunov solve: (I (x) A^T + A^T (x) I) vec(W) = -vec(C^T C).
        Matrix K = Matrix::Zero(n * n, n * n);
        const Matrix At = A.transpose();
        for (int i = 0; i < n; ++i) {
            K.block(i * n, i * n, n, n) += At;
            for (int j = 0; j < n; ++j) {
                for (int k = 0; k < n; ++k) {
                    K(i * n + j, k * n + j) += At(i, k);
                }
            }
        }
        Eigen::VectorXd rhs(n * n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) rhs(i * n + j) = -CtC(j, i);
        }
        const Eigen::VectorXd w = K.partialPivLu().solve(rhs);
        Matrix W(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) W(j, i) = w(i * n + j);
        }
        return Matrix(0.5 * (W + W.transpose()));
    }

    require(tau > 0.0, "analytic_linear_gramian: tau must be positive");
    const int Q = 20000;  // Simpson, error O((tau/Q)^4)
    const double delta = tau / Q;
    const Matrix E_step = Matrix(delta * A).exp();
    Matrix E = Matrix::Identity(n, n);
    Matrix W = Matrix::Zero(n, n);
    for (int q = 0; q <= Q; ++q) {
        const double weight = (q == 0 || q == Q) ? 1.0 : (q % 2 == 1 ? 4.0 : 2.0);
        W += weight * (E.transpose() * CtC * E);
        if (q < Q) E = Matrix(E * E_step);
    }
    W *= delta / 3.0;
    return Matrix(0.5 * (W + W.transpose()));
}

std::vector<Matrix> random_orthogonal_set(int n, int v, std::uint64_t seed) {
    require(n >= 1 && v >= 1, "random_orthogonal_set: n and v must be >= 1");
    std::vector<Matrix> out;
    out.reserve(v);
    SplitRng rng(seed);
    for (int k = 0; k < v; ++k) {
        SplitRng sub = rng.split(k);
        Matrix G(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) G(i, j) = sub.normal();
        }
        Eigen::HouseholderQR<Matrix> qr(G);
        Matrix Q = qr.householderQ();
        // Column signs fixed so the diagonal is non-negative; the map from
        // seed to matrix is then unambiguous.
        for (int j = 0; j < n; ++j) {
            if (Q(j, j) < 0.0) Q.col(j) = -Q.col(j);
        }
        out.push_back(std::move(Q));
    }
    return out;
}

MaskObjective gramian_objective(const ContinuousModel& model, const GramianConfig& config,
                                int definition) {
    require(definition >= 1 && definition <= 3, "gramian_objective: definition must be 1..3");
    return [model, config, definition](const SensorMask& mask) {
        if (mask.count() == 0) {
            ObjectiveValue value;
            value.retained = 0;
            value.log_sum = -kInf;
            value.degenerate = true;
            return value;
        }
        const Matrix C = mask_to_selection_matrix(mask);
        EmpiricalGramian g;
        switch (definition) {
            case 1:
                g = gramian_def1(model, C, config);
                break;
            case 2:
                g = gramian_def2(model, C, config);
                break;
            default:
                g = gramian_def3(model, C, config);
                break;
        }
        return gram_objective_value(g.matrix, model.n);
    };
}

SelectionResult gramian_select(const ContinuousModel& model, const GramianConfig& config,
                               const SelectionConstraints& constraints, int definition,
                               SearchSolver solver, long budget, std::uint64_t seed) {
    const MaskObjective objective = gramian_objective(model, config, definition);
    SelectionResult result;
    switch (solver) {
        case SearchSolver::Exhaustive:
            result = select_exhaustive(objective, constraints, budget);
            break;
        case SearchSolver::Greedy:
            result = select_greedy(objective, constraints);
            break;
        case SearchSolver::Stochastic:
            result = select_stochastic(objective, constraints, budget, seed);
            break;
    }
    result.solver = "gramian-def" + std::to_string(definition) + "-" + result.solver;
    return result;
}

std::string gramian_csv(const EmpiricalGramian& gramian) {
    std::ostringstream os;
    for (long i = 0; i < gramian.matrix.rows(); ++i) {
        for (long j = 0; j < gramian.matrix.cols(); ++j) {
            if (j) os << ",";
            os << format_double(gramian.matrix(i, j));
        }
        os << "\n";
    }
    return os.str();
}

std::string gramian_eigenvalue_report(const EmpiricalGramian& gramian) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gramian.matrix);
    std::ostringstream os;
    os << "index,eigenvalue\n";
    for (int i = 0; i < eig.eigenvalues().size(); ++i) {
        os << i << "," << format_double(eig.eigenvalues()[i]) << "\n";
    }
    return os.str();
}

}  // namespace netobs
