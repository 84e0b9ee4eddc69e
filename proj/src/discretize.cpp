#include "netobs/discretize.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

#include "netobs/csvio.hpp"

namespace netobs {

namespace {

std::atomic<std::uint64_t> g_simulation_count{0};

// F(u) and dF/du for the scheme's implicit equation; u is the Newton unknown
// (the next state for BE/TI, the stacked stage pair for IRK).
struct ImplicitSystem {
    const DiscreteModel& dm;
    const StateVector& x_prev;
    StateVector q_prev;  // TI only

    int unknowns() const { return dm.scheme == Scheme::IRK ? 2 * dm.model.n : dm.model.n; }

    StateVector initial_guess() const {
        if (dm.scheme != Scheme::IRK) return x_prev;
        StateVector u(2 * dm.model.n);
        u.head(dm.model.n) = x_prev;
        u.tail(dm.model.n) = x_prev;
        return u;
    }

    StateVector residual(const StateVector& u) const {
        const double h = dm.h;
        const int n = dm.model.n;
        switch (dm.scheme) {
            case Scheme::BE:
                return u - x_prev - h * dm.model.field(u);
            case Scheme::TI:
                return u - x_prev - 0.5 * h * (dm.model.field(u) + q_prev);
            case Scheme::IRK: {
                const StateVector z1 = u.head(n);
                const StateVector z2 = u.tail(n);
                const StateVector q1 = dm.model.field(z1);
                const StateVector q2 = dm.model.field(z2);
                StateVector f(2 * n);
                f.head(n) = z1 - x_prev - (h / 4.0) * (q1 - q2);
                f.tail(n) = z2 - x_prev - (h / 12.0) * (3.0 * q1 + 5.0 * q2);
                return f;
            }
        }
        return {};
    }

    Matrix jacobian(const StateVector& u) const {
        const double h = dm.h;
        const int n = dm.model.n;
        switch (dm.scheme) {
            case Scheme::BE:
                return Matrix::Identity(n, n) - h * dm.model.field_jacobian(u);
            case Scheme::TI:
                return Matrix::Identity(n, n) - 0.5 * h * dm.model.field_jacobian(u);
            case Scheme::IRK: {
                const Matrix J1 = dm.model.field_jacobian(u.head(n));
                const Matrix J2 = dm.model.field_jacobian(u.tail(n));
                Matrix J(2 * n, 2 * n);
                J.topLeftCorner(n, n) = Matrix::Identity(n, n) - (h / 4.0) * J1;
                J.topRightCorner(n, n) = (h / 4.0) * J2;
                J.bottomLeftCorner(n, n) = -(h / 4.0) * J1;
                J.bottomRightCorner(n, n) = Matrix::Identity(n, n) - (5.0 * h / 12.0) * J2;
                return J;
            }
        }
        return {};
    }
};

}  // namespace

const char* scheme_name(Scheme scheme) {
    switch (scheme) {
        case Scheme::BE:
            return "be";
        case Scheme::TI:
            return "ti";
        case Scheme::IRK:
            return "irk";
    }
    return "?";
}

std::optional<Scheme> parse_scheme(const std::string& name) {
    if (name == "be" || name == "BE") return Scheme::BE;
    if (name == "ti" || name == "TI") return Scheme::TI;
    if (name == "irk" || name == "IRK") return Scheme::IRK;
    return std::nullopt;
}

StepResult step(const DiscreteModel& dm, const StateVector& x_prev,
                const NewtonSettings& settings) {
    require(dm.h > 0.0 && std::isfinite(dm.h), "step: h must be positive and finite");
    require(x_prev.size() == dm.model.n, "step: state size mismatch");
    if (!x_prev.allFinite()) throw ContractError("step: non-finite previous state");

    ImplicitSystem sys{dm, x_prev, {}};
    if (dm.scheme == Scheme::TI) sys.q_prev = dm.model.field(x_prev);

    StateVector u = sys.initial_guess();
    StateVector f = sys.residual(u);
    const double tol =
        settings.atol * (1.0 + x_prev.lpNorm<Eigen::Infinity>()) +
        settings.rtol * f.lpNorm<Eigen::Infinity>();

    StepResult result;
    const int n = dm.model.n;
    int iterations = 0;
    double fnorm = f.lpNorm<Eigen::Infinity>();

    while (fnorm > tol && iterations < settings.max_iterations) {
        const Matrix J = sys.jacobian(u);
        Eigen::PartialPivLU<Matrix> lu(J);
        const StateVector delta = lu.solve(-f);
        if (!delta.allFinite()) {
            throw SingularMatrixError("step: singular Newton matrix");
        }
        // Full step first, halving on residual increase.
        double lambda = 1.0;
        bool improved = false;
        StateVector u_trial, f_trial;
        for (int ls = 0; ls < 30; ++ls) {
            u_trial = u + lambda * delta;
            f_trial = sys.residual(u_trial);
            const double trial_norm =
                f_trial.allFinite() ? f_trial.lpNorm<Eigen::Infinity>()
                                    : std::numeric_limits<double>::infinity();
            if (trial_norm < fnorm) {
                improved = true;
                u = u_trial;
                f = f_trial;
                fnorm = trial_norm;
                break;
            }
            lambda *= 0.5;
        }
        ++iterations;
        if (!improved) break;
    }

    result.newton_iterations = iterations;
    result.residual = fnorm;
    result.converged = fnorm <= tol;
    if (!result.converged) {
        std::ostringstream os;
        os << "implicit " << scheme_name(dm.scheme) << " step did not converge after "
           << iterations << " Newton iterations (residual " << fnorm << ", tolerance " << tol
           << ")";
        throw StepFailure(os.str(), -1, fnorm);
    }

    if (dm.scheme == Scheme::IRK) {
        result.stage1 = u.head(n);
        result.stage2 = u.tail(n);
        const StateVector q1 = dm.model.field(result.stage1);
        const StateVector q2 = dm.model.field(result.stage2);
        result.x_next = x_prev + (dm.h / 4.0) * (q1 + 3.0 * q2);
    } else {
        result.x_next = u;
    }
    return result;
}

Trajectory simulate(const DiscreteModel& dm, const StateVector& x0, int N,
                    const NewtonSettings& settings) {
    require(N >= 1, "simulate: N must be >= 1");
    require(x0.size() == dm.model.n, "simulate: state size mismatch");
    g_simulation_count.fetch_add(1, std::memory_order_relaxed);

    Trajectory traj;
    traj.h = dm.h;
    traj.scheme = dm.scheme;
    traj.states.reserve(N);
    traj.times.reserve(N);
    traj.states.push_back(x0);
    traj.times.push_back(0.0);
    for (int k = 1; k < N; ++k) {
        try {
            StepResult r = step(dm, traj.states.back(), settings);
            if (dm.scheme == Scheme::IRK) {
                traj.stages.emplace_back(std::move(r.stage1), std::move(r.stage2));
            }
            traj.states.push_back(std::move(r.x_next));
            traj.times.push_back(k * dm.h);
        } catch (const StepFailure& e) {
            std::ostringstream os;
            os << "simulate: step " << k << " failed: " << e.what();
            throw StepFailure(os.str(), k, e.residual());
        }
    }
    return traj;
}

Trajectory reference_simulate(const ContinuousModel& model, const StateVector& x0,
                              const std::vector<double>& times, double rtol, double atol) {
    require(!times.empty(), "reference_simulate: empty time grid");
    require(times.front() == 0.0, "reference_simulate: times must start at 0");
    for (std::size_t i = 1; i < times.size(); ++i) {
        require(times[i] > times[i - 1], "reference_simulate: times must be strictly increasing");
    }
    require(x0.size() == model.n, "reference_simulate: state size mismatch");
    g_simulation_count.fetch_add(1, std::memory_order_relaxed);

    Trajectory traj;
    traj.scheme = Scheme::IRK;
    traj.h = 0.0;  // adaptive
    traj.times = times;
    traj.states.reserve(times.size());
    traj.states.push_back(x0);

    constexpr int kOrder = 3;  // IRK local order; doubled-step error ~ diff / (2^p - 1)
    const double span = times.back();
    if (span == 0.0) return traj;

    StateVector x = x0;
    double t = 0.0;
    double h = span / 100.0;
    NewtonSettings newton;

    for (std::size_t target_idx = 1; target_idx < times.size(); ++target_idx) {
        const double target = times[target_idx];
        while (t < target) {
            h = std::min(h, target - t);
            const double h_min = 16.0 * std::numeric_limits<double>::epsilon() *
                                 std::max(std::abs(t), std::abs(target));
            if (h < h_min) {
                throw IntegrationFailure(
                    "reference_simulate: step size underflow; tolerance unreachable");
            }

            DiscreteModel full{model, Scheme::IRK, h};
            DiscreteModel half{model, Scheme::IRK, h / 2.0};
            StateVector coarse, fine;
            try {
                coarse = step(full, x, newton).x_next;
                fine = step(half, step(half, x, newton).x_next, newton).x_next;
            } catch (const Error&) {
                h *= 0.25;
                continue;
            }

            double scaled_err = 0.0;
            for (int i = 0; i < model.n; ++i) {
                const double scale =
                    atol + rtol * std::max(std::abs(x[i]), std::abs(fine[i]));
                const double local = std::abs(fine[i] - coarse[i]) / ((std::pow(2.0, kOrder) - 1.0) * scale);
                scaled_err = std::max(scaled_err, local);
            }

            if (scaled_err <= 1.0) {
                // Accept with Richardson extrapolation (one extra order).
                x = fine + (fine - coarse) / (std::pow(2.0, kOrder) - 1.0);
                t += h;
                const double grow =
                    scaled_err > 0.0 ? 0.9 * std::pow(scaled_err, -1.0 / (kOrder + 1)) : 5.0;
                h *= std::min(5.0, std::max(1.0, grow));
            } else {
                h *= std::max(0.1, 0.9 * std::pow(scaled_err, -1.0 / (kOrder + 1)));
            }
        }
        traj.states.push_back(x);
    }
    return traj;
}

std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& names) {
    std::ostringstream os;
    os << "t";
    for (const auto& name : names) os << "," << name;
    os << "\n";
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        os << format_double(traj.times[k]);
        for (int i = 0; i < traj.states[k].size(); ++i) {
            os << "," << format_double(traj.states[k][i]);
        }
        os << "\n";
    }
    return os.str();
}

std::uint64_t simulation_count() { return g_simulation_count.load(std::memory_order_relaxed); }

}  // namespace netobs
