#include "netobs/estimator.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "netobs/csvio.hpp"

namespace netobs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

StateVector clamp_to_box(const StateVector& x, const StateVector& lo, const StateVector& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

struct Evaluation {
    StateVector g;
    Trajectory trajectory;
    double cost = kInf;  // ||g||^2
};

Evaluation evaluate_residual(const EstimationProblem& p, const StateVector& x0) {
    Evaluation ev;
    ev.trajectory = simulate(p.dm, x0, p.observations.N());
    const int r = p.observations.r();
    ev.g.resize(static_cast<long>(p.observations.N()) * r);
    for (int k = 0; k < p.observations.N(); ++k) {
        ev.g.segment(static_cast<long>(k) * r, r) =
            p.observations.y[k] - p.observations.C * ev.trajectory.states[k];
    }
    ev.cost = ev.g.squaredNorm();
    return ev;
}

// Dogleg point for min ||g + J p||, ||p|| <= radius, given the Gauss-Newton
// and Cauchy steps.
StateVector dogleg(const StateVector& p_gn, const StateVector& p_cauchy, double radius) {
    if (p_gn.norm() <= radius) return p_gn;
    const double pc_norm = p_cauchy.norm();
    if (pc_norm >= radius) return (radius / pc_norm) * p_cauchy;
    const StateVector d = p_gn - p_cauchy;
    const double a = d.squaredNorm();
    const double b = 2.0 * p_cauchy.dot(d);
    const double c = p_cauchy.squaredNorm() - radius * radius;
    const double disc = std::max(0.0, b * b - 4.0 * a * c);
    const double theta = a > 0.0 ? (-b + std::sqrt(disc)) / (2.0 * a) : 0.0;
    return p_cauchy + theta * d;
}

// Largest beta in (0, 1] with x + beta p inside the box; 1 if the full step
// stays feasible. Records which coordinates hit their bound at beta.
double step_to_boundary(const StateVector& x, const StateVector& p, const StateVector& lo,
                        const StateVector& hi, std::vector<int>* hits) {
    double beta = 1.0;
    for (int i = 0; i < x.size(); ++i) {
        if (p[i] > 0.0 && hi[i] < kInf) {
            beta = std::min(beta, (hi[i] - x[i]) / p[i]);
        } else if (p[i] < 0.0 && lo[i] > -kInf) {
            beta = std::min(beta, (lo[i] - x[i]) / p[i]);
        }
    }
    beta = std::max(0.0, beta);
    if (hits) {
        hits->clear();
        for (int i = 0; i < x.size(); ++i) {
            const double xi = x[i] + beta * p[i];
            if ((p[i] > 0.0 && hi[i] < kInf && xi >= hi[i] - 1e-14 * (1.0 + std::abs(hi[i]))) ||
                (p[i] < 0.0 && lo[i] > -kInf && xi <= lo[i] + 1e-14 * (1.0 + std::abs(lo[i])))) {
                hits->push_back(i);
            }
        }
    }
    return beta;
}

}  // namespace

void validate_observation_set(const ObservationSet& obs, int n) {
    require(obs.C.cols() == n, "observation set: C column count does not match model");
    for (int i = 0; i < obs.C.rows(); ++i) {
        int ones = 0;
        for (int j = 0; j < obs.C.cols(); ++j) {
            const double v = obs.C(i, j);
            if (v == 1.0)
                ++ones;
            else if (v != 0.0)
                throw ContractError("observation set: C entries must be 0 or 1");
        }
        require(ones == 1, "observation set: each C row needs exactly one entry equal to 1");
    }
    for (const StateVector& yk : obs.y) {
        require(yk.size() == obs.C.rows(), "observation set: sample size does not match C");
    }
    require(obs.h > 0.0, "observation set: h must be positive");
}

EstimationProblem make_estimation_problem(ObservationSet observations, DiscreteModel dm,
                                          StateVector initial_guess) {
    validate_observation_set(observations, dm.model.n);
    require(initial_guess.size() == dm.model.n, "estimation problem: guess size mismatch");
    EstimationProblem p;
    p.lower_bounds = dm.model.lower_bounds;
    p.upper_bounds = dm.model.upper_bounds;
    for (int i = 0; i < dm.model.n; ++i) {
        require(initial_guess[i] >= p.lower_bounds[i] && initial_guess[i] <= p.upper_bounds[i],
                "estimation problem: initial guess violates bounds");
    }
    p.observations = std::move(observations);
    p.dm = std::move(dm);
    p.initial_guess = std::move(initial_guess);
    return p;
}

StateVector residual(const EstimationProblem& problem, const StateVector& x0) {
    require(x0.size() == problem.dm.model.n, "residual: state size mismatch");
    if (!x0.allFinite()) throw ContractError("residual: non-finite state");
    return evaluate_residual(problem, x0).g;
}

EstimationResult estimate_initial_state(const EstimationProblem& problem,
                                        const StateVector* x0_true) {
    const int n = problem.dm.model.n;
    const StateVector& lo = problem.lower_bounds;
    const StateVector& hi = problem.upper_bounds;
    const SolverSettings& s = problem.settings;
    const int N = problem.observations.N();
    const int r = problem.observations.r();

    EstimationResult result;
    result.shape_ok = static_cast<long>(N) * r >= n;

    StateVector x = clamp_to_box(problem.initial_guess, lo, hi);
    Evaluation cur = evaluate_residual(problem, x);
    JacobianStack stack =
        stack_from_trajectory(problem.dm, cur.trajectory, problem.observations.C, true);

    double radius = s.initial_radius;
    result.trace.push_back({0, cur.g.norm(), radius, 0.0, true});

    int iter = 0;
    while (iter < s.max_iterations) {
        ++iter;

        const StateVector grad = 2.0 * stack.full.transpose() * cur.g;
        StateVector pg = grad;
        for (int i = 0; i < n; ++i) {
            if (x[i] <= lo[i] && grad[i] > 0.0) pg[i] = 0.0;
            if (x[i] >= hi[i] && grad[i] < 0.0) pg[i] = 0.0;
        }
        if (pg.lpNorm<Eigen::Infinity>() < s.gradient_tol) {
            result.converged = true;
            break;
        }

        // Unconstrained dogleg step from the Gauss-Newton and Cauchy points.
        const StateVector p_gn = stack.full.colPivHouseholderQr().solve(-cur.g);
        const StateVector jg = stack.full * grad;
        const double jg2 = jg.squaredNorm();
        const StateVector p_cauchy =
            jg2 > 0.0 ? StateVector(-(grad.squaredNorm() / (2.0 * jg2)) * grad)
                      : StateVector(StateVector::Zero(n));
        const StateVector p = dogleg(p_gn, p_cauchy, radius);

        // Candidate feasible steps: truncated, reflected, and clamped.
        std::vector<StateVector> candidates;
        std::vector<int> hits;
        const double beta = step_to_boundary(x, p, lo, hi, &hits);
        if (beta >= 1.0) {
            candidates.push_back(p);
        } else {
            candidates.push_back(0.995 * beta * p);
            // Reflect the remaining fraction off the bounds that were hit.
            StateVector d = (1.0 - beta) * p;
            for (int i : hits) d[i] = -d[i];
            const StateVector y = x + beta * p;
            const double beta2 = step_to_boundary(y, d, lo, hi, nullptr);
            candidates.push_back(StateVector(y + 0.995 * beta2 * d - x));
        }
        candidates.push_back(clamp_to_box(x + p, lo, hi) - x);

        double best_model = kInf;
        StateVector p_best = StateVector::Zero(n);
        for (const StateVector& cand : candidates) {
            const double m = (cur.g + stack.full * cand).squaredNorm();
            if (m < best_model) {
                best_model = m;
                p_best = cand;
            }
        }
        const double predicted = cur.cost - best_model;

        if (!(predicted > 0.0)) {
            radius *= s.shrink;
            result.trace.push_back({iter, cur.g.norm(), radius, 0.0, false});
            if (radius < 1e-13 * (1.0 + x.norm())) break;
            continue;
        }

        const StateVector x_trial = clamp_to_box(x + p_best, lo, hi);
        const double step_norm = (x_trial - x).norm();

        double trial_cost = kInf;
        Evaluation trial;
        bool trial_ok = false;
        try {
            trial = evaluate_residual(problem, x_trial);
            trial_cost = trial.cost;
            trial_ok = true;
        } catch (const Error&) {
            // Divergent implicit step at a wild iterate: infinite objective.
        }

        const double rho = (cur.cost - trial_cost) / predicted;
        const bool accepted = trial_ok && rho > s.accept_ratio;

        if (accepted) {
            x = x_trial;
            cur = std::move(trial);
            stack = stack_from_trajectory(problem.dm, cur.trajectory, problem.observations.C,
                                          true);
        }
        result.trace.push_back({iter, cur.g.norm(), radius, step_norm, accepted});

        if (accepted && step_norm < s.step_tol * (1.0 + x.norm())) {
            result.converged = true;
            break;
        }

        if (rho < 0.25) {
            radius *= s.shrink;
        } else if (rho > 0.75 && p_best.norm() >= 0.99 * radius) {
            radius *= s.expand;
        }
        if (radius < 1e-13 * (1.0 + x.norm())) break;
    }

    result.iterations = iter;
    result.x0_hat = x;
    result.residual_norm = cur.g.norm();
    const RankInfo info = rank_check(stack);
    result.rank = info.rank;
    result.kappa = info.kappa;
    result.rank_ok = info.ok;
    if (x0_true) result.eta = estimation_error(x, *x0_true);
    return result;
}

double estimation_error(const StateVector& x0_hat, const StateVector& x0_true) {
    const double denom = x0_true.norm();
    if (denom == 0.0) throw DomainError("estimation_error: true state has zero norm");
    return (x0_hat - x0_true).norm() / denom;
}

std::vector<double> trajectory_error(const Trajectory& traj, const Trajectory& reference) {
    require(traj.states.size() == reference.states.size(),
            "trajectory_error: length mismatch");
    std::vector<double> xi(traj.states.size());
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const double denom = reference.states[k].norm();
        xi[k] = denom == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                             : (traj.states[k] - reference.states[k]).norm() / denom;
    }
    return xi;
}

RankInfo rank_check(const JacobianStack& stack) {
    Eigen::JacobiSVD<Matrix> svd(stack.full);
    const Eigen::VectorXd& sigma = svd.singularValues();
    RankInfo info;
    if (sigma.size() == 0) return info;
    const double sigma_max = sigma[0];
    const double threshold = std::max(stack.full.rows(), stack.full.cols()) *
                             std::numeric_limits<double>::epsilon() * sigma_max;
    double sigma_min = 0.0;
    for (int i = 0; i < sigma.size(); ++i) {
        if (sigma[i] > threshold) {
            info.rank = i + 1;
            sigma_min = sigma[i];
        }
    }
    info.kappa = (info.rank > 0 && sigma_min > 0.0) ? sigma_max / sigma_min : kInf;
    info.ok = info.rank == stack.n;
    return info;
}

std::string estimation_report_csv(const EstimationResult& result,
                                  const std::vector<std::string>& names) {
    std::ostringstream os;
    os << "node,x0_hat\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        os << names[i] << "," << format_double(result.x0_hat[static_cast<long>(i)]) << "\n";
    }
    os << "\n";
    os << "metric,value\n";
    if (result.eta) os << "eta," << format_double(*result.eta) << "\n";
    os << "iterations," << result.iterations << "\n";
    os << "residual_norm," << format_double(result.residual_norm) << "\n";
    os << "kappa," << format_double(result.kappa) << "\n";
    os << "rank," << result.rank << "\n";
    os << "rank_ok," << (result.rank_ok ? 1 : 0) << "\n";
    os << "shape_ok," << (result.shape_ok ? 1 : 0) << "\n";
    os << "converged," << (result.converged ? 1 : 0) << "\n";
    return os.str();
}

}  // namespace netobs
