#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netobs/model.hpp"

namespace netobs {

enum class Scheme { BE, TI, IRK };

const char* scheme_name(Scheme scheme);
std::optional<Scheme> parse_scheme(const std::string& name);

// Fixed-step implicit discretization of a continuous model.
struct DiscreteModel {
    ContinuousModel model;
    Scheme scheme = Scheme::IRK;
    double h = 0.0;
};

// Inner damped-Newton solve for the implicit step equations. Convergence:
// ||F||_inf <= atol * (1 + ||x_prev||_inf) + rtol * ||F_initial||_inf.
struct NewtonSettings {
    double rtol = 1e-12;
    double atol = 1e-14;
    int max_iterations = 50;
};

struct StepResult {
    StateVector x_next;
    StateVector stage1;  // IRK only
    StateVector stage2;  // IRK only
    int newton_iterations = 0;
    bool converged = false;
    double residual = 0.0;  // final ||F||_inf
};

struct Trajectory {
    std::vector<StateVector> states;  // x_0 .. x_{N-1}
    std::vector<std::pair<StateVector, StateVector>> stages;  // IRK, one per transition
    std::vector<double> times;
    double h = 0.0;
    Scheme scheme = Scheme::IRK;

    int length() const { return static_cast<int>(states.size()); }
};

// One implicit step. BE solves x = x_prev + h q(x); TI solves
// x = x_prev + h/2 (q(x) + q(x_prev)); IRK solves the coupled two-stage
// system and combines the stages. Throws StepFailure when Newton does not
// converge and SingularMatrixError when an inner linear solve breaks down.
StepResult step(const DiscreteModel& dm, const StateVector& x_prev,
                const NewtonSettings& settings = {});

// N states starting at x0 (N-1 steps). Step failures are rethrown with the
// failing step index attached.
Trajectory simulate(const DiscreteModel& dm, const StateVector& x0, int N,
                    const NewtonSettings& settings = {});

// Adaptive stiff integrator used only to generate "real" data: step-doubling
// error control on the IRK scheme with Richardson extrapolation, sampled at
// the given times (strictly increasing, times[0] = 0).
Trajectory reference_simulate(const ContinuousModel& model, const StateVector& x0,
                              const std::vector<double>& times, double rtol = 1e-10,
                              double atol = 1e-14);

// Trajectory CSV: header "t,<node names...>", 17 significant digits.
std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& names);

// Number of simulate() calls so far in this process; the cost-accounting
// checks read deltas of this counter around objective evaluations.
std::uint64_t simulation_count();

}  // namespace netobs
