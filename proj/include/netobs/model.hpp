#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "netobs/errors.hpp"

namespace netobs {

using StateVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Continuous-time network model dx/dt = field(x) with an analytic Jacobian
// and elementwise state bounds (+-inf where unconstrained). Immutable after
// construction; evaluation is pure and safe from concurrent threads.
struct ContinuousModel {
    int n = 0;
    std::vector<std::string> node_names;
    std::function<StateVector(const StateVector&)> field;
    std::function<Matrix(const StateVector&)> field_jacobian;
    StateVector lower_bounds;
    StateVector upper_bounds;
};

StateVector eval_field(const ContinuousModel& model, const StateVector& x);
Matrix eval_field_jacobian(const ContinuousModel& model, const StateVector& x);

// Point masses moving vertically, coupled by planar linear springs.
// A spring endpoint is either another mass or a fixed anchor; the horizontal
// offset between endpoints makes the vertical force law nonlinear whenever
// the rest length or offset is nonzero.
struct MassSpringConfig {
    struct Mass {
        double mass = 1.0;       // kg
        double position = 0.0;   // m, initial vertical position
        double velocity = 0.0;   // m/s
        double friction = 0.0;   // kg/s
    };
    struct Spring {
        int node_i = 0;
        int node_j = -1;              // -1: anchored at anchor_height
        double anchor_height = 0.0;   // m, used when node_j < 0
        double stiffness = 1.0;       // N/m
        double rest_length = 0.0;     // m
        double horizontal_offset = 0.0;  // m
    };
    std::vector<Mass> masses;
    std::vector<Spring> springs;
};

// State layout: (y_1..y_m, v_1..v_m).
ContinuousModel make_mass_spring_model(const MassSpringConfig& cfg);

// Gene-regulatory style dynamics: each node decays at rate gamma and is
// produced at the product of Hill terms over its inputs (activators use
// h(u) = u^m / (u^m + theta^m), inhibitors 1 - h(u)). A node without inputs
// has zero production.
struct HillNetworkConfig {
    struct Input {
        int source = 0;
        double exponent = 2.0;
        double threshold = 0.5;
        bool inhibitor = false;
    };
    struct Node {
        std::string name;
        double decay = 1.0;
        std::vector<Input> inputs;
    };
    std::vector<Node> nodes;
};

ContinuousModel make_hill_model(const HillNetworkConfig& cfg);

// dx/dt = A x, unbounded; test and demo helper.
ContinuousModel make_linear_model(const Matrix& A, std::vector<std::string> names = {});

// Scalar dx/dt = x (1 - x).
ContinuousModel make_logistic_model();

// Total mechanical energy (kinetic + spring potential) of a mass-spring
// state; used by dissipation checks.
double mass_spring_energy(const MassSpringConfig& cfg, const StateVector& x);

}  // namespace netobs
