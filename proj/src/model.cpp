#include "netobs/model.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace netobs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_state(const ContinuousModel& model, const StateVector& x, const char* op) {
    if (x.size() != model.n) {
        std::ostringstream os;
        os << op << ": state has length " << x.size() << ", model dimension is " << model.n;
        throw ContractError(os.str());
    }
    if (!x.allFinite()) throw ContractError(std::string(op) + ": state has non-finite entries");
}

// Vertical spring force on the first endpoint and its derivative with
// respect to dy = y_i - y_other. L = sqrt(d^2 + dy^2), force = -k (L - l0) dy / L.
struct SpringForce {
    double force;
    double dforce_ddy;
};

SpringForce spring_force(const MassSpringConfig::Spring& s, double dy) {
    const double k = s.stiffness;
    const double l0 = s.rest_length;
    const double d = s.horizontal_offset;
    if (l0 == 0.0) {
        // (L - 0) dy / L = dy exactly, for any d.
        return {-k * dy, -k};
    }
    const double L = std::sqrt(d * d + dy * dy);
    if (L < 1e-300) {
        throw DomainError(
            "mass-spring geometry singular: coincident spring endpoints with nonzero rest "
            "length");
    }
    const double force = -k * (L - l0) * dy / L;
    const double dforce = -k * (dy * dy / (L * L) + (L - l0) * d * d / (L * L * L));
    return {force, dforce};
}

double hill_term(double u, double m, double theta) {
    if (u <= 0.0) return 0.0;
    const double um = std::pow(u, m);
    const double tm = std::pow(theta, m);
    return um / (um + tm);
}

double hill_term_derivative(double u, double m, double theta) {
    if (u <= 0.0) return 0.0;
    const double um = std::pow(u, m);
    const double tm = std::pow(theta, m);
    const double denom = (um + tm) * (um + tm);
    return m * std::pow(u, m - 1.0) * tm / denom;
}

}  // namespace

StateVector eval_field(const ContinuousModel& model, const StateVector& x) {
    check_state(model, x, "eval_field");
    return model.field(x);
}

Matrix eval_field_jacobian(const ContinuousModel& model, const StateVector& x) {
    check_state(model, x, "eval_field_jacobian");
    return model.field_jacobian(x);
}

ContinuousModel make_mass_spring_model(const MassSpringConfig& cfg) {
    const int m = static_cast<int>(cfg.masses.size());
    require(m > 0, "mass-spring config needs at least one mass");
    for (const auto& mass : cfg.masses) {
        require(mass.mass > 0.0, "mass must be positive");
        require(mass.friction >= 0.0, "friction must be non-negative");
    }
    for (const auto& s : cfg.springs) {
        require(s.node_i >= 0 && s.node_i < m, "spring endpoint out of range");
        require(s.node_j < m, "spring endpoint out of range");
        require(s.stiffness >= 0.0, "spring stiffness must be non-negative");
        require(s.horizontal_offset >= 0.0, "spring horizontal offset must be non-negative");
        require(!(s.node_j >= 0 && s.node_j == s.node_i), "spring cannot connect a mass to itself");
    }

    auto cfg_ptr = std::make_shared<MassSpringConfig>(cfg);
    const int n = 2 * m;

    ContinuousModel model;
    model.n = n;
    for (int i = 0; i < m; ++i) model.node_names.push_back("y" + std::to_string(i + 1));
    for (int i = 0; i < m; ++i) model.node_names.push_back("v" + std::to_string(i + 1));
    model.lower_bounds = StateVector::Constant(n, -kInf);
    model.upper_bounds = StateVector::Constant(n, kInf);

    model.field = [cfg_ptr, m, n](const StateVector& x) {
        StateVector dx = StateVector::Zero(n);
        for (int i = 0; i < m; ++i) dx[i] = x[m + i];
        for (const auto& s : cfg_ptr->springs) {
            const double y_other = s.node_j >= 0 ? x[s.node_j] : s.anchor_height;
            const double dy = x[s.node_i] - y_other;
            const SpringForce f = spring_force(s, dy);
            dx[m + s.node_i] += f.force / cfg_ptr->masses[s.node_i].mass;
            if (s.node_j >= 0) dx[m + s.node_j] -= f.force / cfg_ptr->masses[s.node_j].mass;
        }
        for (int i = 0; i < m; ++i) {
            dx[m + i] -= cfg_ptr->masses[i].friction * x[m + i] / cfg_ptr->masses[i].mass;
        }
        return dx;
    };

    model.field_jacobian = [cfg_ptr, m, n](const StateVector& x) {
        Matrix J = Matrix::Zero(n, n);
        for (int i = 0; i < m; ++i) J(i, m + i) = 1.0;
        for (const auto& s : cfg_ptr->springs) {
            const double y_other = s.node_j >= 0 ? x[s.node_j] : s.anchor_height;
            const double dy = x[s.node_i] - y_other;
            const SpringForce f = spring_force(s, dy);
            const double mi = cfg_ptr->masses[s.node_i].mass;
            J(m + s.node_i, s.node_i) += f.dforce_ddy / mi;
            if (s.node_j >= 0) {
                const double mj = cfg_ptr->masses[s.node_j].mass;
                J(m + s.node_i, s.node_j) -= f.dforce_ddy / mi;
                J(m + s.node_j, s.node_i) -= f.dforce_ddy / mj;
                J(m + s.node_j, s.node_j) += f.dforce_ddy / mj;
            }
        }
        for (int i = 0; i < m; ++i) {
            J(m + i, m + i) -= cfg_ptr->masses[i].friction / cfg_ptr->masses[i].mass;
        }
        return J;
    };

    return model;
}

double mass_spring_energy(const MassSpringConfig& cfg, const StateVector& x) {
    const int m = static_cast<int>(cfg.masses.size());
    require(x.size() == 2 * m, "mass_spring_energy: state size mismatch");
    double energy = 0.0;
    for (int i = 0; i < m; ++i) {
        energy += 0.5 * cfg.masses[i].mass * x[m + i] * x[m + i];
    }
    for (const auto& s : cfg.springs) {
        const double y_other = s.node_j >= 0 ? x[s.node_j] : s.anchor_height;
        const double dy = x[s.node_i] - y_other;
        const double L = std::sqrt(s.horizontal_offset * s.horizontal_offset + dy * dy);
        const double stretch = L - s.rest_length;
        energy += 0.5 * s.stiffness * stretch * stretch;
    }
    return energy;
}

ContinuousModel make_hill_model(const HillNetworkConfig& cfg) {
    const int n = static_cast<int>(cfg.nodes.size());
    require(n > 0, "hill config needs at least one node");
    for (const auto& node : cfg.nodes) {
        require(node.decay > 0.0, "hill decay rate must be positive");
        for (const auto& in : node.inputs) {
            require(in.source >= 0 && in.source < n, "hill input source out of range");
            require(in.exponent > 0.0, "hill exponent must be positive");
            require(in.threshold > 0.0 && in.threshold < 1.0, "hill threshold must be in (0,1)");
        }
    }

    auto cfg_ptr = std::make_shared<HillNetworkConfig>(cfg);

    ContinuousModel model;
    model.n = n;
    for (int i = 0; i < n; ++i) {
        model.node_names.push_back(cfg.nodes[i].name.empty() ? "x" + std::to_string(i + 1)
                                                             : cfg.nodes[i].name);
    }
    model.lower_bounds = StateVector::Zero(n);
    model.upper_bounds = StateVector::Constant(n, 1.0);

    model.field = [cfg_ptr, n](const StateVector& x) {
        StateVector dx(n);
        for (int i = 0; i < n; ++i) {
            const auto& node = cfg_ptr->nodes[i];
            double production = 0.0;
            if (!node.inputs.empty()) {
                production = 1.0;
                for (const auto& in : node.inputs) {
                    const double h = hill_term(x[in.source], in.exponent, in.threshold);
                    production *= in.inhibitor ? 1.0 - h : h;
                }
            }
            dx[i] = production - node.decay * x[i];
        }
        return dx;
    };

    model.field_jacobian = [cfg_ptr, n](const StateVector& x) {
        Matrix J = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            const auto& node = cfg_ptr->nodes[i];
            const std::size_t t = node.inputs.size();
            for (std::size_t a = 0; a < t; ++a) {
                const auto& in = node.inputs[a];
                double dterm = hill_term_derivative(x[in.source], in.exponent, in.threshold);
                if (in.inhibitor) dterm = -dterm;
                double rest = 1.0;
                for (std::size_t b = 0; b < t; ++b) {
                    if (b == a) continue;
                    const auto& other = node.inputs[b];
                    const double h = hill_term(x[other.source], other.exponent, other.threshold);
                    rest *= other.inhibitor ? 1.0 - h : h;
                }
                J(i, in.source) += dterm * rest;
            }
            J(i, i) -= node.decay;
        }
        return J;
    };

    return model;
}

ContinuousModel make_linear_model(const Matrix& A, std::vector<std::string> names) {
    require(A.rows() == A.cols(), "linear model matrix must be square");
    const int n = static_cast<int>(A.rows());
    ContinuousModel model;
    model.n = n;
    if (names.empty()) {
        for (int i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
    }
    require(static_cast<int>(names.size()) == n, "linear model name count mismatch");
    model.node_names = std::move(names);
    model.lower_bounds = StateVector::Constant(n, -kInf);
    model.upper_bounds = StateVector::Constant(n, kInf);
    Matrix A_copy = A;
    model.field = [A_copy](const StateVector& x) -> StateVector { return A_copy * x; };
    model.field_jacobian = [A_copy](const StateVector&) { return A_copy; };
    return model;
}

ContinuousModel make_logistic_model() {
    ContinuousModel model;
    model.n = 1;
    model.node_names = {"x"};
    model.lower_bounds = StateVector::Constant(1, -kInf);
    model.upper_bounds = StateVector::Constant(1, kInf);
    model.field = [](const StateVector& x) {
        StateVector dx(1);
        dx[0] = x[0] * (1.0 - x[0]);
        return dx;
    };
    model.field_jacobian = [](const StateVector& x) {
        Matrix J(1, 1);
        J(0, 0) = 1.0 - 2.0 * x[0];
        return J;
    };
    return model;
}

}  // namespace netobs
