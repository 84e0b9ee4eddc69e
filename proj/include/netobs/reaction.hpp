#pragma once

#include <optional>
#include <string>
#include <vector>

#include "netobs/model.hpp"

namespace netobs {

// Rate constant, either given directly or as modified-Arrhenius parameters
// evaluated at the mechanism's fixed temperature.
struct RateSpec {
    double value = 0.0;  // used when !arrhenius
    struct Arrhenius {
        double A = 0.0;   // pre-exponential
        double b = 0.0;   // temperature exponent
        double Ea = 0.0;  // activation energy, J/mol
    };
    std::optional<Arrhenius> arrhenius;

    double resolve(double temperature) const;
};

struct Reaction {
    std::vector<int> alpha;  // reactant stoichiometry, one entry per species
    std::vector<int> beta;   // product stoichiometry
    RateSpec forward;
    RateSpec backward;
};

struct ReactionMechanism {
    std::vector<std::string> species;
    std::vector<Reaction> reactions;
    double temperature = 300.0;                // K, fixed
    std::vector<StateVector> conservation;     // atom-balance rows, optional
    double recommended_h = 0.0;                // 0 = unspecified
    std::optional<StateVector> default_initial;

    int n() const { return static_cast<int>(species.size()); }
    int n_r() const { return static_cast<int>(reactions.size()); }
};

// Modified Arrhenius law k = A T^b exp(-Ea / (R T)), R = 8.314462618 J/(mol K).
double arrhenius_rate(double A, double b, double Ea, double temperature);

// Stoichiometry matrix Gamma (n x n_r) with entries beta_ji - alpha_ji.
Matrix stoichiometry_matrix(const ReactionMechanism& mech);

// dx/dt = Gamma q_c(x) with q_j = kf_j prod_i x_i^alpha_ji - kr_j prod_i x_i^beta_ji.
// Lower bounds are zero (concentrations); the analytic Jacobian uses the
// monomial power rule with zero-exponent terms dropped.
ContinuousModel mechanism_to_model(const ReactionMechanism& mech);

ReactionMechanism load_mechanism(const std::string& path);

}  // namespace netobs
