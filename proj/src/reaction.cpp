#include "netobs/reaction.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "netobs/kvfile.hpp"

namespace netobs {

namespace {

constexpr double kGasConstant = 8.314462618;  // J/(mol K)
constexpr int kMaxStoichiometry = 6;

double ipow(double x, int e) {
    double out = 1.0;
    for (int i = 0; i < e; ++i) out *= x;
    return out;
}

struct CompiledReaction {
    std::vector<int> alpha;
    std::vector<int> beta;
    double kf = 0.0;
    double kr = 0.0;
};

RateSpec parse_rate(const KvValue& v, const std::string& context) {
    RateSpec rate;
    if (v.kind == KvValue::Kind::Number) {
        rate.value = v.as_number(context);
        if (rate.value < 0.0)
            throw ParseError(context + ": rate constant must be non-negative");
        return rate;
    }
    RateSpec::Arrhenius arr;
    bool have_a = false, have_b = false, have_ea = false;
    for (const auto& [key, val] : v.as_map(context)) {
        if (key == "A") {
            arr.A = val.as_number(context + ".A");
            have_a = true;
        } else if (key == "b") {
            arr.b = val.as_number(context + ".b");
            have_b = true;
        } else if (key == "Ea") {
            arr.Ea = val.as_number(context + ".Ea");
            have_ea = true;
        } else {
            throw ParseError(context + ": unknown rate key '" + key +
                             "' (expected A, b, Ea)");
        }
    }
    if (!have_a || !have_b || !have_ea)
        throw ParseError(context + ": Arrhenius rate needs all of A, b, Ea");
    rate.arrhenius = arr;
    return rate;
}

std::vector<int> parse_stoichiometry(const KvValue& v, const std::vector<std::string>& species,
                                     const std::string& context) {
    std::vector<int> coeffs(species.size(), 0);
    for (const auto& [name, val] : v.as_map(context)) {
        int index = -1;
        for (std::size_t i = 0; i < species.size(); ++i) {
            if (species[i] == name) {
                index = static_cast<int>(i);
                break;
            }
        }
        if (index < 0) {
            std::ostringstream os;
            os << context << ": line " << val.line << ": undeclared species '" << name << "'";
            throw ParseError(os.str());
        }
        const long c = val.as_integer(context + "." + name);
        if (c < 0 || c > kMaxStoichiometry) {
            std::ostringstream os;
            os << context << ": stoichiometric coefficient for '" << name
               << "' must be an integer in [0, " << kMaxStoichiometry << "]";
            throw ParseError(os.str());
        }
        coeffs[index] = static_cast<int>(c);
    }
    return coeffs;
}

}  // namespace

double arrhenius_rate(double A, double b, double Ea, double temperature) {
    if (temperature <= 0.0) throw DomainError("arrhenius_rate: temperature must be positive");
    return A * std::pow(temperature, b) * std::exp(-Ea / (kGasConstant * temperature));
}

double RateSpec::resolve(double temperature) const {
    if (!arrhenius) return value;
    return arrhenius_rate(arrhenius->A, arrhenius->b, arrhenius->Ea, temperature);
}

Matrix stoichiometry_matrix(const ReactionMechanism& mech) {
    Matrix gamma = Matrix::Zero(mech.n(), mech.n_r());
    for (int j = 0; j < mech.n_r(); ++j) {
        const Reaction& r = mech.reactions[j];
        for (int i = 0; i < mech.n(); ++i) {
            gamma(i, j) = static_cast<double>(r.beta[i] - r.alpha[i]);
        }
    }
    return gamma;
}

ContinuousModel mechanism_to_model(const ReactionMechanism& mech) {
    const int n = mech.n();
    const int n_r = mech.n_r();
    require(n > 0, "mechanism has no species");

    auto compiled = std::make_shared<std::vector<CompiledReaction>>();
    compiled->reserve(n_r);
    for (const Reaction& r : mech.reactions) {
        require(static_cast<int>(r.alpha.size()) == n && static_cast<int>(r.beta.size()) == n,
                "reaction stoichiometry size mismatch");
        CompiledReaction c;
        c.alpha = r.alpha;
        c.beta = r.beta;
        c.kf = r.forward.resolve(mech.temperature);
        c.kr = r.backward.resolve(mech.temperature);
        require(c.kf >= 0.0 && c.kr >= 0.0, "reaction rates must be non-negative");
        compiled->push_back(std::move(c));
    }
    const Matrix gamma = stoichiometry_matrix(mech);

    ContinuousModel model;
    model.n = n;
    model.node_names = mech.species;
    model.lower_bounds = StateVector::Zero(n);
    model.upper_bounds = StateVector::Constant(n, std::numeric_limits<double>::infinity());

    model.field = [compiled, gamma, n, n_r](const StateVector& x) -> StateVector {
        Eigen::VectorXd q(n_r);
        for (int j = 0; j < n_r; ++j) {
            const CompiledReaction& r = (*compiled)[j];
            double fwd = r.kf;
            double bwd = r.kr;
            for (int i = 0; i < n; ++i) {
                if (r.alpha[i] > 0) fwd *= ipow(x[i], r.alpha[i]);
                if (r.beta[i] > 0) bwd *= ipow(x[i], r.beta[i]);
            }
            q[j] = fwd - bwd;
        }
        return gamma * q;
    };

    model.field_jacobian = [compiled, gamma, n, n_r](const StateVector& x) {
        Matrix dq = Matrix::Zero(n_r, n);
        for (int j = 0; j < n_r; ++j) {
            const CompiledReaction& r = (*compiled)[j];
            for (int i = 0; i < n; ++i) {
                double dfwd = 0.0;
                if (r.alpha[i] > 0) {
                    dfwd = r.kf * r.alpha[i] * ipow(x[i], r.alpha[i] - 1);
                    for (int u = 0; u < n; ++u) {
                        if (u != i && r.alpha[u] > 0) dfwd *= ipow(x[u], r.alpha[u]);
                    }
                }
                double dbwd = 0.0;
                if (r.beta[i] > 0) {
                    dbwd = r.kr * r.beta[i] * ipow(x[i], r.beta[i] - 1);
                    for (int u = 0; u < n; ++u) {
                        if (u != i && r.beta[u] > 0) dbwd *= ipow(x[u], r.beta[u]);
                    }
                }
                dq(j, i) = dfwd - dbwd;
            }
        }
        return Matrix(gamma * dq);
    };

    return model;
}

ReactionMechanism load_mechanism(const std::string& path) {
    const KvDocument doc = parse_kv_file(path);
    ReactionMechanism mech;

    for (const auto& [key, value] : doc.root.entries) {
        if (key == "type") {
            const std::string& t = value.as_string("type");
            if (t != "reaction")
                throw ParseError(path + ": expected type \"reaction\", got \"" + t + "\"");
        } else if (key == "species") {
            for (const KvValue& s : value.as_array("species")) {
                mech.species.push_back(s.as_string("species entry"));
            }
        } else if (key == "temperature") {
            mech.temperature = value.as_number("temperature");
        } else if (key == "recommended_h") {
            mech.recommended_h = value.as_number("recommended_h");
        } else if (key == "initial") {
            std::vector<double> x0;
            for (const KvValue& s : value.as_array("initial"))
                x0.push_back(s.as_number("initial entry"));
            mech.default_initial =
                Eigen::Map<const StateVector>(x0.data(), static_cast<long>(x0.size()));
        } else if (key == "conservation") {
            for (const KvValue& row : value.as_array("conservation")) {
                std::vector<double> w;
                for (const KvValue& entry : row.as_array("conservation row"))
                    w.push_back(entry.as_number("conservation entry"));
                mech.conservation.push_back(
                    Eigen::Map<const StateVector>(w.data(), static_cast<long>(w.size())));
            }
        } else {
            throw ParseError(path + ": unknown top-level key '" + key + "'");
        }
    }

    if (mech.species.empty()) throw ParseError(path + ": species list is missing or empty");
    for (std::size_t i = 0; i < mech.species.size(); ++i) {
        for (std::size_t j = i + 1; j < mech.species.size(); ++j) {
            if (mech.species[i] == mech.species[j])
                throw ParseError(path + ": duplicate species '" + mech.species[i] + "'");
        }
    }
    if (mech.temperature <= 0.0) throw ParseError(path + ": temperature must be positive");

    for (const KvTable* table : doc.tables_named("reaction")) {
        Reaction r;
        r.alpha.assign(mech.species.size(), 0);
        r.beta.assign(mech.species.size(), 0);
        bool have_kf = false;
        for (const auto& [key, value] : table->entries) {
            std::ostringstream ctx;
            ctx << path << ": [[reaction]] at line " << table->line;
            if (key == "reactants") {
                r.alpha = parse_stoichiometry(value, mech.species, ctx.str() + ": reactants");
            } else if (key == "products") {
                r.beta = parse_stoichiometry(value, mech.species, ctx.str() + ": products");
            } else if (key == "kf") {
                r.forward = parse_rate(value, ctx.str() + ": kf");
                have_kf = true;
            } else if (key == "kr") {
                r.backward = parse_rate(value, ctx.str() + ": kr");
            } else {
                throw ParseError(ctx.str() + ": unknown key '" + key + "'");
            }
        }
        bool any_nonzero = false;
        for (std::size_t i = 0; i < mech.species.size(); ++i) {
            if (r.alpha[i] != 0 || r.beta[i] != 0) any_nonzero = true;
        }
        std::ostringstream ctx;
        ctx << path << ": [[reaction]] at line " << table->line;
        if (!any_nonzero)
            throw ParseError(ctx.str() + ": reaction has no reactants or products");
        if (!have_kf) throw ParseError(ctx.str() + ": missing forward rate 'kf'");
        mech.reactions.push_back(std::move(r));
    }

    for (const KvTable& t : doc.tables) {
        if (t.name != "reaction")
            throw ParseError(path + ": unknown table [[" + t.name + "]]");
    }

    for (const StateVector& w : mech.conservation) {
        if (w.size() != mech.n())
            throw ParseError(path + ": conservation row length does not match species count");
    }

    return mech;
}

}  // namespace netobs
