#include "netobs/sensor_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "netobs/csvio.hpp"
#include "netobs/rng.hpp"

namespace netobs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool mask_less(const SensorMask& a, const SensorMask& b) { return a.bits < b.bits; }

SensorMask mask_from_nodes(int n, const std::vector<int>& nodes) {
    SensorMask mask;
    mask.bits.assign(n, 0);
    for (int i : nodes) mask.bits[i] = 1;
    return mask;
}

SelectionResult finish(SensorMask mask, ObjectiveValue value, long evaluations,
                       std::string solver) {
    SelectionResult res;
    res.mask = std::move(mask);
    res.value = value;
    res.objective = value.objective();
    res.evaluations = evaluations;
    res.solver = std::move(solver);
    res.degenerate = value.degenerate;
    return res;
}

}  // namespace

int SensorMask::count() const { return std::accumulate(bits.begin(), bits.end(), 0); }

std::string SensorMask::to_string() const {
    std::string s;
    s.reserve(bits.size());
    for (int b : bits) s += b ? '1' : '0';
    return s;
}

void SelectionConstraints::validate() const {
    require(n > 0, "selection constraints: n must be positive");
    require(r >= 0 && r <= n, "selection constraints: r out of range");
    for (int i : forced) require(i >= 0 && i < n, "selection constraints: forced node out of range");
    for (int i : excluded)
        require(i >= 0 && i < n, "selection constraints: excluded node out of range");
    for (int i : forced) {
        if (std::find(excluded.begin(), excluded.end(), i) != excluded.end())
            throw ContractError("selection constraints: node both forced and excluded");
    }
    require(static_cast<int>(forced.size()) <= r,
            "selection constraints: more forced nodes than sensors");
    require(r <= n - static_cast<int>(excluded.size()),
            "selection constraints: r exceeds the number of selectable nodes");
}

std::vector<int> SelectionConstraints::free_nodes() const {
    std::vector<int> free;
    for (int i = 0; i < n; ++i) {
        const bool is_forced = std::find(forced.begin(), forced.end(), i) != forced.end();
        const bool is_excluded = std::find(excluded.begin(), excluded.end(), i) != excluded.end();
        if (!is_forced && !is_excluded) free.push_back(i);
    }
    return free;
}

double ObjectiveValue::objective() const { return degenerate ? -kInf : log_sum; }

bool better(const ObjectiveValue& a, const ObjectiveValue& b) {
    if (a.retained != b.retained) return a.retained > b.retained;
    return a.log_sum > b.log_sum;
}

bool equivalent(const ObjectiveValue& a, const ObjectiveValue& b) {
    return a.retained == b.retained && a.log_sum == b.log_sum;
}

ObjectiveValue gram_objective_value(const Matrix& gram, int n) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (gram + gram.transpose()));
    const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
    ObjectiveValue value;
    const double lambda_max = lambda.size() > 0 ? lambda[lambda.size() - 1] : 0.0;
    const double threshold = n * std::numeric_limits<double>::epsilon() * std::max(lambda_max, 0.0);
    value.log_sum = 0.0;
    for (int i = 0; i < lambda.size(); ++i) {
        if (lambda[i] > threshold && lambda[i] > 0.0) {
            ++value.retained;
            value.log_sum += std::log(lambda[i]);
        }
    }
    value.degenerate = value.retained < n;
    if (value.retained == 0) value.log_sum = -kInf;
    return value;
}

ObjectiveValue selection_objective(const DiscreteModel& dm, const StateVector& x0, int N,
                                   const SensorMask& mask) {
    require(mask.n() == dm.model.n, "selection_objective: mask size mismatch");
    require(N >= 1, "selection_objective: N must be >= 1");
    const int n = dm.model.n;
    if (mask.count() == 0) {
        ObjectiveValue value;
        value.retained = 0;
        value.log_sum = -kInf;
        value.degenerate = true;
        return value;
    }
    // Zero rows of C1(b) contribute nothing to J1^T J1, so the compressed
    // selection matrix yields the same Gram matrix with fewer rows.
    const Matrix C = mask_to_selection_matrix(mask);
    const JacobianStack stack = stack_output_jacobian(dm, x0, N, C, false);
    const Matrix gram = stack.full.transpose() * stack.full;
    return gram_objective_value(gram, n);
}

MaskObjective jacobian_objective(const DiscreteModel& dm, const StateVector& x0, int N) {
    return [dm, x0, N](const SensorMask& mask) {
        return selection_objective(dm, x0, N, mask);
    };
}

SelectionResult select_exhaustive(const MaskObjective& objective,
                                  const SelectionConstraints& constraints, long budget) {
    constraints.validate();
    const std::vector<int> free = constraints.free_nodes();
    const int k = constraints.r - static_cast<int>(constraints.forced.size());

    // C(|free|, k) with overflow guard against the budget.
    double combinations = 1.0;
    for (int i = 0; i < k; ++i) {
        combinations *= static_cast<double>(free.size() - i) / (i + 1);
    }
    if (combinations > static_cast<double>(budget)) {
        std::ostringstream os;
        os << "select_exhaustive: " << combinations << " feasible masks exceed budget "
           << budget;
        throw BudgetError(os.str());
    }

    SensorMask best_mask;
    ObjectiveValue best_value;
    bool have_best = false;
    long evaluations = 0;

    std::vector<int> choice(k);
    std::iota(choice.begin(), choice.end(), 0);
    const int f = static_cast<int>(free.size());

    auto evaluate_choice = [&]() {
        std::vector<int> nodes = constraints.forced;
        for (int idx : choice) nodes.push_back(free[idx]);
        SensorMask mask = mask_from_nodes(constraints.n, nodes);
        const ObjectiveValue value = objective(mask);
        ++evaluations;
        if (!have_best || better(value, best_value) ||
            (equivalent(value, best_value) && mask_less(mask, best_mask))) {
            have_best = true;
            best_value = value;
            best_mask = mask;
        }
    };

    if (k == 0) {
        evaluate_choice();
    } else {
        while (true) {
            evaluate_choice();
            int i = k - 1;
            while (i >= 0 && choice[i] == f - k + i) --i;
            if (i < 0) break;
            ++choice[i];
            for (int j = i + 1; j < k; ++j) choice[j] = choice[j - 1] + 1;
        }
    }
    return finish(best_mask, best_value, evaluations, "exhaustive");
}

SelectionResult select_greedy(const MaskObjective& objective,
                              const SelectionConstraints& constraints) {
    constraints.validate();
    std::vector<int> selected = constraints.forced;
    long evaluations = 0;

    SensorMask mask = mask_from_nodes(constraints.n, selected);
    ObjectiveValue current;  // empty set: zero retained eigenvalues
    current.log_sum = -kInf;
    if (!selected.empty()) {
        current = objective(mask);
        ++evaluations;
    }

    while (static_cast<int>(selected.size()) < constraints.r) {
        int best_node = -1;
        ObjectiveValue best_value;
        SensorMask best_mask;
        for (int node : constraints.free_nodes()) {
            if (std::find(selected.begin(), selected.end(), node) != selected.end()) continue;
            std::vector<int> trial_nodes = selected;
            trial_nodes.push_back(node);
            SensorMask trial = mask_from_nodes(constraints.n, trial_nodes);
            const ObjectiveValue value = objective(trial);
            ++evaluations;
            if (best_node < 0 || better(value, best_value)) {  // ties keep smallest index
                best_node = node;
                best_value = value;
                best_mask = trial;
            }
        }
        require(best_node >= 0, "select_greedy: no selectable node left");
        selected.push_back(best_node);
        mask = best_mask;
        current = best_value;
    }
    return finish(mask, current, evaluations, "greedy");
}

SelectionResult select_stochastic(const MaskObjective& objective,
                                  const SelectionConstraints& constraints, long budget,
                                  std::uint64_t seed, int starts) {
    constraints.validate();
    require(budget >= 1, "select_stochastic: budget must be >= 1");
    require(starts >= 1, "select_stochastic: starts must be >= 1");

    SplitRng rng(seed);
    long evaluations = 0;

    struct Start {
        SensorMask mask;
        ObjectiveValue value;
    };
    std::vector<Start> population;
    for (int s = 0; s < starts; ++s) {
        Start st;
        st.mask = random_selection(constraints, rng.split(s).next_u64());
        st.value = objective(st.mask);
        ++evaluations;
        population.push_back(std::move(st));
    }

    SensorMask best_mask = population[0].mask;
    ObjectiveValue best_value = population[0].value;
    for (const Start& st : population) {
        if (better(st.value, best_value)) {
            best_value = st.value;
            best_mask = st.mask;
        }
    }

    for (int s = 0; s < starts && evaluations < budget; ++s) {
        SensorMask current = population[s].mask;
        ObjectiveValue current_value = population[s].value;
        SplitRng walk_rng = rng.split(1000 + s);

        bool improving = true;
        while (improving && evaluations < budget) {
            improving = false;
            // All (selected-non-forced, unselected-free) swaps in a seeded
            // random order; first improvement is taken.
            std::vector<int> outs, ins;
            for (int i = 0; i < constraints.n; ++i) {
                const bool is_forced = std::find(constraints.forced.begin(),
                                                 constraints.forced.end(),
                                                 i) != constraints.forced.end();
                const bool is_excluded = std::find(constraints.excluded.begin(),
                                                   constraints.excluded.end(),
                                                   i) != constraints.excluded.end();
                if (current.bits[i] && !is_forced) outs.push_back(i);
                if (!current.bits[i] && !is_forced && !is_excluded) ins.push_back(i);
            }
            std::vector<std::pair<int, int>> swaps;
            for (int out : outs)
                for (int in : ins) swaps.emplace_back(out, in);
            for (int i = static_cast<int>(swaps.size()) - 1; i > 0; --i) {
                std::swap(swaps[i], swaps[walk_rng.below(i + 1)]);
            }
            for (const auto& [out, in] : swaps) {
                if (evaluations >= budget) break;
                SensorMask trial = current;
                trial.bits[out] = 0;
                trial.bits[in] = 1;
                const ObjectiveValue value = objective(trial);
                ++evaluations;
                if (better(value, current_value)) {
                    current = trial;
                    current_value = value;
                    improving = true;
                    break;
                }
            }
        }
        if (better(current_value, best_value)) {
            best_value = current_value;
            best_mask = current;
        }
    }
    return finish(best_mask, best_value, evaluations, "stochastic");
}

SensorMask random_selection(const SelectionConstraints& constraints, std::uint64_t seed) {
    constraints.validate();
    std::vector<int> free = constraints.free_nodes();
    const int k = constraints.r - static_cast<int>(constraints.forced.size());
    SplitRng rng(seed);
    // Partial Fisher-Yates: the first k entries are a uniform k-subset.
    for (int i = 0; i < k; ++i) {
        const int j = i + rng.below(static_cast<int>(free.size()) - i);
        std::swap(free[i], free[j]);
    }
    std::vector<int> nodes = constraints.forced;
    nodes.insert(nodes.end(), free.begin(), free.begin() + k);
    return mask_from_nodes(constraints.n, nodes);
}

Matrix mask_to_selection_matrix(const SensorMask& mask) {
    const int n = mask.n();
    const int r = mask.count();
    Matrix C = Matrix::Zero(r, n);
    int row = 0;
    for (int i = 0; i < n; ++i) {
        if (mask.bits[i]) C(row++, i) = 1.0;
    }
    return C;
}

Matrix mask_to_output_matrix(const SensorMask& mask) {
    const int n = mask.n();
    Matrix C1 = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) C1(i, i) = mask.bits[i] ? 1.0 : 0.0;
    return C1;
}

SelectionResult select_exhaustive(const DiscreteModel& dm, const StateVector& x0, int N,
                                  const SelectionConstraints& constraints, long budget) {
    return select_exhaustive(jacobian_objective(dm, x0, N), constraints, budget);
}

SelectionResult select_greedy(const DiscreteModel& dm, const StateVector& x0, int N,
                              const SelectionConstraints& constraints) {
    return select_greedy(jacobian_objective(dm, x0, N), constraints);
}

SelectionResult select_stochastic(const DiscreteModel& dm, const StateVector& x0, int N,
                                  const SelectionConstraints& constraints, long budget,
                                  std::uint64_t seed, int starts) {
    return select_stochastic(jacobian_objective(dm, x0, N), constraints, budget, seed, starts);
}

std::string selection_csv_header() {
    return "solver,seed,objective,evaluations,degenerate,mask";
}

std::string selection_csv_row(const SelectionResult& result, std::uint64_t seed) {
    std::ostringstream os;
    os << result.solver << "," << seed << "," << format_double(result.objective) << ","
       << result.evaluations << "," << (result.degenerate ? 1 : 0) << ","
       << result.mask.to_string();
    return os.str();
}

}  // namespace netobs
