#include "netobs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <thread>

#include "netobs/csvio.hpp"
#include "netobs/kvfile.hpp"
#include "netobs/rng.hpp"

namespace netobs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double wall_ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

std::string sanitize(const std::string& text) {
    std::string out = text;
    for (char& c : out) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return out;
}

std::string num_or_empty(double v) { return std::isfinite(v) ? format_double(v) : ""; }

struct Cell {
    double f;
    int r;
    int N;
};

std::vector<Cell> config_cells(const ExperimentConfig& config, int n) {
    std::vector<Cell> cells;
    if (!config.f_list.empty()) {
        for (double f : config.f_list) {
            for (int N : config.N_list) cells.push_back({f, sensor_count_for_fraction(f, n), N});
        }
    } else {
        for (int r : config.r_list) {
            for (int N : config.N_list) {
                cells.push_back({static_cast<double>(r) / n, r, N});
            }
        }
    }
    require(!cells.empty(), "experiment config: empty f/r or N lists");
    return cells;
}

// Fixed substream ids per realization so parallel and serial runs agree.
enum Stream : std::uint64_t {
    kTruthStream = 0,
    kGuessStream = 1,
    kSelectStream = 2,
    kMethodStream = 3,
};

void run_tasks(int count, int threads, const std::function<void(int)>& task) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= count) break;
                task(i);
            }
        });
    }
    for (std::thread& t : pool) t.join();
}

SelectionResult run_selection(const std::string& solver, const MaskObjective& objective,
                              const SelectionConstraints& constraints, long budget,
                              std::uint64_t seed) {
    if (solver == "stochastic") return select_stochastic(objective, constraints, budget, seed);
    if (solver == "greedy") return select_greedy(objective, constraints);
    if (solver == "exhaustive") return select_exhaustive(objective, constraints, budget);
    throw ContractError("unknown selection solver: " + solver);
}

std::string run_record_row(const RunRecord& rec) {
    std::vector<std::string> cells = {
        std::to_string(rec.config_hash),
        format_double(rec.f),
        std::to_string(rec.r),
        std::to_string(rec.N),
        scheme_name(rec.scheme),
        format_double(rec.h),
        std::to_string(rec.realization),
        rec.solver,
        rec.mask,
        rec.failed ? "" : num_or_empty(rec.eta),
        rec.failed ? "" : std::to_string(rec.iterations),
        rec.failed ? "" : num_or_empty(rec.kappa),
        num_or_empty(rec.objective),
        rec.failed ? "" : num_or_empty(rec.residual),
        rec.failed ? "" : std::to_string(rec.converged ? 1 : 0),
        std::to_string(rec.degenerate ? 1 : 0),
        std::to_string(rec.failed ? 1 : 0),
        sanitize(rec.failure),
        format_double(rec.wall_ms),
    };
    return join_csv_row(cells);
}

}  // namespace

const char* init_law_name(InitLaw law) {
    return law == InitLaw::Uniform01 ? "uniform01" : "one_plus_uniform";
}

std::optional<InitLaw> parse_init_law(const std::string& name) {
    if (name == "uniform01") return InitLaw::Uniform01;
    if (name == "one_plus_uniform") return InitLaw::OnePlusUniform;
    return std::nullopt;
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream os;
    os << "model=" << model_path << "\nscheme=" << scheme_name(scheme) << "\nh=" << format_double(h)
       << "\nN=";
    for (int N : N_list) os << N << ";";
    os << "\nf=";
    for (double f : f_list) os << format_double(f) << ";";
    os << "\nr=";
    for (int r : r_list) os << r << ";";
    os << "\nrealizations=" << realizations << "\nseed=" << seed << "\nsolver=" << solver
       << "\nlaw=" << init_law_name(law)
       << "\ndata=" << (data == DataSource::Reference ? "reference" : "same-model")
       << "\noid_blind=" << (oid_blind ? 1 : 0) << "\nbudget=" << budget << "\n";
    return os.str();
}

std::uint64_t ExperimentConfig::hash() const {
    // FNV-1a over the canonical text.
    std::uint64_t h64 = 14695981039346656037ull;
    for (char c : canonical()) {
        h64 ^= static_cast<unsigned char>(c);
        h64 *= 1099511628211ull;
    }
    return h64;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    const KvDocument doc = parse_kv_file(path);
    ExperimentConfig config;
    for (const auto& [key, value] : doc.root.entries) {
        if (key == "model") {
            config.model_path = value.as_string("model");
        } else if (key == "scheme") {
            const auto s = parse_scheme(value.as_string("scheme"));
            if (!s) throw ParseError(path + ": unknown scheme");
            config.scheme = *s;
        } else if (key == "h") {
            config.h = value.as_number("h");
        } else if (key == "N") {
            for (const KvValue& v : value.as_array("N"))
                config.N_list.push_back(static_cast<int>(v.as_integer("N entry")));
        } else if (key == "f") {
            for (const KvValue& v : value.as_array("f"))
                config.f_list.push_back(v.as_number("f entry"));
        } else if (key == "r") {
            for (const KvValue& v : value.as_array("r"))
                config.r_list.push_back(static_cast<int>(v.as_integer("r entry")));
        } else if (key == "realizations") {
            config.realizations = static_cast<int>(value.as_integer("realizations"));
        } else if (key == "seed") {
            config.seed = static_cast<std::uint64_t>(value.as_integer("seed"));
        } else if (key == "solver") {
            config.solver = value.as_string("solver");
        } else if (key == "law") {
            const auto law = parse_init_law(value.as_string("law"));
            if (!law) throw ParseError(path + ": unknown init law");
            config.law = *law;
        } else if (key == "data") {
            const std::string& d = value.as_string("data");
            if (d == "reference")
                config.data = DataSource::Reference;
            else if (d == "same-model")
                config.data = DataSource::SameModel;
            else
                throw ParseError(path + ": data must be \"reference\" or \"same-model\"");
        } else if (key == "oid_blind") {
            config.oid_blind = value.as_integer("oid_blind") != 0;
        } else if (key == "budget") {
            config.budget = value.as_integer("budget");
        } else if (key == "out") {
            config.out_dir = value.as_string("out");
        } else if (key == "threads") {
            config.threads = static_cast<int>(value.as_integer("threads"));
        } else {
            throw ParseError(path + ": unknown config key '" + key + "'");
        }
    }
    if (config.model_path.empty()) throw ParseError(path + ": missing 'model'");
    if (config.realizations < 1) throw ParseError(path + ": realizations must be >= 1");
    if (config.N_list.empty()) throw ParseError(path + ": missing 'N'");
    if (config.f_list.empty() && config.r_list.empty())
        throw ParseError(path + ": need 'f' or 'r'");
    return config;
}

StateVector generate_truth(const ContinuousModel& model, InitLaw law, std::uint64_t seed) {
    SplitRng rng(seed);
    StateVector x(model.n);
    for (int i = 0; i < model.n; ++i) {
        const double u = rng.uniform();
        x[i] = law == InitLaw::OnePlusUniform ? 1.0 + u : u;
    }
    return x;
}

int sensor_count_for_fraction(double f, int n) {
    require(f > 0.0 && f <= 1.0, "sensor fraction must be in (0, 1]");
    const int r = static_cast<int>(std::lround(f * n));
    return std::max(1, std::min(n, r));
}

SelectionConstraints harness_constraints(const ContinuousModel& model, int r, bool oid_blind) {
    SelectionConstraints constraints;
    constraints.n = model.n;
    constraints.r = r;
    if (oid_blind) {
        constraints.validate();
        return constraints;
    }
    const Digraph oid = build_oid(model, default_oid_samples(model));
    const SccDecomposition scc = scc_decompose(oid);
    for (const auto& comp : scc.components) {
        if (comp.size() == 1) constraints.forced.push_back(comp[0]);
    }
    // Root SCC coverage: force the smallest node of any root component that a
    // feasible mask could otherwise miss entirely.
    for (std::size_t c = 0; c < scc.components.size(); ++c) {
        if (!scc.is_root[c]) continue;
        bool covered = false;
        for (int node : scc.components[c]) {
            if (std::find(constraints.forced.begin(), constraints.forced.end(), node) !=
                constraints.forced.end()) {
                covered = true;
            }
        }
        if (covered) continue;
        int outside = 0;
        for (int node = 0; node < model.n; ++node) {
            const bool in_comp = scc.component_of[node] == static_cast<int>(c);
            const bool forced = std::find(constraints.forced.begin(), constraints.forced.end(),
                                          node) != constraints.forced.end();
            if (!in_comp && !forced) ++outside;
        }
        const int to_place = r - static_cast<int>(constraints.forced.size());
        if (to_place <= outside) constraints.forced.push_back(scc.components[c].front());
    }
    std::sort(constraints.forced.begin(), constraints.forced.end());
    constraints.validate();
    return constraints;
}

std::string sweep_csv_header() {
    return "config_hash,f,r,N,scheme,h,realization,solver,mask,eta,iterations,kappa,objective,"
           "residual,converged,degenerate,failed,failure,wall_ms";
}

SweepOutput run_sweep(const ExperimentConfig& config) {
    const LoadedModel lm = load_model(config.model_path);
    const double h = config.h > 0.0 ? config.h : lm.recommended_h;
    require(h > 0.0, "run_sweep: no step size (set h or a recommended_h in the model file)");

    const std::vector<Cell> cells = config_cells(config, lm.model.n);
    const int R = config.realizations;
    const int total = static_cast<int>(cells.size()) * R;
    const std::uint64_t config_hash = config.hash();

    std::vector<RunRecord> records(total);
    const SplitRng root_rng(config.seed);

    run_tasks(total, config.threads, [&](int task) {
        const int cell_idx = task / R;
        const int realization = task % R;
        const Cell& cell = cells[cell_idx];
        const auto start = std::chrono::steady_clock::now();

        RunRecord rec;
        rec.config_hash = config_hash;
        rec.f = cell.f;
        rec.r = cell.r;
        rec.N = cell.N;
        rec.scheme = config.scheme;
        rec.h = h;
        rec.realization = realization;
        rec.solver = config.solver;
        rec.eta = kNaN;
        rec.kappa = kNaN;
        rec.objective = kNaN;
        rec.residual = kNaN;

        try {
            SplitRng task_rng =
                root_rng.split(static_cast<std::uint64_t>(cell_idx)).split(realization);
            const StateVector truth =
                generate_truth(lm.model, config.law, task_rng.split(kTruthStream).next_u64());
            const StateVector guess =
                generate_truth(lm.model, config.law, task_rng.split(kGuessStream).next_u64());

            const SelectionConstraints constraints =
                harness_constraints(lm.model, cell.r, config.oid_blind);
            const DiscreteModel dm{lm.model, config.scheme, h};

            SensorMask mask;
            if (config.solver == "random") {
                mask = random_selection(constraints,
                                        task_rng.split(kSelectStream).next_u64());
            } else {
                const SelectionResult sel =
                    run_selection(config.solver, jacobian_objective(dm, truth, cell.N),
                                  constraints, config.budget,
                                  task_rng.split(kSelectStream).next_u64());
                mask = sel.mask;
                rec.objective = sel.objective;
                rec.degenerate = sel.degenerate;
            }
            rec.mask = mask.to_string();

            const Matrix C = mask_to_selection_matrix(mask);
            ObservationSet obs;
            obs.C = C;
            obs.h = h;
            obs.scheme = config.scheme;
            if (config.data == DataSource::Reference) {
                std::vector<double> times(cell.N);
                for (int k = 0; k < cell.N; ++k) times[k] = k * h;
                const Trajectory ref = reference_simulate(lm.model, truth, times);
                for (const StateVector& x : ref.states) obs.y.push_back(C * x);
            } else {
                const Trajectory traj = simulate(dm, truth, cell.N);
                for (const StateVector& x : traj.states) obs.y.push_back(C * x);
            }

            const EstimationProblem problem = make_estimation_problem(obs, dm, guess);
            const EstimationResult est = estimate_initial_state(problem, &truth);
            rec.eta = est.eta.value_or(kNaN);
            rec.iterations = est.iterations;
            rec.kappa = est.kappa;
            rec.residual = est.residual_norm;
            rec.converged = est.converged;
        } catch (const Error& e) {
            rec.failed = true;
            rec.failure = e.what();
        }
        rec.wall_ms = wall_ms_since(start);
        records[task] = std::move(rec);
    });

    SweepOutput out;
    out.records = std::move(records);
    std::ostringstream csv;
    csv << sweep_csv_header() << "\n";
    for (const RunRecord& rec : out.records) csv << run_record_row(rec) << "\n";
    out.csv = csv.str();

    if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        write_text_file(config.out_dir + "/sweep.csv", out.csv);
    }
    return out;
}

CompareOutput compare_methods(const ExperimentConfig& config) {
    const LoadedModel lm = load_model(config.model_path);
    const double h = config.h > 0.0 ? config.h : lm.recommended_h;
    require(h > 0.0, "compare_methods: no step size");
    const int n = lm.model.n;

    const std::vector<Cell> cells = config_cells(config, n);
    const int R = config.realizations;
    const std::uint64_t config_hash = config.hash();
    (void)config_hash;

    CompareOutput out;
    const SplitRng root_rng(config.seed);

    for (std::size_t cell_idx = 0; cell_idx < cells.size(); ++cell_idx) {
        const Cell& cell = cells[cell_idx];
        require(cell.N >= 2, "compare_methods: N must be >= 2 for the Gramian horizon");
        for (int realization = 0; realization < R; ++realization) {
            SplitRng task_rng = root_rng.split(cell_idx).split(realization);
            const StateVector truth =
                generate_truth(lm.model, config.law, task_rng.split(kTruthStream).next_u64());
            const StateVector guess =
                generate_truth(lm.model, config.law, task_rng.split(kGuessStream).next_u64());
            const std::uint64_t select_seed = task_rng.split(kSelectStream).next_u64();

            const SelectionConstraints constraints =
                harness_constraints(lm.model, cell.r, config.oid_blind);
            const DiscreteModel dm{lm.model, config.scheme, h};

            // Gramian horizon matched to the estimation horizon: Q = N - 1
            // segments of length h.
            GramianConfig g2;
            g2.gamma = 0.5;
            g2.dt = h;
            g2.segments = cell.N - 1;
            g2.tau = g2.segments * h;
            g2.x0 = truth;

            GramianConfig g3 = g2;
            g3.scales = {0.25, 0.5, 0.75, 1.0};
            g3.T_set = random_orthogonal_set(n, 2, task_rng.split(kMethodStream).next_u64());

            // Observation data for validation: same truth as used by the
            // selection objectives.
            std::vector<double> times(cell.N);
            for (int k = 0; k < cell.N; ++k) times[k] = k * h;
            const Trajectory ref = config.data == DataSource::Reference
                                       ? reference_simulate(lm.model, truth, times)
                                       : simulate(dm, truth, cell.N);

            std::vector<MethodRecord> cell_records;
            for (int method = 1; method <= 4; ++method) {
                const auto start = std::chrono::steady_clock::now();
                MethodRecord rec;
                rec.method = method;
                rec.f = cell.f;
                rec.r = cell.r;
                rec.N = cell.N;
                rec.realization = realization;

                MaskObjective objective;
                if (method == 1)
                    objective = gramian_objective(lm.model, g2, 2);
                else if (method == 2)
                    objective = gramian_objective(lm.model, g3, 3);
                else
                    objective = jacobian_objective(dm, truth, cell.N);

                const std::uint64_t sims_before = simulation_count();
                const SelectionResult sel =
                    method == 4 ? select_greedy(objective, constraints)
                                : select_stochastic(objective, constraints, config.budget,
                                                    select_seed);
                rec.simulations = simulation_count() - sims_before;
                rec.evaluations = sel.evaluations;
                rec.sims_per_eval =
                    static_cast<double>(rec.simulations) / static_cast<double>(sel.evaluations);
                rec.mask = sel.mask.to_string();
                rec.objective = sel.objective;

                const Matrix C = mask_to_selection_matrix(sel.mask);
                ObservationSet obs;
                obs.C = C;
                obs.h = h;
                obs.scheme = config.scheme;
                for (const StateVector& x : ref.states) obs.y.push_back(C * x);
                const EstimationProblem problem = make_estimation_problem(obs, dm, guess);
                const EstimationResult est = estimate_initial_state(problem, &truth);
                rec.eta = est.eta.value_or(kNaN);
                rec.wall_ms = wall_ms_since(start);
                cell_records.push_back(std::move(rec));
            }
            const double eta3 = cell_records[2].eta;
            for (MethodRecord& rec : cell_records) {
                rec.log_eta_diff_vs_m3 = std::log(rec.eta) - std::log(eta3);
                out.records.push_back(std::move(rec));
            }
        }
    }

    std::ostringstream csv;
    csv << "method,f,r,N,realization,mask,objective,evaluations,simulations,sims_per_eval,eta,"
           "log_eta_diff_vs_m3,wall_ms\n";
    for (const MethodRecord& rec : out.records) {
        std::vector<std::string> cells_row = {
            std::to_string(rec.method),        format_double(rec.f),
            std::to_string(rec.r),             std::to_string(rec.N),
            std::to_string(rec.realization),   rec.mask,
            format_double(rec.objective),      std::to_string(rec.evaluations),
            std::to_string(rec.simulations),   format_double(rec.sims_per_eval),
            num_or_empty(rec.eta),             num_or_empty(rec.log_eta_diff_vs_m3),
            format_double(rec.wall_ms),
        };
        csv << join_csv_row(cells_row) << "\n";
    }
    out.csv = csv.str();

    if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        write_text_file(config.out_dir + "/compare.csv", out.csv);
    }
    return out;
}

std::vector<double> selection_probabilities(
    const std::vector<std::pair<double, SensorMask>>& selections, int n) {
    require(!selections.empty(), "selection_probabilities: empty input");
    std::vector<double> distinct_f;
    for (const auto& [f, mask] : selections) {
        require(mask.n() == n, "selection_probabilities: mask size mismatch");
        if (std::find(distinct_f.begin(), distinct_f.end(), f) == distinct_f.end())
            distinct_f.push_back(f);
    }
    std::vector<double> probs(n, 0.0);
    for (double f : distinct_f) {
        std::vector<double> mean(n, 0.0);
        int count = 0;
        for (const auto& [ff, mask] : selections) {
            if (ff != f) continue;
            for (int i = 0; i < n; ++i) mean[i] += mask.bits[i];
            ++count;
        }
        for (int i = 0; i < n; ++i) probs[i] += mean[i] / count / distinct_f.size();
    }
    return probs;
}

std::string probabilities_csv(const std::vector<double>& probabilities,
                              const std::vector<std::string>& names) {
    std::ostringstream os;
    os << "node,probability\n";
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        os << names[i] << "," << format_double(probabilities[i]) << "\n";
    }
    return os.str();
}

std::string observations_csv(const ObservationSet& obs,
                             const std::vector<std::string>& sensor_names) {
    std::ostringstream os;
    os << "k";
    for (const std::string& name : sensor_names) os << "," << name;
    os << "\n";
    for (int k = 0; k < obs.N(); ++k) {
        os << k;
        for (int i = 0; i < obs.r(); ++i) os << "," << format_double(obs.y[k][i]);
        os << "\n";
    }
    return os.str();
}

ObservationSet load_observations_csv(const std::string& path, const ContinuousModel& model,
                                     double h, Scheme scheme) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error& e) {
        throw ParseError(e.what());
    }
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty observation file");
    const auto header = split_csv_row(line);
    if (header.empty() || header[0] != "k")
        throw ParseError(path + ": observation header must start with 'k'");

    ObservationSet obs;
    obs.h = h;
    obs.scheme = scheme;
    const int r = static_cast<int>(header.size()) - 1;
    obs.C = Matrix::Zero(r, model.n);
    for (int i = 0; i < r; ++i) {
        const std::string& name = header[i + 1];
        int index = -1;
        for (int j = 0; j < model.n; ++j) {
            if (model.node_names[j] == name) index = j;
        }
        if (index < 0) throw ParseError(path + ": unknown sensor node '" + name + "'");
        obs.C(i, index) = 1.0;
    }
    int expected_k = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_row(line);
        if (static_cast<int>(cells.size()) != r + 1)
            throw ParseError(path + ": wrong column count in observation row");
        if (std::stoi(cells[0]) != expected_k)
            throw ParseError(path + ": observation rows must be consecutive from k=0");
        StateVector y(r);
        for (int i = 0; i < r; ++i) y[i] = std::stod(cells[i + 1]);
        obs.y.push_back(std::move(y));
        ++expected_k;
    }
    if (obs.y.empty()) throw ParseError(path + ": no observation rows");
    return obs;
}

}  // namespace netobs
