// Command-line driver: simulate, estimate, select, gramian, graph, sweep,
// compare. Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "netobs/csvio.hpp"
#include "netobs/harness.hpp"

namespace {

using namespace netobs;

struct GlobalArgs {
    std::string model_path;
    std::string scheme = "irk";
    double h = 0.0;
    int N = 50;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
};

void add_global_options(CLI::App* cmd, GlobalArgs& args, bool need_model = true) {
    cmd->set_help_flag("--help", "Print help");
    auto* model = cmd->add_option("--model", args.model_path, "Model file");
    if (need_model) model->required();
    cmd->add_option("--scheme", args.scheme, "Discretization scheme: be, ti, irk");
    cmd->add_option("--h", args.h, "Step size (default: model file's recommended_h)");
    cmd->add_option("--N", args.N, "Observation length");
    cmd->add_option("--seed", args.seed, "Random seed");
    cmd->add_option("--out", args.out_dir, "Output directory");
}

struct Loaded {
    LoadedModel lm;
    Scheme scheme;
    double h;
};

Loaded load(const GlobalArgs& args) {
    Loaded out{load_model(args.model_path), Scheme::IRK, args.h};
    const auto scheme = parse_scheme(args.scheme);
    if (!scheme) throw ParseError("unknown scheme: " + args.scheme);
    out.scheme = *scheme;
    if (out.h <= 0.0) out.h = out.lm.recommended_h;
    if (out.h <= 0.0)
        throw ParseError("no step size: pass --h or add recommended_h to the model file");
    return out;
}

StateVector initial_state(const Loaded& loaded, std::uint64_t seed, const std::string& law_name) {
    if (law_name.empty() && loaded.lm.default_initial) return *loaded.lm.default_initial;
    InitLaw law = loaded.lm.type == "reaction" ? InitLaw::OnePlusUniform : InitLaw::Uniform01;
    if (!law_name.empty()) {
        const auto parsed = parse_init_law(law_name);
        if (!parsed) throw ParseError("unknown init law: " + law_name);
        law = *parsed;
    }
    return generate_truth(loaded.lm.model, law, seed);
}

void write_out(const std::string& dir, const std::string& name, const std::string& content) {
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/" + name;
    write_text_file(path, content);
    std::cout << "wrote " << path << "\n";
}

SelectionConstraints cli_constraints(const LoadedModel& lm, int r, bool oid_blind,
                                     const std::vector<std::string>& forced_names,
                                     const std::vector<std::string>& excluded_names) {
    SelectionConstraints constraints = harness_constraints(lm.model, r, oid_blind);
    auto index_of = [&](const std::string& name) {
        for (int i = 0; i < lm.model.n; ++i) {
            if (lm.model.node_names[i] == name) return i;
        }
        throw ParseError("unknown node: " + name);
    };
    for (const std::string& name : forced_names) {
        const int i = index_of(name);
        if (std::find(constraints.forced.begin(), constraints.forced.end(), i) ==
            constraints.forced.end()) {
            constraints.forced.push_back(i);
        }
    }
    for (const std::string& name : excluded_names) constraints.excluded.push_back(index_of(name));
    std::sort(constraints.forced.begin(), constraints.forced.end());
    constraints.validate();
    return constraints;
}

int run_simulate(const GlobalArgs& args, const std::string& law, bool reference,
                 const std::vector<std::string>& sensors) {
    const Loaded loaded = load(args);
    const StateVector x0 = initial_state(loaded, args.seed, law);

    Trajectory traj;
    if (reference) {
        std::vector<double> times;
        for (int k = 0; k < args.N; ++k) times.push_back(k * loaded.h);
        traj = reference_simulate(loaded.lm.model, x0, times);
    } else {
        traj = simulate({loaded.lm.model, loaded.scheme, loaded.h}, x0, args.N);
    }
    write_out(args.out_dir, "trajectory.csv", trajectory_csv(traj, loaded.lm.model.node_names));

    if (!sensors.empty()) {
        ObservationSet obs;
        obs.h = loaded.h;
        obs.scheme = loaded.scheme;
        obs.C = Matrix::Zero(static_cast<long>(sensors.size()), loaded.lm.model.n);
        for (std::size_t i = 0; i < sensors.size(); ++i) {
            int index = -1;
            for (int j = 0; j < loaded.lm.model.n; ++j) {
                if (loaded.lm.model.node_names[j] == sensors[i]) index = j;
            }
            if (index < 0) throw ParseError("unknown sensor node: " + sensors[i]);
            obs.C(static_cast<long>(i), index) = 1.0;
        }
        for (const StateVector& x : traj.states) obs.y.push_back(obs.C * x);
        write_out(args.out_dir, "observations.csv", observations_csv(obs, sensors));
    }
    return 0;
}

int run_estimate(const GlobalArgs& args, const std::string& obs_path, const std::string& law) {
    const Loaded loaded = load(args);
    const ObservationSet obs =
        load_observations_csv(obs_path, loaded.lm.model, loaded.h, loaded.scheme);
    const StateVector guess = initial_state(loaded, args.seed, law);
    const DiscreteModel dm{loaded.lm.model, loaded.scheme, loaded.h};
    const EstimationProblem problem = make_estimation_problem(obs, dm, guess);
    const EstimationResult result = estimate_initial_state(problem);
    write_out(args.out_dir, "estimate.csv",
              estimation_report_csv(result, loaded.lm.model.node_names));
    std::cout << "iterations=" << result.iterations
              << " residual=" << format_double(result.residual_norm)
              << " kappa=" << format_double(result.kappa)
              << " rank_ok=" << (result.rank_ok ? 1 : 0)
              << " converged=" << (result.converged ? 1 : 0) << "\n";
    return 0;
}

int run_select(const GlobalArgs& args, const std::string& solver, int r, double f, long budget,
               bool oid_blind, const std::string& law,
               const std::vector<std::string>& forced_names,
               const std::vector<std::string>& excluded_names) {
    const Loaded loaded = load(args);
    const int n = loaded.lm.model.n;
    if (r <= 0) r = sensor_count_for_fraction(f, n);
    const SelectionConstraints constraints =
        cli_constraints(loaded.lm, r, oid_blind, forced_names, excluded_names);
    const StateVector x0 = initial_state(loaded, args.seed, law);
    const DiscreteModel dm{loaded.lm.model, loaded.scheme, loaded.h};
    const MaskObjective objective = jacobian_objective(dm, x0, args.N);

    SelectionResult result;
    if (solver == "greedy") {
        result = select_greedy(objective, constraints);
    } else if (solver == "exhaustive") {
        result = select_exhaustive(objective, constraints);
    } else if (solver == "stochastic") {
        result = select_stochastic(objective, constraints, budget, args.seed);
    } else if (solver == "random") {
        result.mask = random_selection(constraints, args.seed);
        result.value = objective(result.mask);
        result.objective = result.value.objective();
        result.degenerate = result.value.degenerate;
        result.evaluations = 1;
        result.solver = "random";
    } else {
        throw ParseError("unknown solver: " + solver);
    }

    const std::string csv =
        selection_csv_header() + "\n" + selection_csv_row(result, args.seed) + "\n";
    write_out(args.out_dir, "selection.csv", csv);
    std::cout << "mask=" << result.mask.to_string()
              << " objective=" << format_double(result.objective)
              << " evaluations=" << result.evaluations << "\n";
    for (int i = 0; i < n; ++i) {
        if (result.mask.bits[i]) std::cout << "sensor " << loaded.lm.model.node_names[i] << "\n";
    }
    return 0;
}

int run_gramian(const GlobalArgs& args, int definition, double gamma, int v,
                const std::string& law) {
    const Loaded loaded = load(args);
    const int n = loaded.lm.model.n;
    GramianConfig config;
    config.dt = loaded.h;
    config.segments = args.N - 1;
    if (config.segments < 1) throw ParseError("gramian: N must be >= 2");
    config.tau = config.segments * config.dt;
    config.gamma = gamma;
    config.x0 = initial_state(loaded, args.seed, law);
    config.scales = {0.25, 0.5, 0.75, 1.0};
    config.T_set = definition == 3 ? random_orthogonal_set(n, v, args.seed)
                                   : std::vector<Matrix>{Matrix::Identity(n, n)};

    const Matrix C = Matrix::Identity(n, n);
    EmpiricalGramian g;
    if (definition == 1)
        g = gramian_def1(loaded.lm.model, C, config);
    else if (definition == 2)
        g = gramian_def2(loaded.lm.model, C, config);
    else if (definition == 3)
        g = gramian_def3(loaded.lm.model, C, config);
    else
        throw ParseError("gramian definition must be 1, 2 or 3");
    write_out(args.out_dir, "gramian.csv", gramian_csv(g));
    write_out(args.out_dir, "gramian_eigenvalues.csv", gramian_eigenvalue_report(g));
    return 0;
}

int run_graph(const GlobalArgs& args) {
    const Loaded loaded = load(args);
    const Digraph g = build_oid(loaded.lm.model, default_oid_samples(loaded.lm.model));
    const SccDecomposition scc = scc_decompose(g);
    const CentralityTable table = centralities(g);

    write_out(args.out_dir, "oid_edges.txt", digraph_edge_list(g));
    write_out(args.out_dir, "oid.tgf", digraph_tgf(g.without_self_loops()));
    write_out(args.out_dir, "centrality.csv", centrality_csv(g, table));

    std::cout << scc.components.size() << " strongly connected components\n";
    for (std::size_t c = 0; c < scc.components.size(); ++c) {
        std::cout << "component " << c << (scc.is_root[c] ? " (root):" : ":");
        for (int node : scc.components[c]) std::cout << " " << g.names[node];
        std::cout << "\n";
    }
    return 0;
}

ExperimentConfig sweep_config(const GlobalArgs& args, const std::string& config_path,
                              const std::vector<int>& N_list, const std::vector<double>& f_list,
                              int realizations, const std::string& solver,
                              const std::string& law, const std::string& data, bool oid_blind,
                              long budget) {
    ExperimentConfig config;
    if (!config_path.empty()) {
        config = load_experiment_config(config_path);
    } else {
        if (args.model_path.empty()) throw ParseError("pass --model or --config");
        config.model_path = args.model_path;
        const auto scheme = parse_scheme(args.scheme);
        if (!scheme) throw ParseError("unknown scheme: " + args.scheme);
        config.scheme = *scheme;
        config.h = args.h;
        config.N_list = N_list.empty() ? std::vector<int>{args.N} : N_list;
        config.f_list = f_list.empty() ? std::vector<double>{1.0} : f_list;
        config.realizations = realizations;
        config.seed = args.seed;
        config.solver = solver;
        if (!law.empty()) {
            const auto parsed = parse_init_law(law);
            if (!parsed) throw ParseError("unknown init law: " + law);
            config.law = *parsed;
        } else {
            const LoadedModel lm = load_model(config.model_path);
            config.law = lm.type == "reaction" ? InitLaw::OnePlusUniform : InitLaw::Uniform01;
        }
        if (data != "reference" && data != "same-model")
            throw ParseError("data must be reference or same-model");
        config.data = data == "same-model" ? DataSource::SameModel : DataSource::Reference;
        config.oid_blind = oid_blind;
        config.budget = budget;
    }
    if (config.out_dir.empty()) config.out_dir = args.out_dir;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"State estimation and sensor placement for nonlinear dynamical networks"};
    app.set_help_flag("--help", "Print help");
    app.require_subcommand(1);

    GlobalArgs args;
    std::string law, obs_path, solver = "stochastic", data = "reference", config_path;
    std::vector<std::string> sensors, forced_names, excluded_names;
    std::vector<int> N_list;
    std::vector<double> f_list;
    bool reference = false, oid_blind = false;
    int r = 0, definition = 2, v = 2, realizations = 1;
    double f = 1.0, gamma = 0.5;
    long budget = 2000;

    auto* sim = app.add_subcommand("simulate", "Integrate a model and export the trajectory");
    add_global_options(sim, args);
    sim->add_option("--law", law, "Initial-state law: uniform01 or one_plus_uniform");
    sim->add_flag("--reference", reference, "Use the adaptive reference integrator");
    sim->add_option("--sensors", sensors, "Also export observations for these nodes");

    auto* est = app.add_subcommand("estimate", "Estimate the initial state from observations");
    add_global_options(est, args);
    est->add_option("--observations", obs_path, "Observation CSV (k,<sensors...>)")->required();
    est->add_option("--law", law, "Law for the random initial guess");

    auto* sel = app.add_subcommand("select", "Choose sensor nodes");
    add_global_options(sel, args);
    sel->add_option("--solver", solver, "exhaustive, greedy, stochastic or random");
    sel->add_option("--r", r, "Number of sensors");
    sel->add_option("--f", f, "Sensor fraction (used when --r is absent)");
    sel->add_option("--budget", budget, "Objective evaluation budget");
    sel->add_flag("--oid-blind", oid_blind, "Ignore the OID when building constraints");
    sel->add_option("--force", forced_names, "Extra forced sensor nodes");
    sel->add_option("--exclude", excluded_names, "Nodes that can never be sensors");
    sel->add_option("--law", law, "Law for the linearization state");

    auto* gram = app.add_subcommand("gramian", "Compute an empirical observability gramian");
    add_global_options(gram, args);
    gram->add_option("--definition", definition, "Gramian definition: 1, 2 or 3");
    gram->add_option("--gamma", gamma, "Definition-2 perturbation size");
    gram->add_option("--v", v, "Number of random orthogonal matrices (definition 3)");
    gram->add_option("--law", law, "Law for the base state");

    auto* graph = app.add_subcommand("graph", "Export the OID, its SCCs and centralities");
    add_global_options(graph, args);

    auto* sweep = app.add_subcommand("sweep", "Run a seeded (f, N, realization) sweep");
    add_global_options(sweep, args, false);
    sweep->add_option("--config", config_path, "Experiment config file");
    sweep->add_option("--N-list", N_list, "Observation lengths");
    sweep->add_option("--f-list", f_list, "Sensor fractions");
    sweep->add_option("--realizations", realizations, "Realizations per cell");
    sweep->add_option("--solver", solver, "random, stochastic, greedy or exhaustive");
    sweep->add_option("--law", law, "Initial-state law");
    sweep->add_option("--data", data, "reference or same-model");
    sweep->add_flag("--oid-blind", oid_blind, "Ignore the OID when building constraints");
    sweep->add_option("--budget", budget, "Objective evaluation budget");

    auto* cmp = app.add_subcommand("compare", "Compare selection methods 1-4");
    add_global_options(cmp, args, false);
    cmp->add_option("--config", config_path, "Experiment config file");
    cmp->add_option("--N-list", N_list, "Observation lengths");
    cmp->add_option("--f-list", f_list, "Sensor fractions");
    cmp->add_option("--realizations", realizations, "Realizations per cell");
    cmp->add_option("--law", law, "Initial-state law");
    cmp->add_option("--data", data, "reference or same-model");
    cmp->add_flag("--oid-blind", oid_blind, "Ignore the OID when building constraints");
    cmp->add_option("--budget", budget, "Objective evaluation budget");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return run_simulate(args, law, reference, sensors);
        if (est->parsed()) return run_estimate(args, obs_path, law);
        if (sel->parsed())
            return run_select(args, solver, r, f, budget, oid_blind, law, forced_names,
                              excluded_names);
        if (gram->parsed()) return run_gramian(args, definition, gamma, v, law);
        if (graph->parsed()) return run_graph(args);
        if (sweep->parsed()) {
            const ExperimentConfig config = sweep_config(
                args, config_path, N_list, f_list, realizations, solver, law, data, oid_blind,
                budget);
            const SweepOutput out = run_sweep(config);
            std::cout << "wrote " << config.out_dir << "/sweep.csv (" << out.records.size()
                      << " rows)\n";
            return 0;
        }
        if (cmp->parsed()) {
            const ExperimentConfig config = sweep_config(
                args, config_path, N_list, f_list, realizations, solver, law, data, oid_blind,
                budget);
            const CompareOutput out = compare_methods(config);
            std::cout << "wrote " << config.out_dir << "/compare.csv (" << out.records.size()
                      << " rows)\n";
            return 0;
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
