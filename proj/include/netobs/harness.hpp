#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netobs/estimator.hpp"
#include "netobs/gramians.hpp"
#include "netobs/model_io.hpp"
#include "netobs/oid.hpp"

namespace netobs {

enum class InitLaw { Uniform01, OnePlusUniform };
const char* init_law_name(InitLaw law);
std::optional<InitLaw> parse_init_law(const std::string& name);

enum class DataSource { Reference, SameModel };

struct ExperimentConfig {
    std::string model_path;
    Scheme scheme = Scheme::IRK;
    double h = 0.0;  // 0: use the model file's recommended step
    std::vector<int> N_list;
    std::vector<double> f_list;  // sensor fractions, r = round(f n)
    std::vector<int> r_list;     // used when f_list is empty
    int realizations = 1;
    std::uint64_t seed = 0;
    std::string solver = "random";  // random | stochastic | greedy | exhaustive
    InitLaw law = InitLaw::OnePlusUniform;
    DataSource data = DataSource::Reference;
    bool oid_blind = false;
    long budget = 2000;
    std::string out_dir;
    int threads = 0;  // 0: hardware concurrency

    std::string canonical() const;
    std::uint64_t hash() const;
};

ExperimentConfig load_experiment_config(const std::string& path);

struct RunRecord {
    std::uint64_t config_hash = 0;
    double f = 0.0;
    int r = 0;
    int N = 0;
    Scheme scheme = Scheme::IRK;
    double h = 0.0;
    int realization = 0;
    std::string solver;
    std::string mask;
    double eta = 0.0;
    int iterations = 0;
    double kappa = 0.0;
    double objective = 0.0;
    double residual = 0.0;
    bool converged = false;
    bool degenerate = false;
    bool failed = false;
    std::string failure;
    double wall_ms = 0.0;
};

// True initial states per the synthetic-experiment laws: one_plus_uniform
// draws each entry from 1 + U(0,1), uniform01 from U(0,1).
StateVector generate_truth(const ContinuousModel& model, InitLaw law, std::uint64_t seed);

// Sensor constraints used by the experiment driver: every singleton SCC is
// forced (its a-priori sensor), and a root SCC that a feasible mask could
// otherwise miss gets its smallest node forced as well. oid_blind drops all
// forcing.
SelectionConstraints harness_constraints(const ContinuousModel& model, int r, bool oid_blind);

int sensor_count_for_fraction(double f, int n);

struct SweepOutput {
    std::vector<RunRecord> records;
    std::string csv;
};

// Per (f-or-r, N, realization): draw truth and an independent guess, generate
// data, select sensors with the configured solver (or the random baseline),
// estimate, and record the diagnostics. Individual failures are recorded and
// the sweep continues. Writes sweep.csv under out_dir when set.
SweepOutput run_sweep(const ExperimentConfig& config);

struct MethodRecord {
    int method = 0;  // 1..4
    double f = 0.0;
    int r = 0;
    int N = 0;
    int realization = 0;
    std::string mask;
    double objective = 0.0;
    long evaluations = 0;
    std::uint64_t simulations = 0;
    double sims_per_eval = 0.0;
    double eta = 0.0;
    double log_eta_diff_vs_m3 = 0.0;
    double wall_ms = 0.0;
};

struct CompareOutput {
    std::vector<MethodRecord> records;
    std::string csv;
};

// Methods on identical truth/guess/seed per cell: 1 = Definition-2 Gramian +
// stochastic search, 2 = Definition-3 Gramian + stochastic search, 3 =
// Jacobian objective + stochastic search, 4 = Jacobian objective + greedy.
CompareOutput compare_methods(const ExperimentConfig& config);

// Mean over f values of the per-node selection indicator; repeats at the
// same f are averaged first so each f contributes uniform weight.
std::vector<double> selection_probabilities(
    const std::vector<std::pair<double, SensorMask>>& selections, int n);

std::string sweep_csv_header();
std::string probabilities_csv(const std::vector<double>& probabilities,
                              const std::vector<std::string>& names);

// Observation CSV: header "k,<sensor names...>", one row per sample.
std::string observations_csv(const ObservationSet& obs,
                             const std::vector<std::string>& sensor_names);
ObservationSet load_observations_csv(const std::string& path, const ContinuousModel& model,
                                     double h, Scheme scheme);

}  // namespace netobs
