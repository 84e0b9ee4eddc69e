// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Run from the repository root (model files are referenced
// relative to it).

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "netobs/harness.hpp"

using namespace netobs;
using namespace netobs::testing;

namespace {

struct CriterionRunner {
    int failures = 0;

    void run(int number, const std::string& name, double time_limit_s,
             const std::function<bool(std::ostringstream&)>& body) {
        std::ostringstream detail;
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = body(detail);
        } catch (const std::exception& e) {
            detail << " exception: " << e.what();
            ok = false;
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (time_limit_s > 0.0 && elapsed > time_limit_s) {
            ok = false;
            detail << " [exceeded " << time_limit_s << " s limit]";
        }
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << number << ": " << name
                  << " (" << detail.str() << " " << elapsed << " s)" << std::endl;
        if (!ok) ++failures;
    }
};

ObservationSet make_observations(const Matrix& C, const std::vector<StateVector>& states,
                                 int N, double h, Scheme scheme) {
    ObservationSet obs;
    obs.C = C;
    obs.h = h;
    obs.scheme = scheme;
    for (int k = 0; k < N; ++k) obs.y.push_back(C * states[k]);
    return obs;
}

struct SeedData {
    StateVector truth;
    StateVector guess;
    std::vector<StateVector> reference;  // sampled on the k*h grid
};

SeedData make_seed_data(const LoadedModel& lm, double h, int N_max, std::uint64_t seed) {
    SeedData data;
    SplitRng rng(seed);
    data.truth = generate_truth(lm.model, InitLaw::OnePlusUniform, rng.split(0).next_u64());
    data.guess = generate_truth(lm.model, InitLaw::OnePlusUniform, rng.split(1).next_u64());
    std::vector<double> times;
    for (int k = 0; k < N_max; ++k) times.push_back(k * h);
    data.reference = reference_simulate(lm.model, data.truth, times).states;
    return data;
}

EstimationResult estimate_with_mask(const LoadedModel& lm, Scheme scheme, double h, int N,
                                    const SensorMask& mask, const SeedData& data,
                                    bool same_model) {
    const DiscreteModel dm{lm.model, scheme, h};
    const Matrix C = mask_to_selection_matrix(mask);
    std::vector<StateVector> states;
    if (same_model) {
        states = simulate(dm, data.truth, N).states;
    } else {
        states.assign(data.reference.begin(), data.reference.begin() + N);
    }
    const ObservationSet obs = make_observations(C, states, N, h, scheme);
    const EstimationProblem problem = make_estimation_problem(obs, dm, data.guess);
    return estimate_initial_state(problem, &data.truth);
}

SensorMask full_mask(int n) {
    SensorMask m;
    m.bits.assign(n, 1);
    return m;
}

// Random mask of r nodes inside the large SCC (AR excluded), mirroring the
// random-placement baseline of the error sweeps.
SensorMask random_scc_mask(int n, int r, int ar_index, std::uint64_t seed) {
    if (r >= n) return full_mask(n);
    SelectionConstraints c;
    c.n = n;
    c.r = r;
    c.excluded = {ar_index};
    return random_selection(c, seed);
}

std::vector<std::vector<int>> scc_by_reachability(const std::vector<std::vector<int>>& adj) {
    const int n = static_cast<int>(adj.size());
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) {
        reach[i][i] = true;
        std::vector<int> stack{i};
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v : adj[u]) {
                if (!reach[i][v]) {
                    reach[i][v] = true;
                    stack.push_back(v);
                }
            }
        }
    }
    std::vector<int> comp(n, -1);
    std::vector<std::vector<int>> components;
    for (int i = 0; i < n; ++i) {
        if (comp[i] >= 0) continue;
        std::vector<int> c;
        for (int j = 0; j < n; ++j) {
            if (reach[i][j] && reach[j][i]) {
                comp[j] = static_cast<int>(components.size());
                c.push_back(j);
            }
        }
        components.push_back(c);
    }
    return components;
}

std::string strip_timing_column(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        out << line.substr(0, line.rfind(',')) << "\n";
    }
    return out.str();
}

}  // namespace

int main() {
    CriterionRunner runner;
    const LoadedModel h2o2 = load_model("models/h2o2_mini.toml");
    const double h_rec = h2o2.recommended_h;
    const int n = h2o2.model.n;
    int ar_index = -1;
    for (int i = 0; i < n; ++i) {
        if (h2o2.model.node_names[i] == "AR") ar_index = i;
    }

    // ------------------------------------------------------------------
    runner.run(1, "integrator convergence orders (BE 1, TI 2, IRK 3)", 1.0,
               [&](std::ostringstream& detail) {
                   const ContinuousModel model = make_logistic_model();
                   const StateVector x0 = StateVector::Constant(1, 0.5);
                   const double exact = 0.7310585786300049;
                   bool ok = true;
                   for (auto [scheme, expected, tol] :
                        {std::tuple{Scheme::BE, 1.0, 0.15}, std::tuple{Scheme::TI, 2.0, 0.15},
                         std::tuple{Scheme::IRK, 3.0, 0.25}}) {
                       std::vector<double> errors;
                       for (double h : {0.1, 0.05, 0.025, 0.0125}) {
                           const int N = static_cast<int>(std::lround(1.0 / h)) + 1;
                           const Trajectory traj = simulate({model, scheme, h}, x0, N);
                           errors.push_back(std::abs(traj.states.back()[0] - exact));
                       }
                       const double order = std::log2(errors.front() / errors.back()) / 3.0;
                       detail << scheme_name(scheme) << "=" << order << " ";
                       ok = ok && std::abs(order - expected) <= tol;
                   }
                   return ok;
               });

    // ------------------------------------------------------------------
    runner.run(2, "analytic jacobian stacks vs finite differences on h2o2_mini", 10.0,
               [&](std::ostringstream& detail) {
                   SplitRng rng(2025);
                   StateVector x0(n);
                   for (int i = 0; i < n; ++i) x0[i] = 1.0 + rng.uniform();
                   const Matrix C = Matrix::Identity(n, n);
                   double worst = 0.0;
                   for (Scheme scheme : {Scheme::BE, Scheme::TI, Scheme::IRK}) {
                       const DiscreteModel dm{h2o2.model, scheme, h_rec};
                       const JacobianStack stack = stack_output_jacobian(dm, x0, 20, C, true);
                       const Matrix fd = finite_difference_stack(dm, x0, 20, C, true);
                       worst = std::max(worst, matrix_rel_err(stack.full, fd));
                   }
                   detail << "max rel err=" << worst;
                   return worst < 1e-5;
               });

    // ------------------------------------------------------------------
    runner.run(3, "exact recovery (same-model) and model-mismatch floor (reference)", 120.0,
               [&](std::ostringstream& detail) {
                   const int N = 50;
                   bool ok = true;
                   double worst_same = 0.0;
                   const Scheme schemes[3] = {Scheme::BE, Scheme::TI, Scheme::IRK};
                   for (int seed = 0; seed < 50; ++seed) {
                       SplitRng rng(3000 + seed);
                       SeedData data;
                       data.truth = generate_truth(h2o2.model, InitLaw::OnePlusUniform,
                                                   rng.split(0).next_u64());
                       data.guess = generate_truth(h2o2.model, InitLaw::OnePlusUniform,
                                                   rng.split(1).next_u64());
                       const EstimationResult res =
                           estimate_with_mask(h2o2, schemes[seed % 3], h_rec, N, full_mask(n),
                                              data, true);
                       worst_same = std::max(worst_same, *res.eta);
                       ok = ok && *res.eta < 1e-8;
                   }
                   detail << "max same-model eta=" << worst_same;

                   double floor_min = 1e300, floor_max = 0.0;
                   for (int seed = 0; seed < 10; ++seed) {
                       const SeedData data = make_seed_data(h2o2, h_rec, N, 3100 + seed);
                       const EstimationResult res =
                           estimate_with_mask(h2o2, Scheme::IRK, h_rec, N, full_mask(n), data,
                                              false);
                       floor_min = std::min(floor_min, *res.eta);
                       floor_max = std::max(floor_max, *res.eta);
                   }
                   detail << ", mismatch floor in [" << floor_min << ", " << floor_max << "]";
                   return ok && floor_min > 0.0 && floor_max < 1e-2;
               });

    // ------------------------------------------------------------------
    // Shared runs for criteria 4, 5 and 11.
    const int kSeeds = 20;
    std::vector<SeedData> seed_data;
    for (int seed = 0; seed < kSeeds; ++seed) {
        seed_data.push_back(make_seed_data(h2o2, h_rec, 200, 4000 + seed));
    }

    runner.run(4, "scheme ordering IRK <= TI <= BE for median eta and xi", 300.0,
               [&](std::ostringstream& detail) {
                   const int N = 50;
                   const int r = sensor_count_for_fraction(0.6, n);
                   std::map<Scheme, std::vector<double>> etas, xis;
                   for (int seed = 0; seed < kSeeds; ++seed) {
                       const SeedData& data = seed_data[seed];
                       const SensorMask mask = random_scc_mask(n, r, ar_index, 4400 + seed);
                       Trajectory ref;
                       ref.states.assign(data.reference.begin(), data.reference.begin() + N);
                       for (Scheme scheme : {Scheme::BE, Scheme::TI, Scheme::IRK}) {
                           const EstimationResult res =
                               estimate_with_mask(h2o2, scheme, h_rec, N, mask, data, false);
                           etas[scheme].push_back(*res.eta);
                           const Trajectory traj =
                               simulate({h2o2.model, scheme, h_rec}, data.truth, N);
                           std::vector<double> xi = trajectory_error(traj, ref);
                           xis[scheme].push_back(median({xi.begin() + 1, xi.end()}));
                       }
                   }
                   const double eta_be = median(etas[Scheme::BE]);
                   const double eta_ti = median(etas[Scheme::TI]);
                   const double eta_irk = median(etas[Scheme::IRK]);
                   const double xi_be = median(xis[Scheme::BE]);
                   const double xi_ti = median(xis[Scheme::TI]);
                   const double xi_irk = median(xis[Scheme::IRK]);
                   detail << "eta med irk/ti/be=" << eta_irk << "/" << eta_ti << "/" << eta_be
                          << " xi med=" << xi_irk << "/" << xi_ti << "/" << xi_be;
                   return eta_irk <= eta_ti && eta_ti <= eta_be && xi_irk <= xi_ti &&
                          xi_be >= xi_ti;
               });

    std::vector<double> kappa_f03, kappa_f10, z_f03, z_f10;
    runner.run(5, "median eta non-increasing in N and in f (10% band)", 600.0,
               [&](std::ostringstream& detail) {
                   const std::vector<int> N_values = {25, 50, 100, 200};
                   const std::vector<double> f_values = {0.3, 0.6, 1.0};
                   std::vector<double> eta_by_N, eta_by_f;

                   for (int N : N_values) {
                       const int r = sensor_count_for_fraction(0.6, n);
                       std::vector<double> etas;
                       for (int seed = 0; seed < kSeeds; ++seed) {
                           const SensorMask mask = random_scc_mask(n, r, ar_index, 4400 + seed);
                           etas.push_back(*estimate_with_mask(h2o2, Scheme::IRK, h_rec, N, mask,
                                                              seed_data[seed], false)
                                               .eta);
                       }
                       eta_by_N.push_back(median(etas));
                   }

                   for (double f : f_values) {
                       const int N = 50;
                       const int r = sensor_count_for_fraction(f, n);
                       std::vector<double> etas;
                       for (int seed = 0; seed < kSeeds; ++seed) {
                           const SensorMask mask = random_scc_mask(n, r, ar_index, 4500 + seed);
                           const EstimationResult res = estimate_with_mask(
                               h2o2, Scheme::IRK, h_rec, N, mask, seed_data[seed], false);
                           etas.push_back(*res.eta);
                           if (f == 0.3) {
                               kappa_f03.push_back(res.kappa);
                               z_f03.push_back(res.iterations);
                           } else if (f == 1.0) {
                               kappa_f10.push_back(res.kappa);
                               z_f10.push_back(res.iterations);
                           }
                       }
                       eta_by_f.push_back(median(etas));
                   }

                   detail << "eta(N)=";
                   for (double e : eta_by_N) detail << e << " ";
                   detail << "eta(f)=";
                   for (double e : eta_by_f) detail << e << " ";
                   bool ok = true;
                   for (std::size_t i = 1; i < eta_by_N.size(); ++i) {
                       ok = ok && eta_by_N[i] <= 1.1 * eta_by_N[i - 1];
                   }
                   for (std::size_t i = 1; i < eta_by_f.size(); ++i) {
                       ok = ok && eta_by_f[i] <= 1.1 * eta_by_f[i - 1];
                   }
                   return ok;
               });

    // ------------------------------------------------------------------
    runner.run(6, "empirical gramian definitions match the analytic linear gramian", 30.0,
               [&](std::ostringstream& detail) {
                   const int dim = 5;
                   SplitRng rng(600);
                   Matrix A(dim, dim);
                   for (int i = 0; i < dim; ++i)
                       for (int j = 0; j < dim; ++j) A(i, j) = rng.normal() / std::sqrt(dim);
                   Eigen::EigenSolver<Matrix> eig(A);
                   double alpha = -1e300;
                   for (int i = 0; i < dim; ++i)
                       alpha = std::max(alpha, eig.eigenvalues()[i].real());
                   A -= (alpha + 1.5) * Matrix::Identity(dim, dim);
                   const ContinuousModel model = make_linear_model(A);
                   Matrix C(3, dim);
                   for (int i = 0; i < 3; ++i)
                       for (int j = 0; j < dim; ++j) C(i, j) = rng.normal();

                   const double tau = 20.0;
                   const Matrix W = analytic_linear_gramian(A, C, tau);

                   auto errors_at = [&](double dt) {
                       GramianConfig cfg;
                       cfg.dt = dt;
                       cfg.segments = static_cast<int>(std::lround(tau / dt));
                       cfg.tau = cfg.segments * dt;
                       cfg.gamma = 0.5;
                       cfg.scales = {0.25, 0.5, 0.75, 1.0};
                       cfg.T_set = random_orthogonal_set(dim, 2, 606);
                       cfg.x0 = StateVector::Constant(dim, 1.0);
                       return std::array<double, 3>{
                           matrix_rel_err(gramian_def1(model, C, cfg).matrix, W),
                           matrix_rel_err(gramian_def2(model, C, cfg).matrix, W),
                           matrix_rel_err(gramian_def3(model, C, cfg).matrix, W)};
                   };

                   const auto coarse = errors_at(1e-3);
                   const auto fine = errors_at(5e-4);
                   bool ok = true;
                   for (int d = 0; d < 3; ++d) {
                       const double ratio = coarse[d] / fine[d];
                       detail << "def" << (d + 1) << " err=" << coarse[d] << " ratio=" << ratio
                              << " ";
                       ok = ok && coarse[d] < 1e-3 && ratio > 3.0 && ratio < 5.0;
                   }
                   return ok;
               });

    // ------------------------------------------------------------------
    runner.run(7, "optimized sensor masks beat random placement on h2o2_mini", 600.0,
               [&](std::ostringstream& detail) {
                   const int N = 200;
                   const int r = 4;
                   const SelectionConstraints constraints =
                       harness_constraints(h2o2.model, r, false);
                   bool ok = true;

                   // Method-3 mask eta vs the median of 100 random-mask etas.
                   for (int seed = 0; seed < 3; ++seed) {
                       const SeedData& data = seed_data[seed];
                       const DiscreteModel dm{h2o2.model, Scheme::IRK, h_rec};
                       const MaskObjective objective = jacobian_objective(dm, data.truth, N);
                       const SelectionResult m3 =
                           select_stochastic(objective, constraints, 200, 7000 + seed);
                       const double eta_m3 = *estimate_with_mask(h2o2, Scheme::IRK, h_rec, N,
                                                                 m3.mask, data, false)
                                                  .eta;
                       std::vector<double> random_etas;
                       for (int k = 0; k < 100; ++k) {
                           const SensorMask mask =
                               random_selection(constraints, 7100 + 100 * seed + k);
                           random_etas.push_back(*estimate_with_mask(h2o2, Scheme::IRK, h_rec,
                                                                     N, mask, data, false)
                                                      .eta);
                       }
                       const double med = median(random_etas);
                       detail << "seed" << seed << " m3=" << eta_m3 << " med(random)=" << med
                              << " ";
                       ok = ok && eta_m3 <= med;
                   }

                   // Greedy objective vs best-of-100-random; exhaustive bounds both.
                   int greedy_wins = 0;
                   bool exhaustive_ok = true;
                   for (int seed = 0; seed < 20; ++seed) {
                       const SeedData& data = seed_data[seed];
                       const DiscreteModel dm{h2o2.model, Scheme::IRK, h_rec};
                       const MaskObjective objective = jacobian_objective(dm, data.truth, N);
                       const SelectionResult greedy = select_greedy(objective, constraints);
                       ObjectiveValue best_random;
                       bool have = false;
                       for (int k = 0; k < 100; ++k) {
                           const ObjectiveValue v = objective(
                               random_selection(constraints, 7500 + 100 * seed + k));
                           if (!have || better(v, best_random)) {
                               best_random = v;
                               have = true;
                           }
                       }
                       if (!better(best_random, greedy.value)) ++greedy_wins;
                       const SelectionResult exhaustive =
                           select_exhaustive(objective, constraints);
                       exhaustive_ok = exhaustive_ok && !better(greedy.value, exhaustive.value) &&
                                       !better(best_random, exhaustive.value);
                   }
                   detail << "greedy wins " << greedy_wins << "/20, exhaustive bounds "
                          << (exhaustive_ok ? "hold" : "violated");
                   return ok && greedy_wins >= 18 && exhaustive_ok;
               });

    // ------------------------------------------------------------------
    runner.run(8, "simulation counts per objective evaluation (1, 2n, 2nvs)", 60.0,
               [&](std::ostringstream& detail) {
                   const SeedData& data = seed_data[0];
                   const int N = 30;
                   GramianConfig g2;
                   g2.gamma = 0.5;
                   g2.dt = h_rec;
                   g2.segments = N - 1;
                   g2.tau = g2.segments * h_rec;
                   g2.x0 = data.truth;
                   GramianConfig g3 = g2;
                   g3.scales = {0.25, 0.5, 0.75, 1.0};
                   g3.T_set = random_orthogonal_set(n, 2, 808);

                   SensorMask mask = random_scc_mask(n, 4, ar_index, 88);
                   const DiscreteModel dm{h2o2.model, Scheme::IRK, h_rec};

                   std::uint64_t t0 = simulation_count();
                   jacobian_objective(dm, data.truth, N)(mask);
                   const std::uint64_t jac_sims = simulation_count() - t0;

                   t0 = simulation_count();
                   gramian_objective(h2o2.model, g2, 2)(mask);
                   const std::uint64_t def2_sims = simulation_count() - t0;

                   t0 = simulation_count();
                   gramian_objective(h2o2.model, g3, 3)(mask);
                   const std::uint64_t def3_sims = simulation_count() - t0;

                   detail << "jacobian=" << jac_sims << " def2=" << def2_sims
                          << " def3=" << def3_sims << " (n=" << n << ", v=2, s=4)";
                   return jac_sims == 1 && def2_sims == static_cast<std::uint64_t>(2 * n) &&
                          def3_sims == static_cast<std::uint64_t>(2 * n * 2 * 4);
               });

    // ------------------------------------------------------------------
    runner.run(9, "OID structure of h2o2_mini and SCCs vs a reachability oracle", 60.0,
               [&](std::ostringstream& detail) {
                   const Digraph g = build_oid(h2o2.model, default_oid_samples(h2o2.model));
                   const SccDecomposition scc = scc_decompose(g);
                   bool ok = scc.components.size() == 2;
                   if (ok) {
                       const int ar_comp = scc.component_of[ar_index];
                       ok = scc.components[ar_comp].size() == 1 && !scc.is_root[ar_comp] &&
                            scc.is_root[1 - ar_comp];
                   }
                   detail << "h2o2 components=" << scc.components.size();

                   SplitRng rng(909);
                   int matched = 0;
                   for (int trial = 0; trial < 200; ++trial) {
                       SplitRng sub = rng.split(trial);
                       const int m = 2 + sub.below(49);
                       Digraph rg;
                       rg.n = m;
                       rg.adj.assign(m, {});
                       for (int i = 0; i < m; ++i) rg.names.push_back("n");
                       const double p = sub.uniform(0.01, 0.25);
                       for (int i = 0; i < m; ++i) {
                           for (int j = 0; j < m; ++j) {
                               if (sub.uniform() < p) rg.adj[i].push_back(j);
                           }
                       }
                       const SccDecomposition got = scc_decompose(rg);
                       auto expected = scc_by_reachability(rg.adj);
                       auto canon = [](std::vector<std::vector<int>> comps) {
                           for (auto& c : comps) std::sort(c.begin(), c.end());
                           std::sort(comps.begin(), comps.end());
                           return comps;
                       };
                       if (canon(got.components) == canon(expected)) ++matched;
                   }
                   detail << ", random graphs matched " << matched << "/200";
                   return ok && matched == 200;
               });

    // ------------------------------------------------------------------
    runner.run(10, "selection objective is monotone under adding sensors", 120.0,
               [&](std::ostringstream& detail) {
                   const LoadedModel hill = load_model("models/hill6.toml");
                   const DiscreteModel dm{hill.model, Scheme::IRK, hill.recommended_h};
                   const StateVector x0 = StateVector::Constant(6, 0.45);
                   int violations = 0;
                   for (int bits = 0; bits < (1 << 6); ++bits) {
                       SensorMask m;
                       m.bits.assign(6, 0);
                       for (int i = 0; i < 6; ++i) m.bits[i] = (bits >> i) & 1;
                       const ObjectiveValue base = selection_objective(dm, x0, 8, m);
                       for (int j = 0; j < 6; ++j) {
                           if (m.bits[j]) continue;
                           SensorMask grown = m;
                           grown.bits[j] = 1;
                           if (better(base, selection_objective(dm, x0, 8, grown))) ++violations;
                       }
                   }
                   detail << "violations=" << violations;
                   return violations == 0;
               });

    // ------------------------------------------------------------------
    runner.run(11, "conditioning and effort grow as f shrinks", 10.0,
               [&](std::ostringstream& detail) {
                   const double kappa_small = median(kappa_f03);
                   const double kappa_full = median(kappa_f10);
                   const double z_small = median(z_f03);
                   const double z_full = median(z_f10);
                   detail << "kappa " << kappa_small << " vs " << kappa_full << ", z " << z_small
                          << " vs " << z_full;
                   return !kappa_f03.empty() && kappa_small > kappa_full && z_small > z_full;
               });

    // ------------------------------------------------------------------
    runner.run(12, "sweep reruns are byte-identical modulo the timing column", 120.0,
               [&](std::ostringstream& detail) {
                   ExperimentConfig config;
                   config.model_path = "models/h2o2_mini.toml";
                   config.scheme = Scheme::IRK;
                   config.h = h_rec;
                   config.N_list = {25};
                   config.f_list = {0.6};
                   config.realizations = 3;
                   config.seed = 12;
                   config.solver = "stochastic";
                   config.budget = 30;
                   config.law = InitLaw::OnePlusUniform;
                   config.data = DataSource::Reference;
                   const SweepOutput a = run_sweep(config);
                   const SweepOutput b = run_sweep(config);
                   config.threads = 1;
                   const SweepOutput serial = run_sweep(config);
                   const bool ok =
                       strip_timing_column(a.csv) == strip_timing_column(b.csv) &&
                       strip_timing_column(a.csv) == strip_timing_column(serial.csv);
                   detail << a.records.size() << " rows, parallel/serial agree: " << ok;
                   return ok;
               });

    if (runner.failures == 0) {
        std::cout << "all criteria passed" << std::endl;
        return 0;
    }
    std::cout << runner.failures << " criteria failed" << std::endl;
    return 1;
}
