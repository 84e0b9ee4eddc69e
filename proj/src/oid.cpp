#include "netobs/oid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <stack>

#include "netobs/csvio.hpp"
#include "netobs/rng.hpp"

namespace netobs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::vector<int>> reverse_adjacency(const Digraph& g) {
    std::vector<std::vector<int>> radj(g.n);
    for (int u = 0; u < g.n; ++u) {
        for (int v : g.adj[u]) radj[v].push_back(u);
    }
    return radj;
}

// BFS distances over the given adjacency; -1 for unreachable.
std::vector<int> bfs_distances(const std::vector<std::vector<int>>& adj, int source) {
    std::vector<int> dist(adj.size(), -1);
    std::deque<int> queue{source};
    dist[source] = 0;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int v : adj[u]) {
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

}  // namespace

bool Digraph::has_edge(int from, int to) const {
    return std::binary_search(adj[from].begin(), adj[from].end(), to);
}

int Digraph::edge_count() const {
    int count = 0;
    for (const auto& list : adj) count += static_cast<int>(list.size());
    return count;
}

Digraph Digraph::without_self_loops() const {
    Digraph out = *this;
    for (int u = 0; u < n; ++u) {
        auto& list = out.adj[u];
        list.erase(std::remove(list.begin(), list.end(), u), list.end());
    }
    return out;
}

Digraph build_oid(const ContinuousModel& model, const std::vector<StateVector>& sample_states,
                  double threshold) {
    require(!sample_states.empty(), "build_oid: need at least one sample state");
    Digraph g;
    g.n = model.n;
    g.names = model.node_names;
    g.adj.assign(model.n, {});

    Matrix present = Matrix::Zero(model.n, model.n);
    for (const StateVector& x : sample_states) {
        const Matrix J = eval_field_jacobian(model, x);
        for (int i = 0; i < model.n; ++i) {
            for (int j = 0; j < model.n; ++j) {
                if (std::abs(J(i, j)) > threshold) present(i, j) = 1.0;
            }
        }
    }
    for (int i = 0; i < model.n; ++i) {
        for (int j = 0; j < model.n; ++j) {
            if (present(i, j) > 0.0) g.adj[i].push_back(j);
        }
    }
    return g;
}

std::vector<StateVector> default_oid_samples(const ContinuousModel& model, int count,
                                             std::uint64_t seed) {
    std::vector<StateVector> samples;
    SplitRng rng(seed);
    for (int k = 0; k < count; ++k) {
        SplitRng sub = rng.split(k);
        StateVector x(model.n);
        for (int i = 0; i < model.n; ++i) {
            const double lo = model.lower_bounds[i];
            const double hi = model.upper_bounds[i];
            if (std::isfinite(lo) && std::isfinite(hi)) {
                const double w = hi - lo;
                x[i] = lo + w * sub.uniform(0.05, 0.95);
            } else if (std::isfinite(lo)) {
                x[i] = lo + sub.uniform(0.5, 1.5);
            } else if (std::isfinite(hi)) {
                x[i] = hi - sub.uniform(0.5, 1.5);
            } else {
                x[i] = sub.uniform(-1.0, 1.0);
            }
        }
        samples.push_back(std::move(x));
    }
    return samples;
}

SccDecomposition scc_decompose(const Digraph& g) {
    // Iterative Tarjan.
    const int n = g.n;
    std::vector<int> index(n, -1), lowlink(n, 0), on_stack(n, 0);
    std::vector<int> component_of(n, -1);
    std::vector<std::vector<int>> components;
    std::stack<int> stack;
    int next_index = 0;

    struct Frame {
        int node;
        std::size_t edge = 0;
    };

    for (int start = 0; start < n; ++start) {
        if (index[start] >= 0) continue;
        std::vector<Frame> call_stack{{start}};
        index[start] = lowlink[start] = next_index++;
        stack.push(start);
        on_stack[start] = 1;

        while (!call_stack.empty()) {
            Frame& frame = call_stack.back();
            const int u = frame.node;
            if (frame.edge < g.adj[u].size()) {
                const int v = g.adj[u][frame.edge++];
                if (index[v] < 0) {
                    index[v] = lowlink[v] = next_index++;
                    stack.push(v);
                    on_stack[v] = 1;
                    call_stack.push_back({v});
                } else if (on_stack[v]) {
                    lowlink[u] = std::min(lowlink[u], index[v]);
                }
            } else {
                if (lowlink[u] == index[u]) {
                    std::vector<int> comp;
                    int w;
                    do {
                        w = stack.top();
                        stack.pop();
                        on_stack[w] = 0;
                        component_of[w] = static_cast<int>(components.size());
                        comp.push_back(w);
                    } while (w != u);
                    std::sort(comp.begin(), comp.end());
                    components.push_back(std::move(comp));
                }
                call_stack.pop_back();
                if (!call_stack.empty()) {
                    const int parent = call_stack.back().node;
                    lowlink[parent] = std::min(lowlink[parent], lowlink[u]);
                }
            }
        }
    }

    SccDecomposition scc;
    scc.components = std::move(components);
    scc.component_of = std::move(component_of);
    const int m = static_cast<int>(scc.components.size());
    scc.condensation.assign(m, {});
    scc.is_root.assign(m, true);
    for (int u = 0; u < n; ++u) {
        for (int v : g.adj[u]) {
            const int cu = scc.component_of[u];
            const int cv = scc.component_of[v];
            if (cu != cv) {
                scc.condensation[cu].push_back(cv);
                scc.is_root[cv] = false;
            }
        }
    }
    for (auto& list : scc.condensation) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return scc;
}

CentralityTable centralities(const Digraph& g) {
    const int n = g.n;
    CentralityTable t;
    t.in_degree.assign(n, 0.0);
    t.out_degree.assign(n, 0.0);
    t.in_closeness.assign(n, 0.0);
    t.out_closeness.assign(n, 0.0);
    t.betweenness.assign(n, 0.0);
    t.pagerank.assign(n, 1.0 / n);

    const auto radj = reverse_adjacency(g);
    for (int u = 0; u < n; ++u) {
        t.out_degree[u] = static_cast<double>(g.adj[u].size());
        t.in_degree[u] = static_cast<double>(radj[u].size());
    }

    for (int u = 0; u < n; ++u) {
        const auto dist_out = bfs_distances(g.adj, u);
        const auto dist_in = bfs_distances(radj, u);
        for (int v = 0; v < n; ++v) {
            if (v == u) continue;
            if (dist_out[v] > 0) t.out_closeness[u] += 1.0 / dist_out[v];
            if (dist_in[v] > 0) t.in_closeness[u] += 1.0 / dist_in[v];
        }
    }

    // Brandes betweenness on the unweighted digraph.
    for (int s = 0; s < n; ++s) {
        std::vector<int> order;
        std::vector<std::vector<int>> preds(n);
        std::vector<double> sigma(n, 0.0);
        std::vector<int> dist(n, -1);
        sigma[s] = 1.0;
        dist[s] = 0;
        std::deque<int> queue{s};
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            order.push_back(u);
            for (int v : g.adj[u]) {
                if (v == u) continue;
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
                if (dist[v] == dist[u] + 1) {
                    sigma[v] += sigma[u];
                    preds[v].push_back(u);
                }
            }
        }
        std::vector<double> delta(n, 0.0);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const int w = *it;
            for (int u : preds[w]) {
                delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w]);
            }
            if (w != s) t.betweenness[w] += delta[w];
        }
    }

    // Pagerank power iteration; dangling mass spread uniformly.
    const double damping = 0.85;
    std::vector<double> pr(n, 1.0 / n), next(n, 0.0);
    for (int it = 0; it < 10000; ++it) {
        double dangling = 0.0;
        for (int u = 0; u < n; ++u) {
            if (g.adj[u].empty()) dangling += pr[u];
        }
        std::fill(next.begin(), next.end(), (1.0 - damping) / n + damping * dangling / n);
        for (int u = 0; u < n; ++u) {
            if (g.adj[u].empty()) continue;
            const double share = damping * pr[u] / static_cast<double>(g.adj[u].size());
            for (int v : g.adj[u]) next[v] += share;
        }
        double diff = 0.0;
        for (int u = 0; u < n; ++u) diff += std::abs(next[u] - pr[u]);
        pr.swap(next);
        if (diff < 1e-10) break;
    }
    t.pagerank = pr;
    return t;
}

const std::vector<std::string>& CentralityTable::measure_names() {
    static const std::vector<std::string> names = {"in-degree",    "out-degree",
                                                   "in-closeness", "out-closeness",
                                                   "betweenness",  "pagerank"};
    return names;
}

const std::vector<double>& CentralityTable::measure(const std::string& name) const {
    if (name == "in-degree") return in_degree;
    if (name == "out-degree") return out_degree;
    if (name == "in-closeness") return in_closeness;
    if (name == "out-closeness") return out_closeness;
    if (name == "betweenness") return betweenness;
    if (name == "pagerank") return pagerank;
    throw ContractError("unknown centrality measure: " + name);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size() && a.size() >= 3, "pearson: need >= 3 paired samples");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return kNaN;
    return cov / std::sqrt(va * vb);
}

std::vector<std::pair<std::string, double>> selection_correlation(
    const std::vector<double>& probabilities, const CentralityTable& table) {
    std::vector<std::pair<std::string, double>> out;
    for (const std::string& name : CentralityTable::measure_names()) {
        out.emplace_back(name, pearson(probabilities, table.measure(name)));
    }
    return out;
}

std::string digraph_edge_list(const Digraph& g) {
    std::ostringstream os;
    for (int u = 0; u < g.n; ++u) {
        for (int v : g.adj[u]) os << g.names[u] << " " << g.names[v] << "\n";
    }
    return os.str();
}

std::string digraph_tgf(const Digraph& g) {
    std::ostringstream os;
    for (int u = 0; u < g.n; ++u) os << (u + 1) << " " << g.names[u] << "\n";
    os << "#\n";
    for (int u = 0; u < g.n; ++u) {
        for (int v : g.adj[u]) os << (u + 1) << " " << (v + 1) << "\n";
    }
    return os.str();
}

std::string centrality_csv(const Digraph& g, const CentralityTable& table) {
    std::ostringstream os;
    os << "node";
    for (const std::string& name : CentralityTable::measure_names()) os << "," << name;
    os << "\n";
    for (int u = 0; u < g.n; ++u) {
        os << g.names[u];
        for (const std::string& name : CentralityTable::measure_names()) {
            os << "," << format_double(table.measure(name)[u]);
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace netobs
