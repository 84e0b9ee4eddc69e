#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "netobs/model.hpp"

namespace netobs {

// Observability inference diagram: edge i -> j when variable j appears in
// the equation of variable i. Self-loops are kept in the edge set (they do
// not change the SCC structure) and can be stripped for display export.
struct Digraph {
    int n = 0;
    std::vector<std::string> names;
    std::vector<std::vector<int>> adj;  // sorted out-neighbor lists, no duplicates

    bool has_edge(int from, int to) const;
    int edge_count() const;
    Digraph without_self_loops() const;
};

struct SccDecomposition {
    std::vector<std::vector<int>> components;    // sorted node lists
    std::vector<int> component_of;               // node -> component index
    std::vector<std::vector<int>> condensation;  // component adjacency, acyclic
    std::vector<bool> is_root;                   // no incoming condensation edge
};

// Numeric OID construction: edge i -> j iff |dq_i/dx_j| > threshold at any
// of the sample states.
Digraph build_oid(const ContinuousModel& model, const std::vector<StateVector>& sample_states,
                  double threshold = 0.0);

// Seeded interior sample states for build_oid. Coordinates with two finite
// bounds are drawn from the inner 90% of the box; half-bounded ones from
// bound + (0.5, 1.5); unbounded ones from (-1, 1).
std::vector<StateVector> default_oid_samples(const ContinuousModel& model, int count = 10,
                                             std::uint64_t seed = 20240901);

SccDecomposition scc_decompose(const Digraph& g);

struct CentralityTable {
    std::vector<double> in_degree;
    std::vector<double> out_degree;
    std::vector<double> in_closeness;   // harmonic, over nodes that reach i
    std::vector<double> out_closeness;  // harmonic, over nodes reachable from i
    std::vector<double> betweenness;
    std::vector<double> pagerank;       // damping 0.85, |sum - 1| < 1e-9

    static const std::vector<std::string>& measure_names();
    const std::vector<double>& measure(const std::string& name) const;
};

CentralityTable centralities(const Digraph& g);

// Pearson correlation of the selection probabilities against each centrality
// measure; NaN when either side has zero variance.
std::vector<std::pair<std::string, double>> selection_correlation(
    const std::vector<double>& probabilities, const CentralityTable& table);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

std::string digraph_edge_list(const Digraph& g);
// Trivial graph format: "id name" lines, '#', "from to" lines.
std::string digraph_tgf(const Digraph& g);
std::string centrality_csv(const Digraph& g, const CentralityTable& table);

}  // namespace netobs
