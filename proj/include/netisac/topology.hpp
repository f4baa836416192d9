#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "netisac/types.hpp"

namespace netisac {

/// Undirected sensing-user graph. Self-loops are stored explicitly so that
/// support checks on the combination matrix are uniform.
class NetworkGraph {
public:
    explicit NetworkGraph(int n_users);

    /// Builds a graph from an undirected edge list (self-loops ignored).
    static NetworkGraph from_edges(int n_users, const std::vector<std::pair<int, int>>& edges);

    int n_users() const { return n_; }
    bool adjacent(int l, int k) const { return adj_[index(l, k)] != 0; }
    /// Link count of user k, excluding itself.
    int degree(int k) const;
    double mean_degree() const;
    bool connected() const;
    std::vector<std::pair<int, int>> edges() const;

    void add_edge(int l, int k);

    nlohmann::json to_json() const;
    static NetworkGraph from_json(const nlohmann::json& j);

private:
    std::size_t index(int l, int k) const { return static_cast<std::size_t>(l) * n_ + k; }
    int n_;
    std::vector<char> adj_;
};

/// Column-stochastic fusion weights; entry (l, k) is the weight user k puts
/// on the intermediate estimate received from user l.
using CombinationMatrix = RMat;

/// Erdos-Renyi graph with edge probability avg_degree/(N-1), resampled until
/// it is connected and its mean degree lies within +-1 of avg_degree.
NetworkGraph build_random_network(int n_users, double avg_degree, std::uint64_t seed);

CombinationMatrix metropolis_weights(const NetworkGraph& graph);

struct Violation {
    std::string kind;  // "column_sum" | "negative" | "support" | "range" | "shape"
    int row = -1;
    int col = -1;
    double value = 0.0;
};

struct ValidationReport {
    bool pass = true;
    double max_column_deviation = 0.0;
    double max_row_deviation = 0.0;  // informational only
    std::vector<Violation> violations;
};

ValidationReport validate_combination(const CombinationMatrix& c, const NetworkGraph& graph,
                                      double tol = 1e-12);

}  // namespace netisac
