#include "netisac/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "netisac/rng.hpp"

namespace netisac {

NetworkGraph::NetworkGraph(int n_users) : n_(n_users) {
    if (n_users < 1) throw ParameterError("graph needs at least one user");
    adj_.assign(static_cast<std::size_t>(n_) * n_, 0);
    for (int k = 0; k < n_; ++k) adj_[index(k, k)] = 1;
}

NetworkGraph NetworkGraph::from_edges(int n_users, const std::vector<std::pair<int, int>>& edges) {
    NetworkGraph g(n_users);
    for (auto [l, k] : edges) g.add_edge(l, k);
    return g;
}

void NetworkGraph::add_edge(int l, int k) {
    if (l < 0 || k < 0 || l >= n_ || k >= n_) throw ParameterError("edge endpoint out of range");
    adj_[index(l, k)] = 1;
    adj_[index(k, l)] = 1;
}

int NetworkGraph::degree(int k) const {
    int d = 0;
    for (int l = 0; l < n_; ++l)
        if (l != k && adjacent(l, k)) ++d;
    return d;
}

double NetworkGraph::mean_degree() const {
    double s = 0.0;
    for (int k = 0; k < n_; ++k) s += degree(k);
    return s / n_;
}

bool NetworkGraph::connected() const {
    std::vector<char> seen(n_, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
        const int k = q.front();
        q.pop();
        for (int l = 0; l < n_; ++l) {
            if (!seen[l] && adjacent(k, l)) {
                seen[l] = 1;
                ++count;
                q.push(l);
            }
        }
    }
    return count == n_;
}

std::vector<std::pair<int, int>> NetworkGraph::edges() const {
    std::vector<std::pair<int, int>> out;
    for (int l = 0; l < n_; ++l)
        for (int k = l + 1; k < n_; ++k)
            if (adjacent(l, k)) out.emplace_back(l, k);
    return out;
}

nlohmann::json NetworkGraph::to_json() const {
    nlohmann::json j;
    j["n_users"] = n_;
    j["edges"] = nlohmann::json::array();
    for (auto [l, k] : edges()) j["edges"].push_back({l, k});
    return j;
}

NetworkGraph NetworkGraph::from_json(const nlohmann::json& j) {
    if (!j.contains("n_users") || !j.contains("edges")) throw ConfigError("graph JSON needs n_users and edges");
    NetworkGraph g(j.at("n_users").get<int>());
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw ConfigError("graph edge must be a pair");
        g.add_edge(e[0].get<int>(), e[1].get<int>());
    }
    return g;
}

NetworkGraph build_random_network(int n_users, double avg_degree, std::uint64_t seed) {
    if (n_users < 2) throw ParameterError("random network needs at least 2 users");
    if (!(avg_degree >= 1.0) || !(avg_degree < n_users))
        throw ParameterError("avg_degree must lie in [1, n_users)");

    const double p = std::min(1.0, avg_degree / (n_users - 1));
    Rng rng(derive_seed(seed, "topology"));
    constexpr int kMaxAttempts = 100000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        NetworkGraph g(n_users);
        for (int l = 0; l < n_users; ++l)
            for (int k = l + 1; k < n_users; ++k)
                if (rng.uniform() < p) g.add_edge(l, k);
        if (g.connected() && std::abs(g.mean_degree() - avg_degree) <= 1.0) return g;
    }
    throw ParameterError("could not sample a connected graph with the requested degree");
}

CombinationMatrix metropolis_weights(const NetworkGraph& graph) {
    const int n = graph.n_users();
    CombinationMatrix c = CombinationMatrix::Zero(n, n);
    std::vector<int> deg(n);
    for (int k = 0; k < n; ++k) deg[k] = graph.degree(k);
    for (int k = 0; k < n; ++k) {
        double off = 0.0;
        for (int l = 0; l < n; ++l) {
            if (l == k || !graph.adjacent(l, k)) continue;
            c(l, k) = 1.0 / std::max(deg[k], deg[l]);
            off += c(l, k);
        }
        c(k, k) = std::max(0.0, 1.0 - off);  // exact zero can round to -eps
    }
    return c;
}

ValidationReport validate_combination(const CombinationMatrix& c, const NetworkGraph& graph, double tol) {
    ValidationReport rep;
    const int n = graph.n_users();
    if (c.rows() != n || c.cols() != n) {
        rep.pass = false;
        rep.violations.push_back({"shape", static_cast<int>(c.rows()), static_cast<int>(c.cols()), 0.0});
        return rep;
    }
    for (int k = 0; k < n; ++k) {
        const double dev = std::abs(c.col(k).sum() - 1.0);
        rep.max_column_deviation = std::max(rep.max_column_deviation, dev);
        if (dev > tol) rep.violations.push_back({"column_sum", -1, k, c.col(k).sum()});
        rep.max_row_deviation = std::max(rep.max_row_deviation, std::abs(c.row(k).sum() - 1.0));
        for (int l = 0; l < n; ++l) {
            const double v = c(l, k);
            if (v < -tol) rep.violations.push_back({"negative", l, k, v});
            else if (v > 1.0 + tol) rep.violations.push_back({"range", l, k, v});
            if (!graph.adjacent(l, k) && std::abs(v) > tol) rep.violations.push_back({"support", l, k, v});
        }
    }
    rep.pass = rep.violations.empty();
    return rep;
}

}  // namespace netisac
