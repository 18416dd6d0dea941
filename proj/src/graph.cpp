#include "pgmforge/graph.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

#include "pgmforge/errors.hpp"

namespace pgm {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  /// False when a and b were already joined.
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[std::max(a, b)] = std::min(a, b);
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

std::string describe(VarId v) { return "X" + std::to_string(v.value); }

std::vector<VarId> all_variables(const std::vector<SparseFactor>& factors) {
  std::set<VarId> vars;
  for (const auto& f : factors) vars.insert(f.scope().begin(), f.scope().end());
  return {vars.begin(), vars.end()};
}

}  // namespace

// ClusterGraph

std::size_t ClusterGraph::add_cluster(SparseFactor factor) {
  Cluster c;
  c.id = clusters_.size();
  c.scope.assign(factor.scope().begin(), factor.scope().end());
  c.factor = std::move(factor);
  clusters_.push_back(std::move(c));
  incident_.emplace_back();
  return clusters_.back().id;
}

std::size_t ClusterGraph::add_edge(std::size_t i, std::size_t j, std::vector<VarId> vars) {
  if (i == j) fail(ErrorCode::MalformedSpec, "self-edges are not allowed");
  if (i >= clusters_.size() || j >= clusters_.size())
    fail(ErrorCode::MalformedSpec, "edge endpoint out of range");
  const auto key = std::minmax(i, j);
  if (edge_index_.contains(key)) fail(ErrorCode::MalformedSpec, "at most one edge per cluster pair");
  std::ranges::sort(vars);
  const std::size_t e = sepsets_.size();
  sepsets_.push_back(Sepset{key.first, key.second, std::move(vars)});
  edge_index_.emplace(key, e);
  incident_[i].push_back(e);
  incident_[j].push_back(e);
  return e;
}

void ClusterGraph::add_to_sepset(std::size_t i, std::size_t j, VarId var) {
  if (auto e = edge_between(i, j)) {
    auto& vars = sepsets_[*e].vars;
    const auto it = std::ranges::lower_bound(vars, var);
    if (it == vars.end() || *it != var) vars.insert(it, var);
  } else {
    add_edge(i, j, {var});
  }
}

std::size_t ClusterGraph::other_end(std::size_t edge, std::size_t i) const {
  const auto& s = sepsets_.at(edge);
  return s.i == i ? s.j : s.i;
}

std::optional<std::size_t> ClusterGraph::edge_between(std::size_t i, std::size_t j) const {
  const auto it = edge_index_.find(std::minmax(i, j));
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

void ClusterGraph::set_factor(std::size_t i, SparseFactor factor) {
  auto& c = clusters_.at(i);
  if (!std::ranges::equal(c.scope, factor.scope()))
    fail(ErrorCode::ScopeMismatch, "replacement factor must keep the cluster scope");
  c.factor = std::move(factor);
}

ClusterGraph ClusterGraph::observed(const Assignment& evidence) const {
  ClusterGraph out;
  for (const auto& c : clusters_) {
    Assignment local;
    for (VarId v : c.scope)
      if (auto it = evidence.find(v); it != evidence.end()) local.insert(*it);
    out.add_cluster(local.empty() ? c.factor : reduce(c.factor, local));
  }
  for (const auto& s : sepsets_) {
    std::vector<VarId> vars;
    for (VarId v : s.vars)
      if (!evidence.contains(v)) vars.push_back(v);
    if (!vars.empty()) out.add_edge(s.i, s.j, std::move(vars));
  }
  return out;
}

// Construction

double intersection_size(const Cluster& a, const Cluster& b) {
  return static_cast<double>(scope_intersection(a.scope, b.scope).size());
}

LayerWeights connection_weights(const ClusterGraph& graph, VarId variable,
                                std::vector<std::size_t> clusters,
                                const ConnectionWeight& weight) {
  std::ranges::sort(clusters);
  const std::size_t n = clusters.size();
  LayerWeights layer;
  layer.variable = variable;
  layer.clusters = clusters;
  layer.weights.assign(n, std::vector<double>(n, 0.0));
  layer.maximal_count.assign(n, 0);
  if (n < 2) return layer;

  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double w = weight(graph.cluster(clusters[a]), graph.cluster(clusters[b]));
      layer.weights[a][b] = layer.weights[b][a] = w;
      m = std::max(m, w);
    }
  layer.maximal_weight = m;
  // Emphasise clusters strongly connected to several others: every cluster
  // adds its count of maximal links to all of its links.
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b && layer.weights[a][b] == m) ++layer.maximal_count[a];
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double bonus = static_cast<double>(layer.maximal_count[a] + layer.maximal_count[b]);
      layer.weights[a][b] += bonus;
      layer.weights[b][a] += bonus;
    }
  return layer;
}

std::vector<std::pair<std::size_t, std::size_t>> max_spanning_tree(
    const std::vector<std::vector<double>>& weights) {
  const std::size_t n = weights.size();
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  if (n < 2) return edges;
  constexpr double kUnset = -std::numeric_limits<double>::infinity();
  std::vector<bool> in_tree(n, false);
  std::vector<double> key(n, kUnset);
  std::vector<std::size_t> parent(n, 0);
  std::size_t current = 0;
  in_tree[0] = true;
  for (std::size_t added = 1; added < n; ++added) {
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      // >= lets the newest tree node take over equally heavy links.
      if (weights[current][v] >= key[v]) {
        key[v] = weights[current][v];
        parent[v] = current;
      }
    }
    std::size_t best = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!in_tree[v] && (best == n || key[v] > key[best])) best = v;
    in_tree[best] = true;
    edges.emplace_back(std::min(parent[best], best), std::max(parent[best], best));
    current = best;
  }
  return edges;
}

std::vector<SparseFactor> absorb_subsets(std::vector<SparseFactor> factors, std::size_t cap) {
  const std::size_t n = factors.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Smallest scopes first so chains fold upwards; among equal sizes the later
  // factor goes first so identical scopes land in the earliest one.
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) {
    if (factors[a].arity() != factors[b].arity()) return factors[a].arity() < factors[b].arity();
    return a > b;
  });
  std::vector<bool> absorbed(n, false);
  for (std::size_t i : order) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || absorbed[j]) continue;
      if (!scope_includes(factors[j].scope(), factors[i].scope())) continue;
      if (factors[j].arity() == factors[i].arity() && j > i) continue;
      factors[j] = multiply(factors[j], factors[i], cap);
      absorbed[i] = true;
      break;
    }
  }
  std::vector<SparseFactor> out;
  for (std::size_t i = 0; i < n; ++i)
    if (!absorbed[i]) out.push_back(std::move(factors[i]));
  return out;
}

ClusterGraph ltrip(std::vector<SparseFactor> factors, const ConnectionWeight& weight) {
  const auto vars = all_variables(factors);
  ClusterGraph graph;
  for (auto& f : factors) graph.add_cluster(std::move(f));
  for (VarId x : vars) {
    std::vector<std::size_t> holders;
    for (const auto& c : graph.clusters())
      if (std::ranges::binary_search(c.scope, x)) holders.push_back(c.id);
    if (holders.size() < 2) continue;
    const auto layer = connection_weights(graph, x, holders, weight);
    for (const auto& [a, b] : max_spanning_tree(layer.weights))
      graph.add_to_sepset(layer.clusters[a], layer.clusters[b], x);
  }
  return graph;
}

ClusterGraph bethe(std::vector<SparseFactor> factors) {
  const auto vars = all_variables(factors);
  ClusterGraph graph;
  for (auto& f : factors) graph.add_cluster(std::move(f));
  const std::size_t n = graph.cluster_count();
  for (VarId x : vars) {
    std::optional<Domain> domain;
    for (std::size_t i = 0; i < n && !domain; ++i)
      if (graph.cluster(i).factor.contains(x)) domain = graph.cluster(i).factor.domain(x);
    const std::size_t hub = graph.add_cluster(vacuous({x}, {*domain}));
    for (std::size_t i = 0; i < n; ++i)
      if (graph.cluster(i).factor.contains(x)) graph.add_edge(i, hub, {x});
  }
  return graph;
}

// Checks

std::vector<RipViolation> validate_rip(const ClusterGraph& graph) {
  std::vector<RipViolation> out;
  std::set<VarId> vars;
  for (const auto& c : graph.clusters()) vars.insert(c.scope.begin(), c.scope.end());
  for (const auto& s : graph.sepsets()) {
    if (s.vars.empty())
      out.push_back({std::nullopt, "empty sepset on edge (" + std::to_string(s.i) + "," +
                                       std::to_string(s.j) + ")"});
    const auto shared = scope_intersection(graph.cluster(s.i).scope, graph.cluster(s.j).scope);
    for (VarId v : s.vars)
      if (!std::ranges::binary_search(shared, v))
        out.push_back({v, describe(v) + " on edge (" + std::to_string(s.i) + "," +
                              std::to_string(s.j) + ") is not shared by both clusters"});
  }
  for (VarId x : vars) {
    std::vector<std::size_t> holders;
    for (const auto& c : graph.clusters())
      if (std::ranges::binary_search(c.scope, x)) holders.push_back(c.id);
    DisjointSets sets(graph.cluster_count());
    std::size_t edges = 0;
    bool cycle = false;
    for (const auto& s : graph.sepsets()) {
      if (!std::ranges::binary_search(s.vars, x)) continue;
      ++edges;
      if (!sets.unite(s.i, s.j)) cycle = true;
    }
    if (cycle) out.push_back({x, describe(x) + " has more than one sepset path between clusters"});
    const std::size_t root = sets.find(holders.front());
    const bool connected =
        std::ranges::all_of(holders, [&](std::size_t h) { return sets.find(h) == root; });
    if (!connected) out.push_back({x, describe(x) + " occurrences are not linked by sepsets"});
    if (!cycle && connected && edges + 1 != holders.size())
      out.push_back({x, describe(x) + " sepsets do not form a tree"});
  }
  return out;
}

bool is_tree(const ClusterGraph& graph) {
  DisjointSets sets(graph.cluster_count());
  for (const auto& s : graph.sepsets())
    if (!sets.unite(s.i, s.j)) return false;
  return true;
}

nlohmann::json graph_to_json(const ClusterGraph& graph, const VariableRegistry* registry) {
  auto name = [&](VarId v) -> nlohmann::json {
    if (registry) return registry->label(v);
    return v.value;
  };
  nlohmann::json out;
  out["clusters"] = nlohmann::json::array();
  for (const auto& c : graph.clusters()) {
    auto scope = nlohmann::json::array();
    for (VarId v : c.scope) scope.push_back(name(v));
    out["clusters"].push_back({{"id", c.id}, {"scope", scope}});
  }
  out["sepsets"] = nlohmann::json::array();
  for (const auto& s : graph.sepsets()) {
    auto vars = nlohmann::json::array();
    for (VarId v : s.vars) vars.push_back(name(v));
    out["sepsets"].push_back({{"i", s.i}, {"j", s.j}, {"vars", vars}});
  }
  return out;
}

}  // namespace pgm
