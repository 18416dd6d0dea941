#pragma once

// Cluster graphs: clusters carrying factors, linked by sepsets that satisfy
// the running intersection property (for every variable X the edges whose
// sepset holds X form a tree over the clusters containing X).
//
// Two constructions are provided. `bethe` builds the factor-graph topology
// with one vacuous hub cluster per variable. `ltrip` builds, for every
// variable, a maximum spanning tree over the clusters containing it and
// superimposes those layers into multivariate sepsets.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgmforge/factor.hpp"
#include "pgmforge/variables.hpp"

namespace pgm {

struct Cluster {
  std::size_t id = 0;
  std::vector<VarId> scope;
  SparseFactor factor;
};

/// Undirected edge i < j and the variables exchanged over it.
struct Sepset {
  std::size_t i = 0;
  std::size_t j = 0;
  std::vector<VarId> vars;
};

class ClusterGraph {
 public:
  std::size_t add_cluster(SparseFactor factor);
  /// Adds an edge with the given sepset; fails on self-loops or a repeated pair.
  std::size_t add_edge(std::size_t i, std::size_t j, std::vector<VarId> vars);
  /// Inserts `var` into the sepset of (i, j), creating the edge if needed.
  void add_to_sepset(std::size_t i, std::size_t j, VarId var);

  const std::vector<Cluster>& clusters() const noexcept { return clusters_; }
  const Cluster& cluster(std::size_t i) const { return clusters_.at(i); }
  const std::vector<Sepset>& sepsets() const noexcept { return sepsets_; }
  const Sepset& sepset(std::size_t e) const { return sepsets_.at(e); }
  /// Edge indices incident to cluster i, in insertion order.
  const std::vector<std::size_t>& incident(std::size_t i) const { return incident_.at(i); }
  std::size_t degree(std::size_t i) const { return incident_.at(i).size(); }
  std::size_t other_end(std::size_t edge, std::size_t i) const;
  std::optional<std::size_t> edge_between(std::size_t i, std::size_t j) const;

  std::size_t cluster_count() const noexcept { return clusters_.size(); }
  std::size_t edge_count() const noexcept { return sepsets_.size(); }

  /// Replaces a cluster's factor; the scope must stay the same.
  void set_factor(std::size_t i, SparseFactor factor);

  /// Reduces every cluster by the evidence, removes observed variables from
  /// cluster scopes and sepsets, and drops edges whose sepset becomes empty.
  ClusterGraph observed(const Assignment& evidence) const;

 private:
  std::vector<Cluster> clusters_;
  std::vector<Sepset> sepsets_;
  std::vector<std::vector<std::size_t>> incident_;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_index_;
};

/// Weight of linking two clusters inside one variable layer. The default is
/// the size of the scope intersection; other criteria plug in here.
using ConnectionWeight = std::function<double(const Cluster&, const Cluster&)>;

double intersection_size(const Cluster& a, const Cluster& b);

/// Per-variable layer weights after emphasis. Indices are positions in
/// `clusters` (ascending cluster ids).
struct LayerWeights {
  VarId variable;
  std::vector<std::size_t> clusters;
  /// Symmetric matrix of emphasised weights.
  std::vector<std::vector<double>> weights;
  /// Number of maximal-weight links per cluster (t_i).
  std::vector<std::size_t> maximal_count;
  /// Largest initial weight (m).
  double maximal_weight = 0.0;

  double weight(std::size_t a, std::size_t b) const { return weights[a][b]; }
};

LayerWeights connection_weights(const ClusterGraph& graph, VarId variable,
                                std::vector<std::size_t> clusters,
                                const ConnectionWeight& weight = intersection_size);

/// Maximum spanning tree over a complete graph given by a symmetric weight
/// matrix (Prim-Jarnik). Node 0 seeds the tree. Among equally heavy links the
/// one whose tree endpoint joined most recently wins, then the lowest new node.
/// Returned edges are (min, max) pairs in the order they were added.
std::vector<std::pair<std::size_t, std::size_t>> max_spanning_tree(
    const std::vector<std::vector<double>>& weights);

/// Multiplies every factor whose scope is contained in another factor's scope
/// into the lowest-index qualifying superset. Identical scopes fold into the
/// earliest one.
std::vector<SparseFactor> absorb_subsets(std::vector<SparseFactor> factors,
                                         std::size_t cap = kDefaultEntryCap);

ClusterGraph ltrip(std::vector<SparseFactor> factors,
                   const ConnectionWeight& weight = intersection_size);

/// Factors keep indices 0..n-1; hub clusters follow in ascending variable order.
ClusterGraph bethe(std::vector<SparseFactor> factors);

struct RipViolation {
  std::optional<VarId> variable;
  std::string reason;
};

std::vector<RipViolation> validate_rip(const ClusterGraph& graph);

/// True when the graph is a forest (every component a tree).
bool is_tree(const ClusterGraph& graph);

/// {"clusters": [{"id", "scope"}], "sepsets": [{"i", "j", "vars"}]}; variables
/// are labelled through the registry when one is given, numeric ids otherwise.
nlohmann::json graph_to_json(const ClusterGraph& graph, const VariableRegistry* registry = nullptr);

}  // namespace pgm
