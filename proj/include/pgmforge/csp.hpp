#pragma once

// Exact constraint solving by purge-and-merge.
//
// Every constraint is a 0/1 sparse factor listing its allowed tuples. A round
// propagates zero beliefs over an LTRIP cluster graph (which prunes tuples and
// domain values no solution can use), fixes variables left with one value,
// and, while the graph still has loops, clusters factors under an upper-bound
// entropy budget and multiplies each cluster into one factor. The budget
// grows every round. Once the graph is a tree the residual factors are exact
// and solutions can be enumerated by a backtracking join.

#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgmforge/factor.hpp"
#include "pgmforge/inference.hpp"
#include "pgmforge/variables.hpp"

namespace pgm {

enum class AttractionMetric { VariableOverlap, UpperBoundSharedEntropy, Gravity };

std::string_view to_string(AttractionMetric metric);
/// Accepts "overlap", "entropy", "gravity".
AttractionMetric parse_metric(std::string_view text);

/// (a_{i<-j}, a_{j<-i}). Overlap and shared entropy are symmetric. Gravity is
/// mass_i / r^2 with r = log2(H(union) / H(intersection)); identical upper-bound
/// entropies give +infinity. Throws DisjointScopes.
std::pair<double, double> attraction(const SparseFactor& fi, const SparseFactor& fj,
                                     AttractionMetric metric);

/// Pairwise view used by factor clustering. Pairs with disjoint scopes carry
/// no attraction (nullopt).
struct AttractionMatrix {
  std::vector<double> masses;
  std::vector<std::vector<std::optional<double>>> distances;
  std::vector<std::vector<std::optional<double>>> attractions;  // [i][j] = a_{i<-j}
};

AttractionMatrix attraction_matrix(const std::vector<SparseFactor>& factors, AttractionMetric metric);

/// Greedy agglomeration under the budget `max_entropy`: the most attracted
/// pair is merged when the union's upper-bound entropy fits, otherwise that
/// pair is retired. Merged masses add. Returns clusters of factor indices,
/// each sorted, ordered by their smallest member.
std::vector<std::vector<std::size_t>> cluster_factors(const std::vector<SparseFactor>& factors,
                                                      double max_entropy, AttractionMetric metric);

/// Product of the members, multiplying the most connected factor next.
SparseFactor merge_cluster(const std::vector<SparseFactor>& members,
                           std::size_t cap = kDefaultEntryCap);

/// Fixes every variable that has a single supported value in some factor,
/// drops it from all scopes and repeats. Factors left with an empty scope are
/// removed. Throws Contradiction when an observation empties a factor.
std::pair<Assignment, std::vector<SparseFactor>> reduce_variables(std::vector<SparseFactor> factors);

/// Intersects, per variable, the supported values across all factors holding
/// it and restricts every factor to that set, to a fixpoint. Throws
/// Contradiction on an emptied domain.
std::vector<SparseFactor> reduce_domains(std::vector<SparseFactor> factors);

struct PurgeMergeConfig {
  AttractionMetric metric = AttractionMetric::Gravity;
  /// Entropy budget per merge round. When unset the budget starts at the
  /// largest input scope entropy plus log2 of the largest cardinality (or
  /// threshold_start) and grows by that log2 (or threshold_step).
  std::function<double(std::size_t round)> threshold_schedule;
  std::optional<double> threshold_start;
  std::optional<double> threshold_step;
  std::size_t table_cap = std::size_t{1} << 24;
  ConvergenceConfig inference{};
  std::size_t enumeration_cap = 1000;
  std::optional<Clock::time_point> deadline;
};

struct SolveStats {
  std::size_t rounds = 0;
  std::size_t merges = 0;
  std::size_t capacity_fallbacks = 0;
  std::size_t propagation_updates = 0;
  std::size_t max_table_entries = 0;
  double max_upper_bound_entropy = 0.0;
  double runtime_ms = 0.0;
};

struct SolveResult {
  /// Variables with a single remaining value.
  Assignment solved;
  /// Calibrated factors over the unsolved variables.
  std::vector<SparseFactor> residual_factors;
  bool graph_is_tree = false;
  SolveStats stats;
};

/// Throws CapacityExceeded, Contradiction (unsatisfiable input) or Timeout.
SolveResult purge_and_merge(std::vector<SparseFactor> factors, const PurgeMergeConfig& config = {});

struct Enumeration {
  std::vector<Assignment> solutions;
  bool truncated = false;
};

/// Every full assignment consistent with the residual tree, up to `cap`.
/// Throws NotATree when the result did not reach a tree.
Enumeration enumerate_solutions(const SolveResult& result, std::size_t cap);

enum class Topology { Bethe, Ltrip };

struct PurgeOutcome {
  /// Every variable left with exactly one supported value.
  bool solved = false;
  bool contradiction = false;
  PropagationStats stats;
  /// Variables still holding several values.
  std::size_t open_variables = 0;
};

/// One loopy zero-purging pass over the chosen topology, without merging.
PurgeOutcome purge_once(const std::vector<SparseFactor>& factors, Topology topology,
                        ConvergenceConfig config = {});

/// {"solved", "rounds", "max_table_entries", "max_upper_bound_entropy",
/// "runtime_ms", "tree", "solutions"?}. Variables and values are labelled
/// through the registry when given.
nlohmann::json solve_result_to_json(const SolveResult& result, const VariableRegistry* registry,
                                    const Enumeration* enumeration = nullptr);

}  // namespace pgm
