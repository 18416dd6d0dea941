#pragma once

// Message passing over cluster graphs.
//
// tree_propagate is the exact two-pass schedule for trees: a cluster sends to
// a neighbour once it has heard from all its other neighbours.
//
// loopy_propagate is residual-scheduled belief update (Lauritzen-Spiegelhalter
// form): every cluster keeps its current belief, a new message is the belief
// marginalised onto the sepset with the reverse message divided out, and the
// receiving belief is corrected by the ratio of new to old message. Messages
// are prioritised by the KL divergence between their previous and new value.

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgmforge/factor.hpp"
#include "pgmforge/graph.hpp"

namespace pgm {

using Clock = std::chrono::steady_clock;

struct ConvergenceConfig {
  /// Message deviation at or below which neighbours are not rescheduled.
  double threshold = 1e-6;
  /// Damping factor; 1 disables damping.
  double lambda = 1.0;
  /// Defaults to 200 x edge count.
  std::optional<std::size_t> max_updates;
  NormMode mode = NormMode::Max;
  std::optional<Clock::time_point> deadline;
};

/// Priority used in place of an infinite deviation (support change).
inline constexpr double kSupportChangePriority = 1e9;

struct Message {
  std::size_t from = 0;
  std::size_t to = 0;
  SparseFactor table;
};

struct Belief {
  std::size_t cluster = 0;
  SparseFactor table;
};

struct PropagationStats {
  std::size_t updates = 0;
  bool converged = false;
  double final_max_deviation = 0.0;
};

nlohmann::json stats_to_json(const PropagationStats& stats);

/// Directed messages keyed by (from, to); a missing message is vacuous.
class MessageTable {
 public:
  const SparseFactor* find(std::size_t from, std::size_t to) const;
  void set(std::size_t from, std::size_t to, SparseFactor table);
  std::size_t size() const noexcept { return messages_.size(); }
  const std::map<std::pair<std::size_t, std::size_t>, SparseFactor>& all() const noexcept {
    return messages_;
  }

 private:
  std::map<std::pair<std::size_t, std::size_t>, SparseFactor> messages_;
};

/// delta_{i->j}: psi_i times every incoming message except the one from j,
/// marginalised onto the sepset and normalised. Throws EmptySupport when the
/// product annihilates.
Message compute_message(const ClusterGraph& graph, const MessageTable& messages, std::size_t i,
                        std::size_t j, NormMode mode);

/// Exact beliefs on a tree (or forest). Throws NotATree on loopy input and
/// EmptySupport for an inconsistent model.
std::vector<Belief> tree_propagate(const ClusterGraph& graph, NormMode mode);

struct LoopyResult {
  std::vector<Belief> beliefs;
  PropagationStats stats;
  MessageTable messages;
};

/// Throws Contradiction (naming the edge) when a belief loses all support and
/// Timeout when the deadline passes.
LoopyResult loopy_propagate(const ClusterGraph& graph, const ConvergenceConfig& config = {});

}  // namespace pgm
