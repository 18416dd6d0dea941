#include "pgmforge/inference.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <set>
#include <string>

#include <spdlog/spdlog.h>

#include "pgmforge/errors.hpp"

namespace pgm {

nlohmann::json stats_to_json(const PropagationStats& stats) {
  return {{"updates", stats.updates},
          {"converged", stats.converged},
          {"final_max_deviation", stats.final_max_deviation}};
}

const SparseFactor* MessageTable::find(std::size_t from, std::size_t to) const {
  const auto it = messages_.find({from, to});
  return it == messages_.end() ? nullptr : &it->second;
}

void MessageTable::set(std::size_t from, std::size_t to, SparseFactor table) {
  messages_.insert_or_assign({from, to}, std::move(table));
}

namespace {

std::string edge_text(std::size_t i, std::size_t j) {
  return "(" + std::to_string(i) + ", " + std::to_string(j) + ")";
}

/// D(uniform || q) over q's dense space; infinite unless q has full support.
double divergence_from_uniform(const SparseFactor& q) {
  const double n = q.dense_size();
  if (static_cast<double>(q.size()) < n) return std::numeric_limits<double>::infinity();
  const auto p = q.potentials();
  double z = 0.0;
  for (double v : p) z += v;
  double d = 0.0;
  for (double v : p) d += (1.0 / n) * std::log((1.0 / n) / (v / z));
  return std::max(d, 0.0);
}

std::vector<Domain> sepset_domains(const SparseFactor& belief, const std::vector<VarId>& vars) {
  std::vector<Domain> out;
  for (VarId v : vars) out.push_back(belief.domain(v));
  return out;
}

}  // namespace

Message compute_message(const ClusterGraph& graph, const MessageTable& messages, std::size_t i,
                        std::size_t j, NormMode mode) {
  const auto edge = graph.edge_between(i, j);
  if (!edge) fail(ErrorCode::UnknownVariable, "no edge " + edge_text(i, j));
  SparseFactor product = graph.cluster(i).factor;
  for (auto e : graph.incident(i)) {
    const auto k = graph.other_end(e, i);
    if (k == j) continue;
    if (const auto* m = messages.find(k, i)) product = multiply(product, *m);
  }
  auto table = marginalize(product, graph.sepset(*edge).vars, mode);
  return {i, j, normalize(table, mode)};
}

std::vector<Belief> tree_propagate(const ClusterGraph& graph, NormMode mode) {
  if (!is_tree(graph)) fail(ErrorCode::NotATree, "tree propagation needs an acyclic cluster graph");
  const auto n = graph.cluster_count();
  MessageTable messages;
  std::vector<std::size_t> received(n, 0);
  std::set<std::pair<std::size_t, std::size_t>> sent;
  std::deque<std::pair<std::size_t, std::size_t>> ready;

  // A cluster may send to j once it has heard from every neighbour but j.
  auto release = [&](std::size_t i) {
    const auto deg = graph.degree(i);
    if (received[i] + 1 < deg) return;
    for (auto e : graph.incident(i)) {
      const auto j = graph.other_end(e, i);
      if (sent.contains({i, j})) continue;
      if (received[i] == deg || !messages.find(j, i)) {
        sent.insert({i, j});
        ready.emplace_back(i, j);
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) release(i);
  while (!ready.empty()) {
    const auto [i, j] = ready.front();
    ready.pop_front();
    auto msg = compute_message(graph, messages, i, j, mode);
    messages.set(i, j, std::move(msg.table));
    ++received[j];
    release(j);
  }

  std::vector<Belief> beliefs;
  for (std::size_t i = 0; i < n; ++i) {
    SparseFactor b = graph.cluster(i).factor;
    for (auto e : graph.incident(i))
      if (const auto* m = messages.find(graph.other_end(e, i), i)) b = multiply(b, *m);
    beliefs.push_back({i, normalize(b, mode)});
  }
  return beliefs;
}

namespace {

class LoopyRun {
 public:
  LoopyRun(const ClusterGraph& graph, const ConvergenceConfig& config)
      : graph_(graph), config_(config), messages_(2 * graph.edge_count()),
        queued_(2 * graph.edge_count()) {}

  LoopyResult run() {
    const auto n = graph_.cluster_count();
    const auto edges = graph_.edge_count();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = graph_.cluster(i).factor;
      if (f.empty()) fail(ErrorCode::Contradiction, "cluster " + std::to_string(i) + " has no support");
      beliefs_.push_back(normalize(f, config_.mode));
    }
    for (std::size_t e = 0; e < edges; ++e) {
      const auto& s = graph_.sepset(e);
      const double p = 1e-10 / static_cast<double>(graph_.degree(s.i) + graph_.degree(s.j));
      schedule(2 * e, p);
      schedule(2 * e + 1, p);
    }
    const std::size_t max_updates = config_.max_updates.value_or(200 * edges);

    LoopyResult result;
    while (true) {
      while (!queue_.empty() && result.stats.updates < max_updates) {
        const auto top = *queue_.begin();
        queue_.erase(queue_.begin());
        queued_[top.slot].reset();
        check_deadline();
        const double deviation = update(top.slot);
        ++result.stats.updates;
        if (deviation > config_.threshold) reschedule_after(top.slot, deviation);
      }
      const double residual = sweep();
      result.stats.final_max_deviation = residual;
      if (queue_.empty()) {
        result.stats.converged = true;
        break;
      }
      if (result.stats.updates >= max_updates) break;
    }
    spdlog::debug("loopy propagation: {} updates, converged={}, residual={}", result.stats.updates,
                  result.stats.converged, result.stats.final_max_deviation);

    for (std::size_t i = 0; i < n; ++i) result.beliefs.push_back({i, beliefs_[i]});
    for (std::size_t slot = 0; slot < messages_.size(); ++slot) {
      if (!messages_[slot]) continue;
      const auto [from, to] = ends(slot);
      result.messages.set(from, to, *messages_[slot]);
    }
    return result;
  }

 private:
  struct Key {
    double priority;
    std::uint64_t seq;
    std::size_t slot;
  };
  struct KeyOrder {
    bool operator()(const Key& a, const Key& b) const {
      if (a.priority != b.priority) return a.priority > b.priority;
      return a.seq < b.seq;
    }
  };

  // Slot 2e carries s.i -> s.j, slot 2e+1 the reverse.
  std::pair<std::size_t, std::size_t> ends(std::size_t slot) const {
    const auto& s = graph_.sepset(slot / 2);
    return slot % 2 == 0 ? std::pair{s.i, s.j} : std::pair{s.j, s.i};
  }

  std::size_t slot_of(std::size_t edge, std::size_t from) const {
    return 2 * edge + (graph_.sepset(edge).i == from ? 0 : 1);
  }

  void schedule(std::size_t slot, double priority) {
    if (auto& q = queued_[slot]) {
      if (q->priority >= priority) return;
      queue_.erase(*q);
    }
    const Key key{priority, next_seq_++, slot};
    queue_.insert(key);
    queued_[slot] = key;
  }

  void check_deadline() const {
    if (config_.deadline && Clock::now() > *config_.deadline)
      fail(ErrorCode::Timeout, "loopy propagation exceeded its deadline");
  }

  [[noreturn]] void contradiction(std::size_t slot) const {
    const auto [from, to] = ends(slot);
    fail(ErrorCode::Contradiction, "belief lost all support across edge " + edge_text(from, to));
  }

  /// The message the sender would emit now, before damping.
  SparseFactor fresh_message(std::size_t slot) const {
    const auto [from, to] = ends(slot);
    const auto& vars = graph_.sepset(slot / 2).vars;
    auto sigma = marginalize(beliefs_[from], vars, config_.mode);
    if (sigma.empty()) contradiction(slot);
    if (const auto& reverse = messages_[slot ^ 1]) sigma = divide(sigma, *reverse);
    if (sigma.empty()) contradiction(slot);
    return normalize(sigma, config_.mode);
  }

  double deviation_from(const std::optional<SparseFactor>& previous, const SparseFactor& fresh) const {
    return previous ? divergence(*previous, fresh) : divergence_from_uniform(fresh);
  }

  double update(std::size_t slot) {
    const auto [from, to] = ends(slot);
    auto fresh = fresh_message(slot);
    const auto& previous = messages_[slot];
    if (config_.lambda < 1.0) {
      const auto base = previous ? *previous
                                 : vacuous(graph_.sepset(slot / 2).vars,
                                           sepset_domains(beliefs_[from], graph_.sepset(slot / 2).vars));
      fresh = normalize(damp(fresh, base, config_.lambda), config_.mode);
    }
    const double deviation = deviation_from(previous, fresh);
    const auto ratio = previous ? divide(fresh, *previous) : fresh;
    auto updated = multiply(beliefs_[to], ratio);
    if (updated.empty()) contradiction(slot);
    beliefs_[to] = normalize(updated, config_.mode);
    messages_[slot] = std::move(fresh);
    return deviation;
  }

  void reschedule_after(std::size_t slot, double deviation) {
    const auto [from, to] = ends(slot);
    const double priority = std::isinf(deviation) ? kSupportChangePriority : deviation;
    for (auto e : graph_.incident(to)) {
      if (graph_.other_end(e, to) == from) continue;
      schedule(slot_of(e, to), priority);
    }
  }

  /// Recomputes every message without applying it; anything that would move
  /// by more than the threshold goes back on the queue. Returns the largest
  /// deviation seen.
  double sweep() {
    double worst = 0.0;
    for (std::size_t slot = 0; slot < messages_.size(); ++slot) {
      const double d = deviation_from(messages_[slot], fresh_message(slot));
      worst = std::max(worst, d);
      if (d > config_.threshold) schedule(slot, std::isinf(d) ? kSupportChangePriority : d);
    }
    return worst;
  }

  const ClusterGraph& graph_;
  const ConvergenceConfig& config_;
  std::vector<SparseFactor> beliefs_;
  std::vector<std::optional<SparseFactor>> messages_;
  std::vector<std::optional<Key>> queued_;
  std::set<Key, KeyOrder> queue_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace

LoopyResult loopy_propagate(const ClusterGraph& graph, const ConvergenceConfig& config) {
  if (!(config.lambda > 0.0 && config.lambda <= 1.0))
    fail(ErrorCode::MalformedSpec, "damping factor must lie in (0, 1]");
  return LoopyRun(graph, config).run();
}

}  // namespace pgm
