#include "pgmforge/csp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include <spdlog/spdlog.h>

#include "pgmforge/errors.hpp"
#include "pgmforge/graph.hpp"

namespace pgm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string var_text(VarId v) { return "X" + std::to_string(v.value); }

std::vector<Domain> domains_for(std::span<const VarId> vars, const SparseFactor& a,
                                const SparseFactor& b) {
  std::vector<Domain> out;
  for (VarId v : vars) out.push_back(a.contains(v) ? a.domain(v) : b.domain(v));
  return out;
}

double gravity(double mass, double h_union, double h_intersection) {
  double r;
  if (h_intersection > 0.0)
    r = std::log2(h_union / h_intersection);
  else
    r = h_union > 0.0 ? kInf : 0.0;
  if (r <= 0.0) return kInf;
  if (std::isinf(r)) return 0.0;
  return mass / (r * r);
}

/// Every stored potential set to 1: beliefs become plain allowed-tuple sets.
SparseFactor indicator(const SparseFactor& f) {
  return SparseFactor::from_parts({f.scope().begin(), f.scope().end()},
                                  {f.domains().begin(), f.domains().end()},
                                  {f.keys().begin(), f.keys().end()},
                                  std::vector<double>(f.size(), 1.0), true);
}

std::size_t total_entries(const std::vector<SparseFactor>& factors) {
  std::size_t n = 0;
  for (const auto& f : factors) n += f.size();
  return n;
}

void check_deadline(const std::optional<Clock::time_point>& deadline) {
  if (deadline && Clock::now() > *deadline) fail(ErrorCode::Timeout, "solve exceeded its deadline");
}

}  // namespace

std::string_view to_string(AttractionMetric metric) {
  switch (metric) {
    case AttractionMetric::VariableOverlap: return "overlap";
    case AttractionMetric::UpperBoundSharedEntropy: return "entropy";
    case AttractionMetric::Gravity: return "gravity";
  }
  return "?";
}

AttractionMetric parse_metric(std::string_view text) {
  if (text == "overlap") return AttractionMetric::VariableOverlap;
  if (text == "entropy") return AttractionMetric::UpperBoundSharedEntropy;
  if (text == "gravity") return AttractionMetric::Gravity;
  fail(ErrorCode::MalformedSpec, "unknown metric '" + std::string(text) + "'");
}

std::pair<double, double> attraction(const SparseFactor& fi, const SparseFactor& fj,
                                     AttractionMetric metric) {
  const auto shared = scope_intersection(fi.scope(), fj.scope());
  if (shared.empty()) fail(ErrorCode::DisjointScopes, "attraction needs overlapping scopes");
  const auto joint = scope_union(fi.scope(), fj.scope());
  const double h_shared = upper_bound_entropy(domains_for(shared, fi, fj));
  switch (metric) {
    case AttractionMetric::VariableOverlap: {
      const auto a = static_cast<double>(shared.size());
      return {a, a};
    }
    case AttractionMetric::UpperBoundSharedEntropy:
      return {h_shared, h_shared};
    case AttractionMetric::Gravity: {
      const double h_joint = upper_bound_entropy(domains_for(joint, fi, fj));
      return {gravity(mass(fi), h_joint, h_shared), gravity(mass(fj), h_joint, h_shared)};
    }
  }
  return {0.0, 0.0};
}

AttractionMatrix attraction_matrix(const std::vector<SparseFactor>& factors, AttractionMetric metric) {
  const auto n = factors.size();
  AttractionMatrix m;
  m.distances.assign(n, std::vector<std::optional<double>>(n));
  m.attractions.assign(n, std::vector<std::optional<double>>(n));
  for (const auto& f : factors) m.masses.push_back(mass(f));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto shared = scope_intersection(factors[i].scope(), factors[j].scope());
      if (shared.empty()) continue;
      const auto joint = scope_union(factors[i].scope(), factors[j].scope());
      const double hs = upper_bound_entropy(domains_for(shared, factors[i], factors[j]));
      const double hu = upper_bound_entropy(domains_for(joint, factors[i], factors[j]));
      const double r = hs > 0.0 ? std::log2(hu / hs) : (hu > 0.0 ? kInf : 0.0);
      m.distances[i][j] = m.distances[j][i] = r;
      const auto [aij, aji] = attraction(factors[i], factors[j], metric);
      m.attractions[i][j] = aij;
      m.attractions[j][i] = aji;
    }
  }
  return m;
}

std::vector<std::vector<std::size_t>> cluster_factors(const std::vector<SparseFactor>& factors,
                                                      double max_entropy, AttractionMetric metric) {
  const auto n = factors.size();
  std::map<VarId, double> bits;
  for (const auto& f : factors)
    for (std::size_t c = 0; c < f.arity(); ++c)
      bits.try_emplace(f.scope()[c], std::log2(static_cast<double>(f.domains()[c].size())));
  auto entropy = [&](std::span<const VarId> vars) {
    double h = 0.0;
    for (VarId v : vars) h += bits.at(v);
    return h;
  };

  struct Node {
    std::vector<VarId> scope;
    double mass = 0.0;
    std::vector<std::size_t> members;
    bool alive = true;
  };
  std::vector<Node> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].scope.assign(factors[i].scope().begin(), factors[i].scope().end());
    nodes[i].mass = metric == AttractionMetric::Gravity && !factors[i].empty() ? mass(factors[i]) : 0.0;
    nodes[i].members = {i};
  }

  // a[i][j] = a_{i<-j}; retired pairs are skipped in both directions.
  std::vector<std::vector<std::optional<double>>> a(n, std::vector<std::optional<double>>(n));
  std::vector<std::vector<bool>> retired(n, std::vector<bool>(n, false));
  auto refresh = [&](std::size_t i, std::size_t j) {
    const auto shared = scope_intersection(nodes[i].scope, nodes[j].scope);
    if (shared.empty()) {
      a[i][j] = a[j][i] = std::nullopt;
      return;
    }
    switch (metric) {
      case AttractionMetric::VariableOverlap:
        a[i][j] = a[j][i] = static_cast<double>(shared.size());
        break;
      case AttractionMetric::UpperBoundSharedEntropy:
        a[i][j] = a[j][i] = entropy(shared);
        break;
      case AttractionMetric::Gravity: {
        const double hs = entropy(shared);
        const double hu = entropy(scope_union(nodes[i].scope, nodes[j].scope));
        a[i][j] = gravity(nodes[i].mass, hu, hs);
        a[j][i] = gravity(nodes[j].mass, hu, hs);
        break;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) refresh(i, j);

  while (true) {
    std::optional<std::pair<std::size_t, std::size_t>> best;
    double best_value = -kInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (!nodes[i].alive) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || !nodes[j].alive || retired[i][j] || !a[i][j]) continue;
        if (!best || *a[i][j] > best_value) {
          best = {i, j};
          best_value = *a[i][j];
        }
      }
    }
    if (!best) break;
    const auto [i, j] = *best;
    auto joint = scope_union(nodes[i].scope, nodes[j].scope);
    if (entropy(joint) > max_entropy + 1e-9) {
      retired[i][j] = retired[j][i] = true;
      continue;
    }
    nodes[i].scope = std::move(joint);
    nodes[i].mass += nodes[j].mass;
    nodes[i].members.insert(nodes[i].members.end(), nodes[j].members.begin(), nodes[j].members.end());
    nodes[j].alive = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i || !nodes[k].alive) continue;
      retired[i][k] = retired[k][i] = false;
      refresh(i, k);
    }
  }

  std::vector<std::vector<std::size_t>> out;
  for (auto& node : nodes) {
    if (!node.alive) continue;
    std::ranges::sort(node.members);
    out.push_back(std::move(node.members));
  }
  std::ranges::sort(out, [](const auto& x, const auto& y) { return x.front() < y.front(); });
  return out;
}

SparseFactor merge_cluster(const std::vector<SparseFactor>& members, std::size_t cap) {
  if (members.empty()) fail(ErrorCode::MalformedSpec, "cannot merge an empty cluster");
  if (members.size() == 1) return members.front();
  std::vector<bool> used(members.size(), false);
  std::size_t first = 0;
  for (std::size_t k = 1; k < members.size(); ++k)
    if (members[k].size() < members[first].size()) first = k;
  used[first] = true;
  SparseFactor product = members[first];
  for (std::size_t step = 1; step < members.size(); ++step) {
    std::size_t pick = members.size();
    std::size_t pick_overlap = 0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (used[k]) continue;
      const auto overlap = scope_intersection(product.scope(), members[k].scope()).size();
      if (pick == members.size() || overlap > pick_overlap ||
          (overlap == pick_overlap && members[k].size() < members[pick].size())) {
        pick = k;
        pick_overlap = overlap;
      }
    }
    used[pick] = true;
    product = multiply(product, members[pick], cap);
    if (product.empty()) return product;
  }
  return product;
}

std::pair<Assignment, std::vector<SparseFactor>> reduce_variables(std::vector<SparseFactor> factors) {
  Assignment evidence;
  while (true) {
    Assignment fresh;
    for (const auto& f : factors) {
      if (f.empty()) fail(ErrorCode::Contradiction, "a factor has no consistent entries");
      for (VarId v : f.scope()) {
        const auto support = support_of(f, v);
        if (support.size() != 1) continue;
        const auto [it, inserted] = fresh.emplace(v, support[0]);
        if (!inserted && it->second != support[0])
          fail(ErrorCode::Contradiction, var_text(v) + " is forced to two different values");
      }
    }
    if (fresh.empty()) break;
    std::vector<SparseFactor> next;
    next.reserve(factors.size());
    for (auto& f : factors) {
      Assignment local;
      for (VarId v : f.scope())
        if (auto it = fresh.find(v); it != fresh.end()) local.insert(*it);
      if (local.empty()) {
        next.push_back(std::move(f));
        continue;
      }
      for (const auto& [v, value] : local)
        if (!f.domain(v).contains(value))
          fail(ErrorCode::Contradiction, var_text(v) + " observed outside a factor's domain");
      auto g = reduce(f, local);
      if (g.empty()) fail(ErrorCode::Contradiction, "observation empties a factor");
      if (g.arity() > 0) next.push_back(std::move(g));
    }
    factors = std::move(next);
    evidence.merge(fresh);
  }
  return {std::move(evidence), std::move(factors)};
}

std::vector<SparseFactor> reduce_domains(std::vector<SparseFactor> factors) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<VarId, std::vector<Value>> allowed;
    for (const auto& f : factors) {
      if (f.empty()) fail(ErrorCode::Contradiction, "a factor has no consistent entries");
      for (VarId v : f.scope()) {
        const auto support = support_of(f, v);
        std::vector<Value> values(support.values().begin(), support.values().end());
        auto [it, inserted] = allowed.try_emplace(v, values);
        if (!inserted) {
          std::vector<Value> both;
          std::ranges::set_intersection(it->second, values, std::back_inserter(both));
          it->second = std::move(both);
        }
      }
    }
    for (const auto& [v, values] : allowed)
      if (values.empty()) fail(ErrorCode::Contradiction, "domain of " + var_text(v) + " emptied");
    for (auto& f : factors) {
      const std::vector<VarId> scope(f.scope().begin(), f.scope().end());
      for (VarId v : scope) {
        const Domain target(allowed.at(v));
        if (f.domain(v) == target) continue;
        const auto before = f.size();
        f = restrict_domain(f, v, target);
        if (f.empty()) fail(ErrorCode::Contradiction, "domain reduction empties a factor");
        if (f.size() != before) changed = true;
      }
    }
  }
  return factors;
}

SolveResult purge_and_merge(std::vector<SparseFactor> factors, const PurgeMergeConfig& config) {
  const auto started = Clock::now();
  SolveResult result;
  auto& stats = result.stats;

  double widest = 0.0;
  std::size_t max_card = 1;
  for (const auto& f : factors) {
    widest = std::max(widest, upper_bound_entropy(f.domains()));
    for (const auto& d : f.domains()) max_card = std::max(max_card, d.size());
  }
  const double card_bits = std::max(std::log2(static_cast<double>(max_card)), 1.0);
  const double start = config.threshold_start.value_or(widest + card_bits);
  const double step = config.threshold_step.value_or(card_bits);
  if (!config.threshold_schedule && !(step > 0.0))
    fail(ErrorCode::MalformedSpec, "the entropy budget must grow every round");
  auto budget = [&](std::size_t round) {
    return config.threshold_schedule ? config.threshold_schedule(round)
                                     : start + step * static_cast<double>(round);
  };

  ConvergenceConfig inference = config.inference;
  inference.mode = NormMode::Max;
  if (config.deadline) inference.deadline = config.deadline;

  // Scalar factors carry no constraint unless they are empty.
  std::erase_if(factors, [](const SparseFactor& f) {
    if (f.empty()) fail(ErrorCode::Contradiction, "input factor has no allowed entries");
    return f.arity() == 0;
  });

  auto record_sizes = [&](const std::vector<SparseFactor>& fs) {
    for (const auto& f : fs) {
      stats.max_table_entries = std::max(stats.max_table_entries, f.size());
      stats.max_upper_bound_entropy =
          std::max(stats.max_upper_bound_entropy, upper_bound_entropy(f.domains()));
    }
  };
  record_sizes(factors);

  std::size_t merge_round = 0;
  bool dirty = true;
  bool tree = false;
  while (true) {
    check_deadline(config.deadline);
    if (dirty) {
      factors = absorb_subsets(std::move(factors), config.table_cap);
      const auto graph = ltrip(factors);
      tree = is_tree(graph);
      std::vector<Belief> beliefs;
      if (tree) {
        try {
          beliefs = tree_propagate(graph, NormMode::Max);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::EmptySupport) throw;
          fail(ErrorCode::Contradiction, "no assignment satisfies every constraint");
        }
      } else {
        auto run = loopy_propagate(graph, inference);
        stats.propagation_updates += run.stats.updates;
        beliefs = std::move(run.beliefs);
      }
      const auto before = total_entries(factors);
      std::vector<SparseFactor> purged;
      purged.reserve(beliefs.size());
      for (const auto& b : beliefs) purged.push_back(indicator(b.table));
      purged = reduce_domains(std::move(purged));
      auto [evidence, reduced] = reduce_variables(std::move(purged));
      const bool progressed = !evidence.empty() || total_entries(reduced) != before;
      result.solved.merge(evidence);
      factors = std::move(reduced);
      spdlog::debug("round {}: {} factors, {} entries, {} solved, tree={}", stats.rounds,
                    factors.size(), total_entries(factors), result.solved.size(), tree);
      if (factors.empty() || (tree && !progressed)) {
        tree = true;
        break;
      }
      if (tree || progressed) continue;
    }

    const double limit = budget(merge_round);
    const auto clusters = cluster_factors(factors, limit, config.metric);
    std::vector<SparseFactor> merged;
    std::size_t merged_now = 0;
    std::size_t failures = 0;
    for (const auto& cluster : clusters) {
      if (cluster.size() == 1) {
        merged.push_back(std::move(factors[cluster.front()]));
        continue;
      }
      std::vector<SparseFactor> members;
      for (auto k : cluster) members.push_back(factors[k]);
      try {
        merged.push_back(merge_cluster(members, config.table_cap));
        ++merged_now;
        stats.merges += cluster.size() - 1;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::CapacityExceeded) throw;
        ++failures;
        ++stats.capacity_fallbacks;
        for (auto& m : members) merged.push_back(std::move(m));
      }
    }
    ++merge_round;
    ++stats.rounds;
    if (merged_now == 0 && failures > 0)
      fail(ErrorCode::CapacityExceeded,
           "no cluster could be merged within the table cap of " + std::to_string(config.table_cap));
    for (const auto& f : merged)
      if (f.empty()) fail(ErrorCode::Contradiction, "merged constraints admit no assignment");
    factors = std::move(merged);
    record_sizes(factors);
    dirty = merged_now > 0;
  }

  result.residual_factors = std::move(factors);
  result.graph_is_tree = tree;
  stats.runtime_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - started).count();
  return result;
}

Enumeration enumerate_solutions(const SolveResult& result, std::size_t cap) {
  if (!result.graph_is_tree) fail(ErrorCode::NotATree, "enumeration needs a solved tree");
  const auto& factors = result.residual_factors;
  const auto graph = ltrip(factors);
  if (!is_tree(graph)) fail(ErrorCode::NotATree, "residual factors do not form a tree");

  // Depth-first order over every component so each factor after the first in
  // its component shares its sepset with an already placed neighbour.
  std::vector<std::size_t> order;
  std::vector<bool> seen(graph.cluster_count(), false);
  for (std::size_t root = 0; root < graph.cluster_count(); ++root) {
    if (seen[root]) continue;
    std::vector<std::size_t> stack{root};
    seen[root] = true;
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      order.push_back(i);
      const auto& inc = graph.incident(i);
      for (auto it = inc.rbegin(); it != inc.rend(); ++it) {
        const auto k = graph.other_end(*it, i);
        if (!seen[k]) {
          seen[k] = true;
          stack.push_back(k);
        }
      }
    }
  }

  Enumeration out;
  Assignment current;
  auto search = [&](auto&& self, std::size_t depth) -> bool {
    if (depth == order.size()) {
      if (out.solutions.size() == cap) {
        out.truncated = true;
        return false;
      }
      Assignment full = result.solved;
      for (const auto& kv : current) full.insert(kv);
      out.solutions.push_back(std::move(full));
      return true;
    }
    const auto& f = factors[order[depth]];
    const auto scope = f.scope();
    for (std::size_t r = 0; r < f.size(); ++r) {
      const auto row = f.row(r);
      bool consistent = true;
      std::vector<VarId> added;
      for (std::size_t c = 0; c < scope.size() && consistent; ++c) {
        const auto it = current.find(scope[c]);
        if (it == current.end()) {
          current.emplace(scope[c], row[c]);
          added.push_back(scope[c]);
        } else if (it->second != row[c]) {
          consistent = false;
        }
      }
      const bool keep_going = !consistent || self(self, depth + 1);
      for (VarId v : added) current.erase(v);
      if (!keep_going) return false;
    }
    return true;
  };
  search(search, 0);
  return out;
}

PurgeOutcome purge_once(const std::vector<SparseFactor>& factors, Topology topology,
                        ConvergenceConfig config) {
  config.mode = NormMode::Max;
  const auto graph = topology == Topology::Bethe ? bethe(factors) : ltrip(factors);
  PurgeOutcome out;
  LoopyResult run;
  try {
    run = loopy_propagate(graph, config);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Contradiction) throw;
    out.contradiction = true;
    return out;
  }
  out.stats = run.stats;
  std::map<VarId, std::vector<Value>> support;
  for (const auto& b : run.beliefs) {
    for (VarId v : b.table.scope()) {
      const auto s = support_of(b.table, v);
      std::vector<Value> values(s.values().begin(), s.values().end());
      auto [it, inserted] = support.try_emplace(v, values);
      if (!inserted) {
        std::vector<Value> both;
        std::ranges::set_intersection(it->second, values, std::back_inserter(both));
        it->second = std::move(both);
      }
    }
  }
  for (const auto& [v, values] : support) {
    if (values.empty()) out.contradiction = true;
    if (values.size() > 1) ++out.open_variables;
  }
  out.solved = !out.contradiction && out.open_variables == 0;
  return out;
}

nlohmann::json solve_result_to_json(const SolveResult& result, const VariableRegistry* registry,
                                    const Enumeration* enumeration) {
  auto labelled = [&](const Assignment& a) {
    nlohmann::json obj = nlohmann::json::object();
    for (const auto& [var, value] : a) {
      if (registry)
        obj[registry->label(var)] = registry->symbols(var).at(value);
      else
        obj[std::to_string(var.value)] = value;
    }
    return obj;
  };
  nlohmann::json out{{"schema_version", 1},
                     {"solved", labelled(result.solved)},
                     {"rounds", result.stats.rounds},
                     {"merges", result.stats.merges},
                     {"propagation_updates", result.stats.propagation_updates},
                     {"max_table_entries", result.stats.max_table_entries},
                     {"max_upper_bound_entropy", result.stats.max_upper_bound_entropy},
                     {"runtime_ms", result.stats.runtime_ms},
                     {"tree", result.graph_is_tree}};
  if (enumeration) {
    auto list = nlohmann::json::array();
    for (const auto& s : enumeration->solutions) list.push_back(labelled(s));
    out["solutions"] = std::move(list);
    out["truncated"] = enumeration->truncated;
  }
  return out;
}

}  // namespace pgm
