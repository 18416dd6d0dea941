#pragma once

// Test-only reference implementations. Everything here works on dense
// assignment spaces by plain enumeration and shares no code path with the
// library beyond the factor accessors (scope, domains, rows, potentials).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "pgmforge/factor.hpp"
#include "pgmforge/graph.hpp"

namespace oracle {

using pgm::Assignment;
using pgm::Domain;
using pgm::SparseFactor;
using pgm::Value;
using pgm::VarId;

/// Potential of `f` at the projection of a full assignment, by linear scan.
inline double lookup(const SparseFactor& f, const Assignment& a) {
  const auto scope = f.scope();
  for (std::size_t r = 0; r < f.size(); ++r) {
    const auto row = f.row(r);
    bool match = true;
    for (std::size_t k = 0; k < scope.size() && match; ++k) match = a.at(scope[k]) == row[k];
    if (match) return f.potential(r);
  }
  return 0.0;
}

/// Calls fn for every joint assignment over `vars`.
inline void for_each_assignment(const std::vector<VarId>& vars, const std::vector<Domain>& domains,
                                const std::function<void(const Assignment&)>& fn) {
  Assignment a;
  std::function<void(std::size_t)> go = [&](std::size_t k) {
    if (k == vars.size()) {
      fn(a);
      return;
    }
    for (Value v : domains[k].values()) {
      a[vars[k]] = v;
      go(k + 1);
    }
  };
  go(0);
}

/// Union of all scopes with their domains (first occurrence wins).
inline std::pair<std::vector<VarId>, std::vector<Domain>> joint_space(const std::vector<SparseFactor>& fs) {
  std::map<VarId, Domain> seen;
  for (const auto& f : fs)
    for (std::size_t k = 0; k < f.arity(); ++k) seen.emplace(f.scope()[k], f.domains()[k]);
  std::pair<std::vector<VarId>, std::vector<Domain>> out;
  for (const auto& [v, d] : seen) {
    out.first.push_back(v);
    out.second.push_back(d);
  }
  return out;
}

/// Dense product of all factors, keyed by full assignment; zero entries omitted.
inline std::map<Assignment, double> dense_product(const std::vector<SparseFactor>& fs) {
  const auto [vars, domains] = joint_space(fs);
  std::map<Assignment, double> out;
  for_each_assignment(vars, domains, [&](const Assignment& a) {
    double p = 1.0;
    for (const auto& f : fs) {
      p *= lookup(f, a);
      if (p == 0.0) return;
    }
    out.emplace(a, p);
  });
  return out;
}

/// Sum-normalised marginal of a dense table onto `keep`.
inline std::map<Assignment, double> marginal(const std::map<Assignment, double>& joint,
                                             const std::vector<VarId>& keep) {
  std::map<Assignment, double> out;
  double total = 0.0;
  for (const auto& [a, p] : joint) {
    Assignment sub;
    for (VarId v : keep) sub[v] = a.at(v);
    out[sub] += p;
    total += p;
  }
  for (auto& [a, p] : out) p /= total;
  return out;
}

/// All assignments where every factor is positive.
inline std::set<Assignment> solutions(const std::vector<SparseFactor>& fs) {
  std::set<Assignment> out;
  for (const auto& [a, p] : dense_product(fs)) out.insert(a);
  return out;
}

/// Generalised arc consistency by repeated support checks on explicit tuple
/// sets. A domain that empties stays in the result as an empty set.
inline std::map<VarId, std::set<Value>> arc_consistent_domains(const std::vector<SparseFactor>& fs) {
  std::map<VarId, std::set<Value>> dom;
  for (const auto& f : fs)
    for (std::size_t k = 0; k < f.arity(); ++k)
      if (!dom.contains(f.scope()[k])) {
        const auto vals = f.domains()[k].values();
        dom[f.scope()[k]] = {vals.begin(), vals.end()};
      }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& f : fs) {
      std::vector<std::set<Value>> supported(f.arity());
      for (std::size_t r = 0; r < f.size(); ++r) {
        const auto row = f.row(r);
        bool alive = true;
        for (std::size_t k = 0; k < f.arity() && alive; ++k) alive = dom[f.scope()[k]].contains(row[k]);
        if (!alive) continue;
        for (std::size_t k = 0; k < f.arity(); ++k) supported[k].insert(row[k]);
      }
      for (std::size_t k = 0; k < f.arity(); ++k) {
        auto& d = dom[f.scope()[k]];
        for (auto it = d.begin(); it != d.end();) {
          if (!supported[k].contains(*it)) {
            it = d.erase(it);
            changed = true;
          } else {
            ++it;
          }
        }
      }
    }
  }
  return dom;
}

/// Random factor over the given variables. `density` is the chance each dense
/// row is kept; binary factors use potential 1.
inline SparseFactor random_factor(std::mt19937& rng, const std::vector<VarId>& vars,
                                  const std::vector<Domain>& domains, double density, bool binary) {
  std::bernoulli_distribution keep(density);
  std::uniform_real_distribution<double> pot(0.1, 2.0);
  std::vector<pgm::Entry> entries;
  std::vector<Value> row(vars.size());
  std::function<void(std::size_t)> go = [&](std::size_t k) {
    if (k == vars.size()) {
      if (keep(rng)) entries.push_back({row, binary ? 1.0 : pot(rng)});
      return;
    }
    for (Value v : domains[k].values()) {
      row[k] = v;
      go(k + 1);
    }
  };
  go(0);
  return pgm::make_factor(vars, domains, std::move(entries));
}

inline VarId var(std::uint32_t i) { return VarId{i}; }

/// Spanning trees of the complete graph on n nodes, by brute force over edge
/// subsets. Used to check maximum-weight optimality for n <= 5.
inline double best_spanning_weight(const std::vector<std::vector<double>>& w) {
  const std::size_t n = w.size();
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  double best = -1e300;
  const std::size_t m = edges.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != n - 1) continue;
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> root = [&](std::size_t x) {
      return parent[x] == x ? x : parent[x] = root(parent[x]);
    };
    bool acyclic = true;
    double total = 0.0;
    for (std::size_t e = 0; e < m && acyclic; ++e) {
      if (!((mask >> e) & 1)) continue;
      const auto a = root(edges[e].first);
      const auto b = root(edges[e].second);
      if (a == b) acyclic = false;
      parent[a] = b;
      total += w[edges[e].first][edges[e].second];
    }
    if (acyclic) best = std::max(best, total);
  }
  return best;
}

}  // namespace oracle
