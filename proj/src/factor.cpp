#include "pgmforge/factor.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <ranges>
#include <string>

#include "pgmforge/errors.hpp"

namespace pgm {

namespace {

int compare_rows(const Value* a, const Value* b, std::size_t arity) {
  return arity == 0 ? 0 : std::memcmp(a, b, arity);
}

// Sorts the rows of a flat key array lexicographically, carrying the values.
void sort_rows(std::size_t arity, std::vector<Value>& keys, std::vector<double>& values) {
  const std::size_t n = values.size();
  if (arity == 0 || n < 2) return;
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  const Value* base = keys.data();
  std::sort(perm.begin(), perm.end(), [&](std::uint32_t a, std::uint32_t b) {
    return compare_rows(base + std::size_t{a} * arity, base + std::size_t{b} * arity, arity) < 0;
  });
  std::vector<Value> sorted_keys(keys.size());
  std::vector<double> sorted_values(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(sorted_keys.data() + i * arity, base + std::size_t{perm[i]} * arity, arity);
    sorted_values[i] = values[perm[i]];
  }
  keys.swap(sorted_keys);
  values.swap(sorted_values);
}

// First row in [0, n) whose projection is not less than key.
std::size_t lower_bound_rows(const Value* rows, std::size_t width, std::size_t n, const Value* key) {
  std::size_t lo = 0, hi = n;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (compare_rows(rows + mid * width, key, width) < 0)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo;
}

std::size_t upper_bound_rows(const Value* rows, std::size_t width, std::size_t n, const Value* key) {
  std::size_t lo = 0, hi = n;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (compare_rows(rows + mid * width, key, width) <= 0)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo;
}

std::string var_name(VarId v) { return "X" + std::to_string(v.value); }

void check_capacity(std::size_t count, std::size_t cap) {
  if (count > cap)
    fail(ErrorCode::CapacityExceeded,
         "operation would materialise more than " + std::to_string(cap) + " entries");
}

// Positions (in `of`) of each variable of `sub`; `sub` must be included in `of`.
std::vector<std::size_t> positions_in(std::span<const VarId> of, std::span<const VarId> sub) {
  std::vector<std::size_t> out;
  out.reserve(sub.size());
  std::size_t k = 0;
  for (VarId v : sub) {
    while (k < of.size() && of[k] < v) ++k;
    assert(k < of.size() && of[k] == v);
    out.push_back(k);
  }
  return out;
}

// Keeps rows of `big` whose projection onto scope(small) is in small, scaling
// by the matching potential. Row order of `big` is preserved.
SparseFactor filter_product(const SparseFactor& big, const SparseFactor& small) {
  const auto cols = positions_in(big.scope(), small.scope());
  const std::size_t width = cols.size();
  std::vector<Value> key(width);
  std::vector<Value> keys;
  std::vector<double> values;
  for (std::size_t r = 0; r < big.size(); ++r) {
    const auto row = big.row(r);
    for (std::size_t c = 0; c < width; ++c) key[c] = row[cols[c]];
    const auto hit = small.find(key);
    if (!hit) continue;
    const double p = big.potential(r) * small.potential(*hit);
    if (!(p > 0.0)) continue;
    keys.insert(keys.end(), row.begin(), row.end());
    values.push_back(p);
  }
  return SparseFactor::from_parts({big.scope().begin(), big.scope().end()},
                                  {big.domains().begin(), big.domains().end()}, std::move(keys),
                                  std::move(values), true);
}

void require_same_layout(const SparseFactor& a, const SparseFactor& b, const char* op) {
  if (!std::ranges::equal(a.scope(), b.scope()) || !std::ranges::equal(a.domains(), b.domains()))
    fail(ErrorCode::ScopeMismatch, std::string(op) + " requires identical scopes and domains");
}

}  // namespace

// Domain

Domain::Domain(std::vector<Value> values) : values_(std::move(values)) {
  std::ranges::sort(values_);
  if (std::adjacent_find(values_.begin(), values_.end()) != values_.end())
    fail(ErrorCode::DuplicateValue, "domain lists a value twice");
}

Domain Domain::range(std::size_t cardinality) {
  if (cardinality > kMaxCardinality)
    fail(ErrorCode::OutOfDomainValue, "cardinality exceeds " + std::to_string(kMaxCardinality));
  std::vector<Value> v(cardinality);
  for (std::size_t i = 0; i < cardinality; ++i) v[i] = static_cast<Value>(i);
  Domain d;
  d.values_ = std::move(v);
  return d;
}

bool Domain::contains(Value v) const { return std::ranges::binary_search(values_, v); }

std::optional<std::size_t> Domain::index_of(Value v) const {
  const auto it = std::ranges::lower_bound(values_, v);
  if (it == values_.end() || *it != v) return std::nullopt;
  return static_cast<std::size_t>(it - values_.begin());
}

// SparseFactor

const Domain& SparseFactor::domain(VarId var) const {
  const auto pos = position(var);
  if (!pos) fail(ErrorCode::UnknownVariable, var_name(var) + " is not in the factor scope");
  return domains_[*pos];
}

std::optional<std::size_t> SparseFactor::position(VarId var) const {
  const auto it = std::ranges::lower_bound(scope_, var);
  if (it == scope_.end() || *it != var) return std::nullopt;
  return static_cast<std::size_t>(it - scope_.begin());
}

std::optional<std::size_t> SparseFactor::find(std::span<const Value> row) const {
  assert(row.size() == arity());
  const std::size_t n = size();
  const std::size_t i = lower_bound_rows(keys_.data(), arity(), n, row.data());
  if (i < n && compare_rows(keys_.data() + i * arity(), row.data(), arity()) == 0) return i;
  return std::nullopt;
}

double SparseFactor::at(std::span<const Value> row) const {
  const auto i = find(row);
  return i ? values_[*i] : 0.0;
}

Assignment SparseFactor::assignment(std::size_t i) const {
  Assignment a;
  const auto r = row(i);
  for (std::size_t c = 0; c < arity(); ++c) a.emplace(scope_[c], r[c]);
  return a;
}

double SparseFactor::dense_size() const {
  double n = 1.0;
  for (const auto& d : domains_) n *= static_cast<double>(d.size());
  return n;
}

SparseFactor SparseFactor::from_parts(std::vector<VarId> scope, std::vector<Domain> domains,
                                      std::vector<Value> keys, std::vector<double> values,
                                      bool rows_sorted) {
  assert(scope.size() == domains.size());
  assert(std::ranges::is_sorted(scope));
  assert(keys.size() == values.size() * scope.size());
  SparseFactor f;
  f.scope_ = std::move(scope);
  f.domains_ = std::move(domains);
  f.keys_ = std::move(keys);
  f.values_ = std::move(values);
  if (!rows_sorted) sort_rows(f.arity(), f.keys_, f.values_);
  return f;
}

// Construction

SparseFactor make_factor(std::vector<VarId> scope, std::vector<Domain> domains,
                         std::vector<Entry> entries) {
  const std::size_t arity = scope.size();
  if (domains.size() != arity)
    fail(ErrorCode::ScopeMismatch, "one domain per scope variable is required");
  for (const auto& d : domains)
    if (d.empty()) fail(ErrorCode::OutOfDomainValue, "domains must hold at least one value");

  std::vector<std::size_t> order(arity);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) { return scope[a] < scope[b]; });
  std::vector<VarId> sorted_scope(arity);
  std::vector<Domain> sorted_domains(arity);
  for (std::size_t c = 0; c < arity; ++c) {
    sorted_scope[c] = scope[order[c]];
    sorted_domains[c] = domains[order[c]];
    if (c > 0 && sorted_scope[c] == sorted_scope[c - 1])
      fail(ErrorCode::DuplicateEntry, var_name(sorted_scope[c]) + " appears twice in the scope");
  }

  std::vector<Value> keys;
  keys.reserve(entries.size() * arity);
  std::vector<double> values;
  values.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.assignment.size() != arity)
      fail(ErrorCode::ScopeMismatch, "entry length does not match the scope");
    if (!(e.potential > 0.0) || !std::isfinite(e.potential))
      fail(ErrorCode::NonPositivePotential, "stored potentials must be finite and > 0");
    for (std::size_t c = 0; c < arity; ++c) {
      const Value v = e.assignment[order[c]];
      if (!sorted_domains[c].contains(v))
        fail(ErrorCode::OutOfDomainValue,
             "value " + std::to_string(v) + " outside the domain of " + var_name(sorted_scope[c]));
      keys.push_back(v);
    }
    values.push_back(e.potential);
  }
  if (arity == 0 && values.size() > 1)
    fail(ErrorCode::DuplicateEntry, "an empty-scope factor holds at most one entry");
  sort_rows(arity, keys, values);
  for (std::size_t i = 1; i < values.size(); ++i)
    if (compare_rows(keys.data() + (i - 1) * arity, keys.data() + i * arity, arity) == 0)
      fail(ErrorCode::DuplicateEntry, "assignment listed twice");
  return SparseFactor::from_parts(std::move(sorted_scope), std::move(sorted_domains),
                                  std::move(keys), std::move(values), true);
}

SparseFactor vacuous(std::vector<VarId> scope, std::vector<Domain> domains, std::size_t cap) {
  if (domains.size() != scope.size())
    fail(ErrorCode::ScopeMismatch, "one domain per scope variable is required");
  // Canonicalise through make_factor's ordering on an empty table first.
  const SparseFactor shape = make_factor(std::move(scope), std::move(domains), {});
  const double n = shape.dense_size();
  if (n > static_cast<double>(cap)) check_capacity(cap + 1, cap);
  const std::size_t count = static_cast<std::size_t>(n);
  const std::size_t arity = shape.arity();
  std::vector<Value> keys(count * arity);
  std::vector<std::size_t> digit(arity, 0);
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t c = 0; c < arity; ++c) keys[r * arity + c] = shape.domains()[c][digit[c]];
    for (std::size_t c = arity; c-- > 0;) {
      if (++digit[c] < shape.domains()[c].size()) break;
      digit[c] = 0;
    }
  }
  return SparseFactor::from_parts({shape.scope().begin(), shape.scope().end()},
                                  {shape.domains().begin(), shape.domains().end()},
                                  std::move(keys), std::vector<double>(count, 1.0), true);
}

// Algebra

SparseFactor multiply(const SparseFactor& f, const SparseFactor& g, std::size_t cap) {
  const auto fs = f.scope();
  const auto gs = g.scope();
  for (std::size_t i = 0, j = 0; i < fs.size() && j < gs.size();) {
    if (fs[i] < gs[j]) {
      ++i;
    } else if (gs[j] < fs[i]) {
      ++j;
    } else {
      if (!(f.domains()[i] == g.domains()[j]))
        fail(ErrorCode::DomainMismatch, var_name(fs[i]) + " has different domains in the operands");
      ++i;
      ++j;
    }
  }

  if (scope_includes(fs, gs)) return filter_product(f, g);
  if (scope_includes(gs, fs)) return filter_product(g, f);

  const auto shared = scope_intersection(fs, gs);
  const auto f_cols = positions_in(fs, shared);
  const auto g_cols = positions_in(gs, shared);
  const std::size_t width = shared.size();

  // g's rows ordered by their projection onto the shared variables.
  std::vector<std::uint32_t> g_order(g.size());
  std::iota(g_order.begin(), g_order.end(), 0u);
  std::vector<Value> g_proj(g.size() * width);
  for (std::size_t r = 0; r < g.size(); ++r) {
    const auto row = g.row(r);
    for (std::size_t c = 0; c < width; ++c) g_proj[r * width + c] = row[g_cols[c]];
  }
  std::ranges::stable_sort(g_order, [&](std::uint32_t a, std::uint32_t b) {
    return compare_rows(g_proj.data() + a * width, g_proj.data() + b * width, width) < 0;
  });
  std::vector<Value> g_sorted_proj(g_proj.size());
  for (std::size_t i = 0; i < g_order.size(); ++i)
    std::memcpy(g_sorted_proj.data() + i * width, g_proj.data() + std::size_t{g_order[i]} * width,
                width);

  auto scope = scope_union(fs, gs);
  std::vector<Domain> domains;
  domains.reserve(scope.size());
  // Source of each output column: (from f?, column index).
  std::vector<std::pair<bool, std::size_t>> source;
  source.reserve(scope.size());
  for (VarId v : scope) {
    if (auto p = f.position(v)) {
      source.emplace_back(true, *p);
      domains.push_back(f.domains()[*p]);
    } else {
      const auto q = *g.position(v);
      source.emplace_back(false, q);
      domains.push_back(g.domains()[q]);
    }
  }

  const std::size_t arity = scope.size();
  std::vector<Value> keys;
  std::vector<double> values;
  std::vector<Value> key(width);
  for (std::size_t r = 0; r < f.size(); ++r) {
    const auto frow = f.row(r);
    for (std::size_t c = 0; c < width; ++c) key[c] = frow[f_cols[c]];
    const std::size_t lo = lower_bound_rows(g_sorted_proj.data(), width, g.size(), key.data());
    const std::size_t hi = upper_bound_rows(g_sorted_proj.data(), width, g.size(), key.data());
    if (lo == hi) continue;
    check_capacity(values.size() + (hi - lo), cap);
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t gr = g_order[k];
      const auto grow = g.row(gr);
      for (const auto& [from_f, col] : source) keys.push_back(from_f ? frow[col] : grow[col]);
      values.push_back(f.potential(r) * g.potential(gr));
    }
  }
  // Underflow to zero would break the sparsity invariant.
  if (std::ranges::any_of(values, [](double p) { return !(p > 0.0); })) {
    std::vector<Value> kept_keys;
    std::vector<double> kept_values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] > 0.0)) continue;
      kept_keys.insert(kept_keys.end(), keys.begin() + i * arity, keys.begin() + (i + 1) * arity);
      kept_values.push_back(values[i]);
    }
    keys.swap(kept_keys);
    values.swap(kept_values);
  }
  return SparseFactor::from_parts(std::move(scope), std::move(domains), std::move(keys),
                                  std::move(values), false);
}

SparseFactor divide(const SparseFactor& f, const SparseFactor& g) {
  if (!scope_includes(f.scope(), g.scope()))
    fail(ErrorCode::ScopeNotSubset, "divisor scope must be a subset of the dividend scope");
  for (VarId v : g.scope())
    if (!(f.domain(v) == g.domain(v)))
      fail(ErrorCode::DomainMismatch, var_name(v) + " has different domains in the operands");
  const auto cols = positions_in(f.scope(), g.scope());
  std::vector<Value> key(cols.size());
  std::vector<Value> keys;
  std::vector<double> values;
  keys.reserve(f.keys().size());
  values.reserve(f.size());
  for (std::size_t r = 0; r < f.size(); ++r) {
    const auto row = f.row(r);
    for (std::size_t c = 0; c < cols.size(); ++c) key[c] = row[cols[c]];
    const auto hit = g.find(key);
    if (!hit) fail(ErrorCode::DivisionByZero, "positive entry divided by a zero potential");
    const double q = f.potential(r) / g.potential(*hit);
    if (!(q > 0.0)) continue;
    keys.insert(keys.end(), row.begin(), row.end());
    values.push_back(q);
  }
  return SparseFactor::from_parts({f.scope().begin(), f.scope().end()},
                                  {f.domains().begin(), f.domains().end()}, std::move(keys),
                                  std::move(values), true);
}

SparseFactor marginalize(const SparseFactor& f, std::span<const VarId> keep_in, NormMode mode) {
  std::vector<VarId> keep(keep_in.begin(), keep_in.end());
  std::ranges::sort(keep);
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (VarId v : keep)
    if (!f.contains(v)) fail(ErrorCode::UnknownVariable, var_name(v) + " is not in the factor scope");
  if (keep.size() == f.arity()) return f;

  const auto cols = positions_in(f.scope(), keep);
  const std::size_t width = cols.size();
  std::vector<Domain> domains;
  for (auto c : cols) domains.push_back(f.domains()[c]);

  const bool prefix = std::ranges::equal(cols, std::views::iota(std::size_t{0}, width));
  std::vector<Value> proj(f.size() * width);
  for (std::size_t r = 0; r < f.size(); ++r) {
    const auto row = f.row(r);
    for (std::size_t c = 0; c < width; ++c) proj[r * width + c] = row[cols[c]];
  }
  std::vector<std::uint32_t> order(f.size());
  std::iota(order.begin(), order.end(), 0u);
  if (!prefix) {
    std::ranges::stable_sort(order, [&](std::uint32_t a, std::uint32_t b) {
      return compare_rows(proj.data() + a * width, proj.data() + b * width, width) < 0;
    });
  }

  std::vector<Value> keys;
  std::vector<double> values;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Value* k = proj.data() + std::size_t{order[i]} * width;
    const double p = f.potential(order[i]);
    if (!values.empty() && compare_rows(keys.data() + keys.size() - width, k, width) == 0) {
      values.back() = mode == NormMode::Sum ? values.back() + p : std::max(values.back(), p);
    } else {
      keys.insert(keys.end(), k, k + width);
      values.push_back(p);
    }
  }
  return SparseFactor::from_parts(std::move(keep), std::move(domains), std::move(keys),
                                  std::move(values), true);
}

SparseFactor reduce(const SparseFactor& f, const Assignment& evidence) {
  std::vector<std::pair<std::size_t, Value>> observed;
  for (const auto& [var, value] : evidence) {
    const auto pos = f.position(var);
    if (!pos) fail(ErrorCode::UnknownVariable, var_name(var) + " is not in the factor scope");
    if (!f.domains()[*pos].contains(value))
      fail(ErrorCode::OutOfDomainValue,
           "observed value " + std::to_string(value) + " outside the domain of " + var_name(var));
    observed.emplace_back(*pos, value);
  }
  std::vector<VarId> scope;
  std::vector<Domain> domains;
  std::vector<std::size_t> kept_cols;
  for (std::size_t c = 0; c < f.arity(); ++c) {
    if (evidence.contains(f.scope()[c])) continue;
    scope.push_back(f.scope()[c]);
    domains.push_back(f.domains()[c]);
    kept_cols.push_back(c);
  }
  std::vector<Value> keys;
  std::vector<double> values;
  for (std::size_t r = 0; r < f.size(); ++r) {
    const auto row = f.row(r);
    const bool consistent =
        std::ranges::all_of(observed, [&](const auto& o) { return row[o.first] == o.second; });
    if (!consistent) continue;
    for (auto c : kept_cols) keys.push_back(row[c]);
    values.push_back(f.potential(r));
  }
  return SparseFactor::from_parts(std::move(scope), std::move(domains), std::move(keys),
                                  std::move(values), true);
}

SparseFactor normalize(const SparseFactor& f, NormMode mode) {
  if (f.empty()) fail(ErrorCode::EmptySupport, "cannot normalise a factor with empty support");
  const auto p = f.potentials();
  const double z = mode == NormMode::Sum ? std::accumulate(p.begin(), p.end(), 0.0)
                                         : *std::ranges::max_element(p);
  std::vector<double> values(p.begin(), p.end());
  for (auto& v : values) v /= z;
  return SparseFactor::from_parts({f.scope().begin(), f.scope().end()},
                                  {f.domains().begin(), f.domains().end()},
                                  {f.keys().begin(), f.keys().end()}, std::move(values), true);
}

SparseFactor damp(const SparseFactor& fresh, const SparseFactor& previous, double lambda) {
  require_same_layout(fresh, previous, "damp");
  const std::size_t arity = fresh.arity();
  std::vector<Value> keys;
  std::vector<double> values;
  std::size_t i = 0, j = 0;
  auto emit = [&](std::span<const Value> row, double p) {
    if (!(p > 0.0)) return;
    keys.insert(keys.end(), row.begin(), row.end());
    values.push_back(p);
  };
  while (i < fresh.size() || j < previous.size()) {
    int cmp;
    if (i == fresh.size())
      cmp = 1;
    else if (j == previous.size())
      cmp = -1;
    else
      cmp = compare_rows(fresh.row(i).data(), previous.row(j).data(), arity);
    if (cmp < 0) {
      emit(fresh.row(i), lambda * fresh.potential(i));
      ++i;
    } else if (cmp > 0) {
      emit(previous.row(j), (1.0 - lambda) * previous.potential(j));
      ++j;
    } else {
      emit(fresh.row(i), lambda * fresh.potential(i) + (1.0 - lambda) * previous.potential(j));
      ++i;
      ++j;
    }
  }
  return SparseFactor::from_parts({fresh.scope().begin(), fresh.scope().end()},
                                  {fresh.domains().begin(), fresh.domains().end()},
                                  std::move(keys), std::move(values), true);
}

SparseFactor restrict_domain(const SparseFactor& f, VarId var, const Domain& allowed) {
  const auto pos = f.position(var);
  if (!pos) fail(ErrorCode::UnknownVariable, var_name(var) + " is not in the factor scope");
  for (Value v : allowed.values())
    if (!f.domains()[*pos].contains(v))
      fail(ErrorCode::OutOfDomainValue, "restricted domain must be a subset of the current one");
  std::vector<Domain> domains(f.domains().begin(), f.domains().end());
  domains[*pos] = allowed;
  std::vector<Value> keys;
  std::vector<double> values;
  for (std::size_t r = 0; r < f.size(); ++r) {
    const auto row = f.row(r);
    if (!allowed.contains(row[*pos])) continue;
    keys.insert(keys.end(), row.begin(), row.end());
    values.push_back(f.potential(r));
  }
  return SparseFactor::from_parts({f.scope().begin(), f.scope().end()}, std::move(domains),
                                  std::move(keys), std::move(values), true);
}

Domain support_of(const SparseFactor& f, VarId var) {
  const auto pos = f.position(var);
  if (!pos) fail(ErrorCode::UnknownVariable, var_name(var) + " is not in the factor scope");
  std::array<bool, kMaxCardinality> seen{};
  for (std::size_t r = 0; r < f.size(); ++r) seen[f.row(r)[*pos]] = true;
  std::vector<Value> values;
  for (std::size_t v = 0; v < kMaxCardinality; ++v)
    if (seen[v]) values.push_back(static_cast<Value>(v));
  return Domain(std::move(values));
}

// Metrics

double divergence(const SparseFactor& p, const SparseFactor& q) {
  require_same_layout(p, q, "divergence");
  if (p.empty()) fail(ErrorCode::EmptySupport, "divergence of an empty distribution");
  if (q.empty()) return std::numeric_limits<double>::infinity();
  const auto pp = p.potentials();
  const auto qq = q.potentials();
  const double zp = std::accumulate(pp.begin(), pp.end(), 0.0);
  const double zq = std::accumulate(qq.begin(), qq.end(), 0.0);
  const std::size_t arity = p.arity();
  double d = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (j < q.size() && compare_rows(q.row(j).data(), p.row(i).data(), arity) < 0) ++j;
    if (j == q.size() || compare_rows(q.row(j).data(), p.row(i).data(), arity) != 0)
      return std::numeric_limits<double>::infinity();
    const double pi = pp[i] / zp;
    d += pi * std::log(pi / (qq[j] / zq));
  }
  return std::max(d, 0.0);
}

double upper_bound_entropy(std::span<const Domain> domains) {
  double h = 0.0;
  for (const auto& d : domains) h += std::log2(static_cast<double>(d.size()));
  return h;
}

double mass(const SparseFactor& f) {
  if (f.empty()) fail(ErrorCode::EmptySupport, "mass of a factor with empty support");
  const auto p = f.potentials();
  const double z = std::accumulate(p.begin(), p.end(), 0.0);
  const double log_n = upper_bound_entropy(f.domains());
  // KL(p || uniform) = log2 N - H(p)
  double neg_entropy = 0.0;
  for (double v : p) {
    const double pi = v / z;
    neg_entropy += pi * std::log2(pi);
  }
  return std::max(log_n + neg_entropy, 0.0);
}

std::vector<VarId> scope_union(std::span<const VarId> a, std::span<const VarId> b) {
  std::vector<VarId> out;
  out.reserve(a.size() + b.size());
  std::ranges::set_union(a, b, std::back_inserter(out));
  return out;
}

std::vector<VarId> scope_intersection(std::span<const VarId> a, std::span<const VarId> b) {
  std::vector<VarId> out;
  std::ranges::set_intersection(a, b, std::back_inserter(out));
  return out;
}

bool scope_includes(std::span<const VarId> super, std::span<const VarId> sub) {
  return std::ranges::includes(super, sub);
}

}  // namespace pgm
