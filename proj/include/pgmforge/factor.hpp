#pragma once

// Sparse discrete potential tables and the factor algebra used by every other
// module: product, quotient, marginalisation, reduction by evidence,
// normalisation, damping, plus the scalar metrics (KL divergence, upper-bound
// entropy, pseudo-mass) used for scheduling and factor clustering.
//
// A factor stores only its non-zero entries. Rows are value tuples over the
// scope sorted by VarId, and the rows themselves are kept in lexicographic
// order so equal factors compare equal and iteration is deterministic.
// Factors are immutable values; every operation returns a new factor.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace pgm {

struct VarId {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(VarId, VarId) = default;
};

/// Index of a symbol in a variable's full (root) value list.
using Value = std::uint8_t;

inline constexpr std::size_t kMaxCardinality = 256;

/// Largest number of entries any single operation may materialise before it
/// fails with CapacityExceeded.
inline constexpr std::size_t kDefaultEntryCap = std::size_t{1} << 27;

/// SUM for probabilistic queries, MAX for constraint solving.
enum class NormMode { Sum, Max };

/// Admissible values of one variable, ascending and duplicate-free.
class Domain {
 public:
  Domain() = default;
  explicit Domain(std::vector<Value> values);

  /// {0, 1, ..., cardinality-1}
  static Domain range(std::size_t cardinality);

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::span<const Value> values() const noexcept { return values_; }
  Value operator[](std::size_t i) const { return values_[i]; }
  bool contains(Value v) const;
  std::optional<std::size_t> index_of(Value v) const;

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  std::vector<Value> values_;
};

using Assignment = std::map<VarId, Value>;

/// One input row for make_factor; values follow the order of the scope
/// argument passed alongside it.
struct Entry {
  std::vector<Value> assignment;
  double potential = 1.0;
};

class SparseFactor {
 public:
  /// Empty scope and empty support.
  SparseFactor() = default;

  std::span<const VarId> scope() const noexcept { return scope_; }
  std::span<const Domain> domains() const noexcept { return domains_; }
  const Domain& domain(VarId var) const;
  std::optional<std::size_t> position(VarId var) const;
  bool contains(VarId var) const { return position(var).has_value(); }

  std::size_t arity() const noexcept { return scope_.size(); }
  /// Number of stored (non-zero) entries.
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const Value> row(std::size_t i) const {
    return {keys_.data() + i * arity(), arity()};
  }
  double potential(std::size_t i) const { return values_[i]; }
  std::span<const double> potentials() const noexcept { return values_; }
  std::span<const Value> keys() const noexcept { return keys_; }

  std::optional<std::size_t> find(std::span<const Value> row) const;
  /// Potential of a full row; 0 when absent.
  double at(std::span<const Value> row) const;
  Assignment assignment(std::size_t i) const;

  /// Product of the domain cardinalities (as a double; may exceed 2^64).
  double dense_size() const;

  /// Builds a factor from already-canonical parts without validation beyond
  /// debug assertions. Rows must be unique and potentials strictly positive;
  /// `scope` must be ascending. Rows are sorted here unless `rows_sorted`.
  static SparseFactor from_parts(std::vector<VarId> scope, std::vector<Domain> domains,
                                 std::vector<Value> keys, std::vector<double> values,
                                 bool rows_sorted);

  friend bool operator==(const SparseFactor&, const SparseFactor&) = default;

 private:
  std::vector<VarId> scope_;
  std::vector<Domain> domains_;
  std::vector<Value> keys_;
  std::vector<double> values_;
};

// Construction

/// Validating constructor. The scope may be given in any order; it is
/// canonicalised to ascending VarId and the rows are permuted to match.
SparseFactor make_factor(std::vector<VarId> scope, std::vector<Domain> domains,
                         std::vector<Entry> entries);

/// All joint assignments at potential 1.
SparseFactor vacuous(std::vector<VarId> scope, std::vector<Domain> domains,
                     std::size_t cap = kDefaultEntryCap);

// Factor algebra

SparseFactor multiply(const SparseFactor& f, const SparseFactor& g,
                      std::size_t cap = kDefaultEntryCap);

/// Entry-wise quotient; requires scope(g) to be a subset of scope(f).
/// 0/0 is treated as 0, a positive entry over a zero raises DivisionByZero.
SparseFactor divide(const SparseFactor& f, const SparseFactor& g);

SparseFactor marginalize(const SparseFactor& f, std::span<const VarId> keep, NormMode mode);

/// Keeps entries consistent with the evidence and drops the observed
/// variables from the scope. The result is not renormalised.
SparseFactor reduce(const SparseFactor& f, const Assignment& evidence);

SparseFactor normalize(const SparseFactor& f, NormMode mode);

/// lambda * fresh + (1 - lambda) * previous over the union of supports.
SparseFactor damp(const SparseFactor& fresh, const SparseFactor& previous, double lambda);

/// Drops entries whose value for `var` is outside `allowed` and narrows the
/// stored domain. `allowed` must be a subset of the current domain.
SparseFactor restrict_domain(const SparseFactor& f, VarId var, const Domain& allowed);

/// Values of `var` that carry non-zero potential somewhere in f.
Domain support_of(const SparseFactor& f, VarId var);

// Metrics

/// KL divergence D(p || q) in nats. Both operands are sum-normalised first.
/// Returns +infinity when p has mass where q has none.
double divergence(const SparseFactor& p, const SparseFactor& q);

/// log2 of the dense assignment-space size; 0 for an empty scope.
double upper_bound_entropy(std::span<const Domain> domains);

/// KL divergence (bits) of the sum-normalised factor against the uniform
/// distribution over its dense assignment space.
double mass(const SparseFactor& f);

/// Sorted union / intersection helpers over ascending scopes.
std::vector<VarId> scope_union(std::span<const VarId> a, std::span<const VarId> b);
std::vector<VarId> scope_intersection(std::span<const VarId> a, std::span<const VarId> b);
bool scope_includes(std::span<const VarId> super, std::span<const VarId> sub);

}  // namespace pgm
