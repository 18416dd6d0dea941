#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "pgmforge/errors.hpp"
#include "pgmforge/factor.hpp"
#include "pgmforge/factor_io.hpp"
#include "support/oracles.hpp"

namespace {

using namespace pgm;
using oracle::var;

const VarId A = var(0), B = var(1), C = var(2), D = var(3), F = var(5);

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no pgm::Error thrown";
  return ErrorCode::ParseError;
}

SparseFactor permutations(std::vector<VarId> scope, std::size_t card) {
  std::vector<Value> perm(card);
  std::iota(perm.begin(), perm.end(), Value{0});
  std::vector<Entry> entries;
  do {
    entries.push_back({perm, 1.0});
  } while (std::next_permutation(perm.begin(), perm.end()));
  return make_factor(std::move(scope), std::vector<Domain>(card, Domain::range(card)), std::move(entries));
}

TEST(Factor, PermutationTableHasOneEntryPerPermutation) {
  const auto f = permutations({A, C, D, F}, 4);
  EXPECT_EQ(f.size(), 24u);
  EXPECT_EQ(f.dense_size(), 256.0);
}

TEST(Factor, EmptyEntryListGivesEmptySupport) {
  const auto f = make_factor({A}, {Domain::range(3)}, {});
  EXPECT_TRUE(f.empty());
  EXPECT_EQ(f.arity(), 1u);
}

TEST(Factor, ConstructorRejectsBadInput) {
  const auto bin = Domain::range(2);
  EXPECT_EQ(code_of([&] { make_factor({A}, {bin}, {{{0}, 1.0}, {{0}, 2.0}}); }), ErrorCode::DuplicateEntry);
  EXPECT_EQ(code_of([&] { make_factor({A}, {bin}, {{{2}, 1.0}}); }), ErrorCode::OutOfDomainValue);
  EXPECT_EQ(code_of([&] { make_factor({A}, {bin}, {{{1}, 0.0}}); }), ErrorCode::NonPositivePotential);
}

TEST(Factor, ScopeIsCanonicalised) {
  const auto f = make_factor({B, A}, {Domain::range(2), Domain::range(3)}, {{{1, 2}, 0.5}});
  ASSERT_EQ(f.scope()[0], A);
  EXPECT_EQ(f.row(0)[0], 2);
  EXPECT_EQ(f.row(0)[1], 1);
  EXPECT_EQ(f.domain(A).size(), 3u);
}

TEST(Vacuous, IsTheMultiplicativeIdentity) {
  const auto v = vacuous({A}, {Domain::range(4)});
  EXPECT_EQ(v.size(), 4u);
  for (double p : v.potentials()) EXPECT_EQ(p, 1.0);
  EXPECT_DOUBLE_EQ(mass(v), 0.0);

  std::mt19937 rng(3);
  const std::vector<Domain> doms{Domain::range(3), Domain::range(2)};
  const auto f = oracle::random_factor(rng, {A, B}, doms, 0.7, false);
  EXPECT_EQ(multiply(f, vacuous({A, B}, doms)), f);
}

TEST(Multiply, DisjointScopesGiveTheFullJoint) {
  const auto px = make_factor({A}, {Domain::range(3)}, {{{0}, 0.2}, {{1}, 0.3}, {{2}, 0.5}});
  const auto pyz = vacuous({B, C}, {Domain::range(2), Domain::range(2)});
  const auto j = multiply(px, pyz);
  EXPECT_EQ(j.arity(), 3u);
  EXPECT_EQ(j.size(), 12u);
}

TEST(Multiply, JoinMatchesDenseEnumeration) {
  const auto d3 = Domain::range(3);
  const auto f1 = make_factor({A, B}, {d3, d3}, {{{0, 1}, 1.0}, {{1, 0}, 1.0}});
  const auto f2 = make_factor({B, C}, {d3, d3}, {{{1, 2}, 1.0}});
  const auto got = multiply(f1, f2);
  const auto want = oracle::dense_product({f1, f2});
  ASSERT_EQ(got.size(), want.size());
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got.assignment(0), (Assignment{{A, 0}, {B, 1}, {C, 2}}));
}

TEST(Multiply, SharedVariableNeedsEqualDomains) {
  const auto f = vacuous({A}, {Domain::range(3)});
  const auto g = vacuous({A}, {Domain({0, 1})});
  EXPECT_EQ(code_of([&] { multiply(f, g); }), ErrorCode::DomainMismatch);
}

TEST(Multiply, CapIsEnforced) {
  const auto f = vacuous({A}, {Domain::range(16)});
  const auto g = vacuous({B}, {Domain::range(16)});
  EXPECT_EQ(code_of([&] { multiply(f, g, 100); }), ErrorCode::CapacityExceeded);
}

TEST(Divide, ConditionalFromJoint) {
  const auto bin = Domain::range(2);
  const auto yz = make_factor({B, C}, {bin, bin},
                              {{{0, 0}, 0.1}, {{0, 1}, 0.2}, {{1, 0}, 0.3}, {{1, 1}, 0.4}});
  const auto z = marginalize(yz, std::vector<VarId>{C}, NormMode::Sum);
  const auto cond = divide(yz, z);
  EXPECT_NEAR(cond.at(std::vector<Value>{0, 0}), 0.1 / 0.4, 1e-12);
  EXPECT_NEAR(cond.at(std::vector<Value>{1, 1}), 0.4 / 0.6, 1e-12);
  const auto per_z = marginalize(cond, std::vector<VarId>{C}, NormMode::Sum);
  for (double p : per_z.potentials()) EXPECT_NEAR(p, 1.0, 1e-12);
}

TEST(Divide, SelfQuotientIsOneOnSupport) {
  const auto d = Domain::range(3);
  const auto f = make_factor({A, B}, {d, d}, {{{0, 1}, 0.5}, {{2, 2}, 3.0}});
  const auto q = divide(f, f);
  EXPECT_EQ(q.size(), 2u);
  for (double p : q.potentials()) EXPECT_DOUBLE_EQ(p, 1.0);
  // Rows absent from both stay absent.
  EXPECT_EQ(q.at(std::vector<Value>{1, 1}), 0.0);
}

TEST(Divide, Errors) {
  const auto bin = Domain::range(2);
  const auto f = make_factor({A}, {bin}, {{{0}, 1.0}, {{1}, 1.0}});
  const auto g = make_factor({A}, {bin}, {{{0}, 1.0}});
  EXPECT_EQ(code_of([&] { divide(f, g); }), ErrorCode::DivisionByZero);
  EXPECT_EQ(code_of([&] { divide(f, vacuous({A, B}, {bin, bin})); }), ErrorCode::ScopeNotSubset);
}

TEST(Marginalize, SumPreservesNormalisation) {
  std::mt19937 rng(11);
  const std::vector<Domain> doms{Domain::range(2), Domain::range(3), Domain::range(2)};
  const auto f = normalize(oracle::random_factor(rng, {A, B, C}, doms, 0.8, false), NormMode::Sum);
  for (const auto& keep : {std::vector<VarId>{A}, {B, C}, {A, C}}) {
    const auto m = marginalize(f, keep, NormMode::Sum);
    const auto p = m.potentials();
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(Marginalize, SingleEntryProjectsInBothModes) {
  const auto d = Domain::range(3);
  const auto f = make_factor({A, B}, {d, d}, {{{2, 1}, 0.7}});
  for (auto mode : {NormMode::Sum, NormMode::Max}) {
    const auto m = marginalize(f, std::vector<VarId>{B}, mode);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m.row(0)[0], 1);
    EXPECT_DOUBLE_EQ(m.potential(0), 0.7);
  }
}

TEST(Marginalize, MaxOverSecondVariable) {
  // {(1,2),(1,3),(2,3)} with values 1..3 at indices 0..2.
  const auto d = Domain::range(3);
  const auto f = make_factor({A, B}, {d, d}, {{{0, 1}, 1.0}, {{0, 2}, 1.0}, {{1, 2}, 1.0}});
  const auto m = marginalize(f, std::vector<VarId>{A}, NormMode::Max);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.at(std::vector<Value>{0}), 1.0);
  EXPECT_EQ(m.at(std::vector<Value>{1}), 1.0);
  EXPECT_EQ(code_of([&] { marginalize(f, std::vector<VarId>{C}, NormMode::Sum); }),
            ErrorCode::UnknownVariable);
}

TEST(Reduce, ObservationSlices) {
  const auto bin = Domain::range(2);
  const auto f = make_factor({A, B, C}, {bin, bin, bin},
                             {{{0, 0, 0}, 1.0}, {{0, 1, 1}, 2.0}, {{1, 0, 1}, 3.0}});
  const auto slice = reduce(f, {{A, 0}});
  EXPECT_EQ(slice.arity(), 2u);
  EXPECT_EQ(slice.size(), 2u);
  EXPECT_EQ(slice.at(std::vector<Value>{1, 1}), 2.0);

  const auto full = reduce(f, {{A, 1}, {B, 0}, {C, 1}});
  EXPECT_EQ(full.arity(), 0u);
  ASSERT_EQ(full.size(), 1u);
  EXPECT_EQ(full.potential(0), 3.0);

  EXPECT_TRUE(reduce(f, {{A, 1}, {B, 1}}).empty());
  EXPECT_EQ(code_of([&] { reduce(f, {{D, 0}}); }), ErrorCode::UnknownVariable);
  EXPECT_EQ(code_of([&] { reduce(f, {{A, 5}}); }), ErrorCode::OutOfDomainValue);
}

TEST(Normalize, BothModes) {
  const auto bin = Domain::range(2);
  const auto f = make_factor({A}, {bin}, {{{0}, 2.0}, {{1}, 2.0}});
  const auto s = normalize(f, NormMode::Sum);
  EXPECT_DOUBLE_EQ(s.potential(0), 0.5);
  EXPECT_DOUBLE_EQ(s.potential(1), 0.5);
  const auto binary = make_factor({A, B}, {bin, bin}, {{{0, 1}, 1.0}, {{1, 0}, 1.0}});
  EXPECT_EQ(normalize(binary, NormMode::Max), binary);
  EXPECT_EQ(code_of([&] { normalize(make_factor({A}, {bin}, {}), NormMode::Sum); }), ErrorCode::EmptySupport);
}

TEST(Damp, EndpointsAndMidpoint) {
  const auto bin = Domain::range(2);
  const auto a = make_factor({A}, {bin}, {{{0}, 1.0}});
  const auto b = make_factor({A}, {bin}, {{{1}, 1.0}});
  EXPECT_EQ(damp(a, b, 1.0), a);
  EXPECT_EQ(damp(a, b, 0.0), b);
  const auto mid = damp(a, b, 0.5);
  EXPECT_DOUBLE_EQ(mid.at(std::vector<Value>{0}), 0.5);
  EXPECT_DOUBLE_EQ(mid.at(std::vector<Value>{1}), 0.5);
  EXPECT_EQ(code_of([&] { damp(a, make_factor({B}, {bin}, {{{0}, 1.0}}), 0.5); }), ErrorCode::ScopeMismatch);
}

TEST(Divergence, KnownValues) {
  const auto bin = Domain::range(2);
  const auto p = make_factor({A}, {bin}, {{{0}, 0.9}, {{1}, 0.1}});
  const auto u = make_factor({A}, {bin}, {{{0}, 0.5}, {{1}, 0.5}});
  const auto point = make_factor({A}, {bin}, {{{0}, 1.0}});
  EXPECT_DOUBLE_EQ(divergence(p, p), 0.0);
  EXPECT_NEAR(divergence(point, u), std::log(2.0), 1e-15);
  const double pu = 0.9 * std::log(0.9 / 0.5) + 0.1 * std::log(0.1 / 0.5);
  const double up = 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1);
  EXPECT_NEAR(divergence(p, u), pu, 1e-14);
  EXPECT_NEAR(divergence(u, p), up, 1e-14);
  EXPECT_GT(std::abs(pu - up), 0.1);
  EXPECT_TRUE(std::isinf(divergence(u, point)));
}

TEST(Entropy, UpperBound) {
  const std::vector<Domain> two9{Domain::range(9), Domain::range(9)};
  EXPECT_NEAR(upper_bound_entropy(two9), 2 * std::log2(9.0), 1e-12);
  EXPECT_EQ(upper_bound_entropy({}), 0.0);
  const std::vector<Domain> one{Domain::range(2)};
  EXPECT_EQ(upper_bound_entropy(one), 1.0);
}

TEST(Mass, ClosedFormForUniformSupport) {
  EXPECT_NEAR(mass(permutations({A, C, D, F}, 4)), std::log2(256.0 / 24.0), 1e-12);

  std::vector<VarId> row;
  for (std::uint32_t i = 0; i < 9; ++i) row.push_back(var(10 + i));
  const auto sudoku_row = permutations(row, 9);
  ASSERT_EQ(sudoku_row.size(), 362880u);
  // Direct KL in bits against the uniform distribution over 9^9 states.
  const double n = std::pow(9.0, 9), k = 362880.0;
  double kl = 0.0;
  for (std::size_t i = 0; i < sudoku_row.size(); ++i) kl += (1.0 / k) * std::log2((1.0 / k) / (1.0 / n));
  EXPECT_NEAR(mass(sudoku_row), kl, 1e-9);
  EXPECT_NEAR(mass(sudoku_row), 10.0602, 1e-4);
  EXPECT_EQ(code_of([&] { mass(make_factor({A}, {Domain::range(2)}, {})); }), ErrorCode::EmptySupport);
}

TEST(Mass, ClosedFormOnRandomBinaryTables) {
  std::mt19937 rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::vector<Domain> doms{Domain::range(3), Domain::range(4)};
    const auto f = oracle::random_factor(rng, {A, B}, doms, 0.5, true);
    if (f.empty()) continue;
    EXPECT_NEAR(mass(f), std::log2(12.0 / static_cast<double>(f.size())), 1e-12);
  }
}

class FactorAlgebra : public ::testing::TestWithParam<int> {};

TEST_P(FactorAlgebra, Identities) {
  std::mt19937 rng(static_cast<unsigned>(GetParam()));
  const Domain d2 = Domain::range(2), d3 = Domain::range(3);
  const auto f = oracle::random_factor(rng, {A, B}, {d2, d3}, 0.7, false);
  const auto g = oracle::random_factor(rng, {B, C}, {d3, d2}, 0.7, false);

  // Commutativity.
  const auto fg = multiply(f, g);
  EXPECT_EQ(fg, multiply(g, f));
  EXPECT_TRUE(std::ranges::all_of(fg.potentials(), [](double p) { return p > 0.0; }));

  // Product against the dense oracle.
  const auto dense = oracle::dense_product({f, g});
  ASSERT_EQ(fg.size(), dense.size());
  for (std::size_t r = 0; r < fg.size(); ++r) EXPECT_NEAR(fg.potential(r), dense.at(fg.assignment(r)), 1e-12);

  // Division undoes multiplication on the product's support.
  if (!fg.empty()) {
    const auto back = divide(fg, g);
    for (std::size_t r = 0; r < back.size(); ++r)
      EXPECT_NEAR(back.potential(r), oracle::lookup(f, back.assignment(r)), 1e-12);
  }

  // Summing out a conditional's private variable leaves f.
  const auto h = vacuous({C}, {d2});
  const auto cond = normalize(h, NormMode::Sum);
  const auto back = marginalize(multiply(f, cond), f.scope(), NormMode::Sum);
  EXPECT_EQ(back.size(), f.size());
  for (std::size_t r = 0; r < f.size(); ++r) EXPECT_NEAR(back.potential(r), f.potential(r), 1e-12);

  // Reduction commutes with marginalisation over kept evidence variables.
  const Assignment ev{{B, 1}};
  const auto lhs = reduce(marginalize(fg, std::vector<VarId>{A, B}, NormMode::Sum), ev);
  const auto rhs = marginalize(reduce(fg, ev), std::vector<VarId>{A}, NormMode::Sum);
  ASSERT_EQ(lhs.size(), rhs.size());
  for (std::size_t r = 0; r < lhs.size(); ++r) EXPECT_NEAR(lhs.potential(r), rhs.potential(r), 1e-12);

  // Gibbs' inequality.
  const auto p = oracle::random_factor(rng, {A, B}, {d2, d3}, 1.0, false);
  const auto q = oracle::random_factor(rng, {A, B}, {d2, d3}, 1.0, false);
  EXPECT_GE(divergence(p, q), -1e-12);
  EXPECT_NEAR(divergence(p, p), 0.0, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Random, FactorAlgebra, ::testing::Range(0, 40));

TEST(FactorJson, LiteralRoundTrip) {
  VariableRegistry reg;
  const auto literal = nlohmann::json::parse(R"({
    "scope": ["X", "Y"],
    "domains": {"X": ["a", "b"], "Y": [1, 2, 3]},
    "entries": [{"assign": [0, 2], "p": 0.25}, {"assign": [1, 0], "p": 0.75}]
  })");
  const auto f = factor_from_json(literal, reg);
  EXPECT_EQ(f.size(), 2u);
  EXPECT_EQ(reg.symbols(*reg.find("Y"))[2], "3");
  const auto again = factor_from_json(factor_to_json(f, reg), reg);
  EXPECT_EQ(again, f);
  EXPECT_EQ(code_of([&] { factor_from_json(nlohmann::json::parse(R"({"scope": ["X"]})"), reg); }),
            ErrorCode::ParseError);
}

}  // namespace
