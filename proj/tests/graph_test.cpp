#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "pgmforge/errors.hpp"
#include "pgmforge/graph.hpp"
#include "pgmforge/puzzles.hpp"
#include "support/oracles.hpp"

namespace {

using namespace pgm;
using oracle::var;

SparseFactor over(std::vector<VarId> scope, std::size_t card = 2) {
  std::vector<Domain> doms(scope.size(), Domain::range(card));
  return vacuous(std::move(scope), std::move(doms));
}

// Variables A..G as ids 0..6.
const VarId A = var(0), B = var(1), C = var(2), D = var(3), E = var(4), F = var(5), G = var(6);

std::vector<SparseFactor> five_clusters() {
  return {over({B, C, D, E, F}), over({A, B, C, D}), over({B, E, F}), over({B, C, G}), over({A, B, G})};
}

bool subset(std::span<const VarId> a, std::span<const VarId> b) {
  return std::ranges::includes(b, a);
}

TEST(AbsorbSubsets, FoldsSubsetIntoSuperset) {
  std::mt19937 rng(1);
  const std::vector<Domain> d2{Domain::range(2), Domain::range(3)};
  const auto f = oracle::random_factor(rng, {A, B}, d2, 0.9, false);
  const auto g = oracle::random_factor(rng, {A}, {d2[0]}, 1.0, false);
  const auto h = oracle::random_factor(rng, {B}, {d2[1]}, 1.0, false);

  const auto one = absorb_subsets({f, g});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], multiply(f, g));

  const auto all = absorb_subsets({f, g, h});
  ASSERT_EQ(all.size(), 1u);
  const auto dense = oracle::dense_product({f, g, h});
  ASSERT_EQ(all[0].size(), dense.size());
  for (std::size_t r = 0; r < all[0].size(); ++r)
    EXPECT_NEAR(all[0].potential(r), dense.at(all[0].assignment(r)), 1e-12);
}

TEST(AbsorbSubsets, IncomparableScopesAreKept) {
  const std::vector fs{over({A, B}), over({B, C}), over({A, C}), over({C, D, E})};
  EXPECT_EQ(absorb_subsets(fs), fs);
  EXPECT_EQ(absorb_subsets(five_clusters()).size(), 4u);
}

TEST(AbsorbSubsets, OutputHasNoNestedScopes) {
  std::mt19937 rng(7);
  for (int t = 0; t < 200; ++t) {
    std::vector<SparseFactor> fs;
    std::uniform_int_distribution<int> n(2, 8), width(1, 3), pick(0, 5);
    for (int k = n(rng); k > 0; --k) {
      std::set<VarId> s;
      for (int w = width(rng); w > 0; --w) s.insert(var(static_cast<std::uint32_t>(pick(rng))));
      fs.push_back(over({s.begin(), s.end()}));
    }
    const auto out = absorb_subsets(fs);
    for (std::size_t i = 0; i < out.size(); ++i)
      for (std::size_t j = 0; j < out.size(); ++j)
        if (i != j) EXPECT_FALSE(subset(out[i].scope(), out[j].scope()));
  }
}

TEST(ConnectionWeights, EmphasisesStronglyConnectedClusters) {
  ClusterGraph g;
  for (auto& f : five_clusters()) g.add_cluster(f);
  const auto w = connection_weights(g, B, {0, 1, 2, 3, 4});
  EXPECT_EQ(w.maximal_weight, 3.0);
  EXPECT_EQ(w.maximal_count[0], 2u);
  EXPECT_EQ(w.maximal_count[1], 1u);
  EXPECT_EQ(w.maximal_count[2], 1u);
  EXPECT_EQ(w.maximal_count[3], 0u);
  // |C1 n C2| = 3 plus t1 + t2; |C1 n C4| = 2 plus t1 + t4.
  EXPECT_EQ(w.weight(0, 1), 6.0);
  EXPECT_EQ(w.weight(0, 3), 4.0);
  EXPECT_EQ(w.weight(1, 0), 6.0);
}

TEST(ConnectionWeights, TwoClusters) {
  ClusterGraph g;
  g.add_cluster(over({A, B}));
  g.add_cluster(over({B, C}));
  const auto w = connection_weights(g, B, {0, 1});
  EXPECT_EQ(w.weight(0, 1), 1.0 + 2.0);
}

TEST(MaxSpanningTree, SmallCases) {
  const auto two = max_spanning_tree({{0, 4}, {4, 0}});
  ASSERT_EQ(two.size(), 1u);
  EXPECT_EQ(two[0], (std::pair<std::size_t, std::size_t>{0, 1}));
  const auto star = max_spanning_tree({{0, 5, 5}, {5, 0, 1}, {5, 1, 0}});
  std::set<std::pair<std::size_t, std::size_t>> got(star.begin(), star.end());
  EXPECT_EQ(got, (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {0, 2}}));
}

TEST(MaxSpanningTree, OptimalAgainstExhaustiveEnumeration) {
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> size(2, 5), weight(0, 2);
  for (int t = 0; t < 300; ++t) {
    const auto n = static_cast<std::size_t>(size(rng));
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) w[i][j] = w[j][i] = weight(rng);
    const auto tree = max_spanning_tree(w);
    ASSERT_EQ(tree.size(), n - 1);
    double total = 0.0;
    for (auto [i, j] : tree) total += w[i][j];
    EXPECT_EQ(total, oracle::best_spanning_weight(w));
    EXPECT_EQ(tree, max_spanning_tree(w));
  }
}

TEST(Ltrip, FiveClusterSuperposition) {
  const auto g = ltrip(five_clusters());
  EXPECT_TRUE(validate_rip(g).empty());
  for (const auto& s : g.sepsets()) {
    const auto both = scope_intersection(g.cluster(s.i).scope, g.cluster(s.j).scope);
    EXPECT_TRUE(subset(s.vars, both));
  }
  // The B layer keeps the two heaviest links of {B,C,D,E,F}.
  for (auto [i, j] : {std::pair<std::size_t, std::size_t>{0, 1}, {0, 2}}) {
    const auto e = g.edge_between(i, j);
    ASSERT_TRUE(e.has_value());
    EXPECT_TRUE(std::ranges::binary_search(g.sepset(*e).vars, B));
  }
  // {B,C,D,E,F} and {A,B,C,D} share everything they have in common.
  EXPECT_EQ(g.sepset(*g.edge_between(0, 1)).vars, (std::vector<VarId>{B, C, D}));
}

TEST(Ltrip, SingleSharedVariable) {
  const auto g = ltrip({over({A, B}), over({B, C})});
  ASSERT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.sepset(0).vars, std::vector<VarId>{B});
}

TEST(Ltrip, HammingSepsetIsNotTheFullIntersection) {
  PuzzleSpec spec;
  spec.kind = PuzzleKind::Hamming74;
  spec.received = "1110010";
  spec.flip_prob = 0.1;
  VariableRegistry reg;
  const auto g = hamming_graph(spec, &reg);
  const VarId b1 = *reg.find("B1"), b3 = *reg.find("B3");
  // Parity clusters {B5,B1,B2,B3} and {B7,B1,B3,B4} share B1 and B3 but only
  // B1 crosses their edge; B3 travels through {B6,B2,B3,B4}.
  std::optional<std::size_t> edge;
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto& s = g.sepset(e);
    const auto& ci = g.cluster(s.i).scope;
    const auto& cj = g.cluster(s.j).scope;
    if (ci.size() == 4 && cj.size() == 4 && std::ranges::binary_search(ci, *reg.find("B5")) &&
        std::ranges::binary_search(cj, *reg.find("B7")))
      edge = e;
  }
  ASSERT_TRUE(edge.has_value());
  EXPECT_EQ(g.sepset(*edge).vars, std::vector<VarId>{b1});
  EXPECT_FALSE(std::ranges::binary_search(g.sepset(*edge).vars, b3));
  EXPECT_TRUE(validate_rip(g).empty());
  EXPECT_EQ(g.cluster_count(), 10u);
}

TEST(Ltrip, RandomClusterSetsSatisfyRip) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> count(1, 10), width(1, 5), pick(0, 9);
  for (int t = 0; t < 300; ++t) {
    std::vector<SparseFactor> fs;
    for (int k = count(rng); k > 0; --k) {
      std::set<VarId> s;
      for (int w = width(rng); w > 0; --w) s.insert(var(static_cast<std::uint32_t>(pick(rng))));
      fs.push_back(over({s.begin(), s.end()}));
    }
    fs = absorb_subsets(fs);
    const auto g = ltrip(fs);
    EXPECT_TRUE(validate_rip(g).empty());
    EXPECT_EQ(graph_to_json(g), graph_to_json(ltrip(fs)));
  }
}

TEST(Bethe, HubsAndStars) {
  const auto single = bethe({over({A})});
  EXPECT_EQ(single.cluster_count(), 2u);
  EXPECT_EQ(single.edge_count(), 1u);

  const auto star = bethe({over({A, B}), over({A, C}), over({A, D})});
  // Hubs follow the factors in ascending variable order: A is cluster 3.
  EXPECT_EQ(star.degree(3), 3u);
  EXPECT_EQ(star.cluster(3).scope, std::vector<VarId>{A});
  EXPECT_EQ(star.edge_count(), 6u);
  EXPECT_TRUE(validate_rip(star).empty());
}

TEST(Bethe, EdgeCountIsTotalOccurrences) {
  std::mt19937 rng(9);
  std::uniform_int_distribution<int> count(1, 8), width(1, 4), pick(0, 7);
  for (int t = 0; t < 100; ++t) {
    std::vector<SparseFactor> fs;
    std::size_t occurrences = 0;
    for (int k = count(rng); k > 0; --k) {
      std::set<VarId> s;
      for (int w = width(rng); w > 0; --w) s.insert(var(static_cast<std::uint32_t>(pick(rng))));
      occurrences += s.size();
      fs.push_back(over({s.begin(), s.end()}));
    }
    const auto g = bethe(fs);
    EXPECT_EQ(g.edge_count(), occurrences);
    EXPECT_TRUE(validate_rip(g).empty());
  }
}

TEST(ValidateRip, DetectsTwoPathsForOneVariable) {
  ClusterGraph g;
  g.add_cluster(over({B, E, G}));
  g.add_cluster(over({E, D, G}));
  g.add_cluster(over({B, E, D}));
  g.add_edge(0, 1, {G});
  g.add_edge(1, 2, {E, D});
  g.add_edge(0, 2, {B, E});
  EXPECT_TRUE(validate_rip(g).empty());
  g.add_to_sepset(0, 1, E);
  const auto violations = validate_rip(g);
  ASSERT_EQ(violations.size(), 1u);
  EXPECT_EQ(violations[0].variable, E);
}

TEST(ValidateRip, DetectsDisconnectedOccurrences) {
  ClusterGraph g;
  g.add_cluster(over({A, B}));
  g.add_cluster(over({B, C}));
  g.add_cluster(over({A, C}));
  g.add_edge(0, 1, {B});
  g.add_edge(1, 2, {C});
  const auto violations = validate_rip(g);
  ASSERT_EQ(violations.size(), 1u);
  EXPECT_EQ(violations[0].variable, A);
}

TEST(IsTree, Shapes) {
  ClusterGraph chain;
  for (auto s : {std::vector<VarId>{A, B}, {B, C}, {C, D}}) chain.add_cluster(over(s));
  chain.add_edge(0, 1, {B});
  chain.add_edge(1, 2, {C});
  EXPECT_TRUE(is_tree(chain));

  ClusterGraph forest = chain;
  forest.add_cluster(over({E}));
  EXPECT_TRUE(is_tree(forest));
  ClusterGraph loop;
  for (auto s : {std::vector<VarId>{A, B}, {B, C}, {A, C}}) loop.add_cluster(over(s));
  loop.add_edge(0, 1, {B});
  loop.add_edge(1, 2, {C});
  loop.add_edge(0, 2, {A});
  EXPECT_FALSE(is_tree(loop));

  ClusterGraph single;
  single.add_cluster(over({A}));
  EXPECT_TRUE(is_tree(single));
}

TEST(ClusterGraph, RejectsBadEdges) {
  ClusterGraph g;
  g.add_cluster(over({A}));
  g.add_cluster(over({A}));
  EXPECT_THROW(g.add_edge(0, 0, {A}), Error);
  g.add_edge(0, 1, {A});
  EXPECT_THROW(g.add_edge(1, 0, {A}), Error);
}

TEST(GraphJson, Layout) {
  const auto j = graph_to_json(ltrip({over({A, B}), over({B, C})}));
  ASSERT_EQ(j["clusters"].size(), 2u);
  EXPECT_EQ(j["sepsets"][0]["vars"], nlohmann::json::array({1}));
  EXPECT_EQ(j["sepsets"][0]["i"], 0);
}

}  // namespace
