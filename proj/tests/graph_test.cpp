#include <gtest/gtest.h>

#include "gnnbias/error.hpp"
#include "gnnbias/graph.hpp"
#include "support.hpp"

using namespace gnnbias;
using namespace testsupport;

TEST(Graph, SymmetrizesAndMergesDuplicateEdges) {
  const std::vector<Edge> edges{{0, 1}, {1, 0}, {2, 1}};
  const Graph g({0, 1, 2}, edges);
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(1, 0));
  EXPECT_TRUE(g.has_edge(1, 2));
  EXPECT_FALSE(g.has_edge(0, 2));
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1}, {1, 2}}));
  EXPECT_EQ(g.degree(1), 2u);
  EXPECT_EQ(g.color_bound(), 3u);
}

TEST(Graph, RejectsSelfLoopsAndBadEndpoints) {
  const std::vector<Edge> loop{{1, 1}};
  EXPECT_THROW(Graph({0, 0}, loop), InvalidArgument);
  const std::vector<Edge> far{{0, 5}};
  EXPECT_THROW(Graph({0, 0}, far), InvalidArgument);
}

TEST(Graph, LabelMustBeBinary) {
  Graph g({0}, {});
  EXPECT_THROW(g.set_label(2), InvalidArgument);
  g.set_label(1);
  EXPECT_EQ(g.label(), 1);
  EXPECT_THROW(g.set_anchor(std::vector<NodeId>{3}), InvalidArgument);
}

TEST(Graph, CheckPaletteFlagsOutOfRangeColors) {
  const Graph g({0, 4}, {});
  EXPECT_NO_THROW(check_palette(g, 5));
  EXPECT_THROW(check_palette(g, 4), InvalidArgument);
}

TEST(Graph, PermutationPreservesStructure) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = random_graph(rng, uniform(rng, 1, 9), 4, 0.4);
    const auto perm = random_permutation(rng, g.num_nodes());
    const Graph h = g.permuted(perm);
    ASSERT_EQ(h.num_edges(), g.num_edges());
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
      EXPECT_EQ(h.color(perm[i]), g.color(i));
      for (NodeId j = 0; j < g.num_nodes(); ++j) EXPECT_EQ(h.has_edge(perm[i], perm[j]), g.has_edge(i, j));
    }
  }
}

TEST(Grid, LatticeHasFourNeighbourhood) {
  const std::vector<Color> palette{0, 1, 2, 3};
  const Graph g = grid_graph(3, 4, palette, 5);
  ASSERT_EQ(g.num_nodes(), 12u);
  // 3 rows of 3 horizontal edges plus 2 rows of 4 vertical ones.
  EXPECT_EQ(g.num_edges(), 17u);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(0, 4));
  EXPECT_FALSE(g.has_edge(3, 4));  // row wrap is not an edge
  EXPECT_EQ(g.degree(5), 4u);
  EXPECT_EQ(g.degree(0), 2u);
  for (Color c : g.colors()) EXPECT_LT(c, 4u);
}

TEST(Grid, SameSeedSameColors) {
  const std::vector<Color> palette{0, 1, 2};
  EXPECT_EQ(grid_graph(5, 5, palette, 9), grid_graph(5, 5, palette, 9));
  EXPECT_NE(grid_graph(5, 5, palette, 9).colors(), grid_graph(5, 5, palette, 10).colors());
}

TEST(Grid, RejectsEmptyInputs) {
  const std::vector<Color> palette{0};
  EXPECT_THROW(grid_graph(0, 3, palette, 0), InvalidArgument);
  EXPECT_THROW(grid_graph(2, 2, std::vector<Color>{}, 0), InvalidArgument);
}

TEST(Pattern, ValidatesColorsAndConnectivity) {
  EXPECT_THROW(Pattern::chain({4, 4, 5}), InvalidArgument);
  EXPECT_THROW(Pattern(PatternKind::chain, {1, 2, 3}, {{0, 1}}), InvalidArgument);
  EXPECT_THROW(Pattern::chain({}), InvalidArgument);
  const Pattern chain = Pattern::chain({4, 5, 6});
  EXPECT_EQ(chain.center(), 1u);
  EXPECT_TRUE(chain.has_edge(1, 0));
  EXPECT_FALSE(chain.has_edge(0, 2));
  const Pattern star = Pattern::star({4, 5, 6, 7});
  EXPECT_EQ(star.center(), 0u);
  EXPECT_FALSE(Pattern::chain({1, 2, 3, 4}).center().has_value());
}

TEST(Occurrence, HandBuiltPartitions) {
  const Pattern p = Pattern::chain({4, 5, 6});
  // 4-5-6 path: connected occurrence.
  const std::vector<Edge> path{{0, 1}, {1, 2}};
  EXPECT_EQ(classify_partition(Graph({4, 5, 6}, path), p), Partition::d1);
  // Colors present but 5 is not adjacent to 6.
  const std::vector<Edge> broken{{0, 1}, {1, 3}, {3, 2}};
  EXPECT_EQ(classify_partition(Graph({4, 5, 6, 0}, broken), p), Partition::dperp);
  // A color is missing.
  EXPECT_EQ(classify_partition(Graph({4, 5, 0}, path), p), Partition::d0);
  // Extra edges never hurt a non-induced match.
  const std::vector<Edge> tri{{0, 1}, {1, 2}, {0, 2}};
  EXPECT_EQ(classify_partition(Graph({4, 5, 6}, tri), p), Partition::d1);
}

TEST(Occurrence, WitnessesMatchBruteForce) {
  Rng rng(21);
  const Pattern p = Pattern::chain({0, 1, 2});
  for (int trial = 0; trial < 200; ++trial) {
    const Graph g = random_graph(rng, uniform(rng, 1, 10), 4, 0.35);
    const auto tuples = brute_tuples(g, p.colors());
    const Occurrence occ = occurs(g, p);
    ASSERT_EQ(occ.occurs, !tuples.empty());
    ASSERT_EQ(occ.total, tuples.size());
    ASSERT_EQ(occ.witnesses, tuples) << "witnesses must be the lexicographic list";

    std::optional<Embedding> first_connected;
    for (const auto& t : tuples) {
      if (tuple_has_edges(g, t, p.edges())) {
        first_connected = t;
        break;
      }
    }
    ASSERT_EQ(connected_embedding(g, p), first_connected);

    const Partition expected =
        tuples.empty() ? Partition::d0 : (first_connected ? Partition::d1 : Partition::dperp);
    EXPECT_EQ(classify_partition(g, p), expected);
  }
}

TEST(Occurrence, WitnessCapTruncatesButCountsEverything) {
  // Five nodes of color 0 and five of color 1, no edges: 25 tuples.
  std::vector<Color> colors(10);
  for (std::size_t i = 0; i < 10; ++i) colors[i] = i < 5 ? 0 : 1;
  const Graph g(colors, {});
  const Pattern p = Pattern::chain({0, 1});
  const Occurrence occ = occurs(g, p, 7);
  EXPECT_TRUE(occ.occurs);
  EXPECT_EQ(occ.total, 25u);
  ASSERT_EQ(occ.witnesses.size(), 7u);
  EXPECT_EQ(occ.witnesses.front(), (Embedding{0, 5}));
}

TEST(Occurrence, PartitionIsPermutationInvariant) {
  Rng rng(31);
  const Pattern p = Pattern::star({0, 1, 2});
  for (int trial = 0; trial < 200; ++trial) {
    const Graph g = random_graph(rng, uniform(rng, 2, 9), 3, 0.3);
    const Graph h = g.permuted(random_permutation(rng, g.num_nodes()));
    EXPECT_EQ(classify_partition(g, p), classify_partition(h, p));
  }
}

TEST(Occurrence, AnchorCenterReadsPatternOrder) {
  const Pattern p = Pattern::chain({4, 5, 6});
  Graph g({0, 4, 5, 6}, std::vector<Edge>{{1, 2}, {2, 3}});
  EXPECT_FALSE(anchor_center(g, p).has_value());
  g.set_anchor(std::vector<NodeId>{1, 2, 3});
  EXPECT_EQ(anchor_center(g, p), 2u);
}
