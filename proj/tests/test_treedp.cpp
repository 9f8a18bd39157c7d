#include <gtest/gtest.h>

#include "farkas/hardness.hpp"
#include "farkas/treedp.hpp"
#include "fixtures.hpp"

using namespace farkas;

namespace {

// s0 spreads (2/5, 3/10, 1/5, 1/10) over goal and three leaves.
ReachMdp four_way() {
  return parse_model(
      "dtmc\nstates: 6\ninitial: 0\ngoal: 4\nfail: 5\n"
      "0 - 4 2/5\n0 - 1 3/10\n0 - 2 1/5\n0 - 3 1/10\n"
      "1 - 4 1\n2 - 5 1\n3 - 4 1/2\n3 - 5 1/2\n");
}

std::vector<Rational> row(std::initializer_list<Rational> xs) { return xs; }

}  // namespace

TEST(TreeShape, Examples) {
  EXPECT_TRUE(is_tree_shaped(fixtures::d1()));
  EXPECT_TRUE(is_tree_shaped(fixtures::small_tree()));
  EXPECT_TRUE(is_tree_shaped(fixtures::sure_goal()));
  auto shared = parse_model(
      "dtmc\nstates: 6\ninitial: 0\ngoal: 4\nfail: 5\n"
      "0 - 1 1/2\n0 - 2 1/2\n1 - 3 1\n2 - 3 1\n3 - 4 1\n");
  EXPECT_FALSE(is_tree_shaped(shared));
  EXPECT_THROW(is_tree_shaped(fixtures::coin_choice()), Unsupported);
}

TEST(Binarize, WorkedExpansion) {
  auto [b, map] = binarize(four_way());
  ASSERT_EQ(b.state_count(), 8u);
  ASSERT_EQ(map.fresh_states[0].size(), 2u);
  const std::size_t u1 = map.fresh_states[0][0], u2 = map.fresh_states[0][1];
  EXPECT_EQ(b.probability(0, 0, 4), Rational(2, 5));
  EXPECT_EQ(b.probability(0, 0, u1), Rational(3, 5));
  EXPECT_EQ(b.probability(u1, 0, 1), Rational(1, 2));
  EXPECT_EQ(b.probability(u1, 0, u2), Rational(1, 2));
  EXPECT_EQ(b.probability(u2, 0, 2), Rational(2, 3));
  EXPECT_EQ(b.probability(u2, 0, 3), Rational(1, 3));
  EXPECT_EQ(b.choice(0, 0).transitions.size(), 2u);
  EXPECT_EQ(map.origin[0], (std::pair<std::size_t, std::size_t>{0, 1}));
  EXPECT_EQ(initial_probability(b, Direction::min), initial_probability(four_way(), Direction::min));
}

TEST(Binarize, SmallStatesUnchanged) {
  auto m = fixtures::small_tree();
  auto [b, map] = binarize(m);
  EXPECT_EQ(b.state_count(), m.state_count());
  auto d = fixtures::d1();
  auto [bd, mapd] = binarize(d);
  EXPECT_EQ(bd.state_count(), 5u);  // s0 has three successors
  EXPECT_EQ(bd.choice(1, 0).transitions, d.choice(1, 0).transitions);
  EXPECT_THROW(binarize(d, std::vector<std::size_t>{0, 1, 2, 3}), Error);
}

TEST(Binarize, PreservesProbabilityOnRandomTrees) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto m = random_tree_dtmc(seed, 1 + seed % 40);
    auto [b, map] = binarize(m);
    EXPECT_EQ(initial_probability(b, Direction::min), initial_probability(m, Direction::min));
    EXPECT_LE(b.state_count(), m.state_count() + m.transition_count());
    for (std::size_t s = 0; s < b.state_count(); ++s) {
      if (b.is_terminal(s)) continue;
      EXPECT_LE(b.choice(s, 0).transitions.size(), 2u);
      if (map.is_fresh(s)) EXPECT_EQ(b.probability(s, 0, b.goal()), 0);
    }
  }
}

TEST(DpTables, Examples) {
  auto d = fixtures::d1();
  auto [b, map] = binarize(d);
  auto t = dp_tables(b, map);
  EXPECT_EQ(t.l[1], row({Rational(0), Rational(2, 5)}));
  EXPECT_EQ(t.l[d.goal()], row({Rational(1)}));
  EXPECT_EQ(t.l[0], row({Rational(0), Rational(3, 10), Rational(1, 2)}));
  // The fresh state below s0 is uncounted: its table starts at l(0) = 0.
  const std::size_t u = map.fresh_states[0][0];
  EXPECT_FALSE(t.counted[u]);
  EXPECT_EQ(t.l[u], row({Rational(0), Rational(2, 7)}));
  EXPECT_THROW(dp_tables(four_way(), std::vector<bool>(6, false)), Unsupported);
}

TEST(TreeWitness, Examples) {
  auto chain = tree_witness_with_table(fixtures::small_tree(), Rational(2, 5));
  EXPECT_EQ(chain.k, 2u);
  EXPECT_EQ(chain.l_root, row({Rational(0), Rational(0), Rational(2, 5), Rational(7, 10)}));
  EXPECT_EQ(chain.witness.subsystem.parent_state, (std::vector<std::size_t>{0, 1, 3, 4}));
  auto full = tree_minimal_witness(fixtures::small_tree(), Rational(7, 10));
  EXPECT_EQ(full.state_count, 3u);
  EXPECT_EQ(full.probability, Rational(7, 10));
  auto one = tree_minimal_witness(fixtures::d1(), Rational(3, 10));
  EXPECT_EQ(one.state_count, 1u);
  EXPECT_TRUE(one.optimal);
  EXPECT_THROW(tree_minimal_witness(fixtures::d1(), Rational(3, 5)), PropertyFalse);
  EXPECT_THROW(tree_minimal_witness(fixtures::coin_choice(), Rational(0)), Unsupported);
}

TEST(TreeWitness, TablesAreMonotoneAndComplete) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto m = random_tree_dtmc(seed, 1 + seed % 30);
    auto [b, map] = binarize(m);
    auto t = dp_tables(b, map);
    for (std::size_t q = 0; q < b.state_count(); ++q) {
      for (std::size_t i = 1; i < t.l[q].size(); ++i) EXPECT_LE(t.l[q][i - 1], t.l[q][i]);
    }
    EXPECT_EQ(t.l[0].back(), initial_probability(m, Direction::min));
    EXPECT_EQ(t.size[0], m.transient_states().size());
  }
}

TEST(TreeWitness, MatchesBruteForce) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto m = random_tree_dtmc(seed, 1 + seed % 12);
    const Rational pr = initial_probability(m, Direction::min);
    WitnessOracle oracle(m, Direction::min);
    for (const Rational& lambda : {pr, Rational(pr / 2), Rational(pr * 9 / 10)}) {
      auto w = tree_minimal_witness(m, lambda);
      EXPECT_EQ(w.state_count, oracle.min_witness(lambda).value()) << "seed " << seed;
      EXPECT_GE(w.probability, lambda);
    }
  }
}

TEST(TreeWitness, LargeTreesReverify) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto m = random_tree_dtmc(1000 + seed, 40 * seed);
    const Rational pr = initial_probability(m, Direction::min);
    auto res = tree_witness_with_table(m, pr * 3 / 4);
    EXPECT_EQ(initial_probability(res.witness.subsystem.mdp, Direction::min), res.l_root[res.k]);
    EXPECT_EQ(res.witness.subsystem.state_count(), res.k);
  }
}
