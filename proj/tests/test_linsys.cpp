#include <gtest/gtest.h>

#include "farkas/hardness.hpp"
#include "farkas/linsys.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace farkas;

TEST(FarkasSystem, D1) {
  auto fs = build_farkas_system(fixtures::d1());
  ASSERT_EQ(fs.row_count(), 2u);
  ASSERT_EQ(fs.col_count(), 2u);
  ASSERT_EQ(fs.a[0].size(), 2u);
  EXPECT_EQ(fs.a[0][0].value, Rational(1));
  EXPECT_EQ(fs.a[0][1].col, 1u);
  EXPECT_EQ(fs.a[0][1].value, Rational(-1, 2));
  ASSERT_EQ(fs.a[1].size(), 1u);
  EXPECT_EQ(fs.a[1][0].col, 1u);
  EXPECT_EQ(fs.a[1][0].value, Rational(1));
  EXPECT_EQ(fs.b, (std::vector<Rational>{Rational(3, 10), Rational(2, 5)}));
  EXPECT_EQ(fs.delta0, (std::vector<Rational>{Rational(1), Rational(0)}));
}

TEST(FarkasSystem, SelfLoop) {
  auto m = parse_model("dtmc\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n0 - 0 1/2\n0 - 1 1/2\n");
  auto fs = build_farkas_system(m);
  ASSERT_EQ(fs.a[0].size(), 1u);
  EXPECT_EQ(fs.a[0][0].value, Rational(1, 2));
  EXPECT_EQ(fs.b[0], Rational(1, 2));
}

TEST(FarkasSystem, SureGoal) {
  auto fs = build_farkas_system(fixtures::sure_goal());
  EXPECT_EQ(fs.a[0][0].value, Rational(1));
  EXPECT_EQ(fs.b[0], Rational(1));
}

TEST(FarkasSystem, RowSumsMatchExitProbability) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto m = random_model(seed, 8, 3, 3);
    auto fs = build_farkas_system(m);
    for (std::size_t r = 0; r < fs.row_count(); ++r) {
      Rational sum(0);
      for (const auto& e : fs.a[r]) sum += e.value;
      auto [s, a] = fs.rows[r];
      EXPECT_EQ(sum, m.probability(s, a, m.goal()) + m.probability(s, a, m.fail()));
      EXPECT_GE(fs.b[r], 0);
    }
  }
}

TEST(ReachProbabilities, Examples) {
  EXPECT_EQ(reach_probabilities(fixtures::d1(), Direction::min),
            (std::vector<Rational>{Rational(1, 2), Rational(2, 5)}));
  EXPECT_EQ(reach_probabilities(fixtures::sure_goal(), Direction::max), std::vector<Rational>{Rational(1)});
  EXPECT_EQ(reach_probabilities(fixtures::coin_choice(), Direction::min), std::vector<Rational>{Rational(0)});
  EXPECT_EQ(reach_probabilities(fixtures::coin_choice(), Direction::max), std::vector<Rational>{Rational(1)});
}

TEST(ReachProbabilities, RejectsUnvalidated) {
  auto trap = parse_model("dtmc\nstates: 4\ninitial: 0\ngoal: 1\nfail: 2\n0 - 3 1/2\n0 - 1 1/2\n3 - 3 1\n");
  EXPECT_THROW(reach_probabilities(trap, Direction::min), ModelError);
}

TEST(ReachProbabilities, CyclicMdpAgreesWithLpAndValueIteration) {
  auto m = fixtures::cyclic_mdp();
  for (auto dir : {Direction::min, Direction::max}) {
    auto pi = reach_probabilities(m, dir);
    auto lp = reach_probabilities_lp<Rational>(m, dir);
    EXPECT_EQ(pi, lp);
    auto vi = oracles::value_iteration(m, dir);
    for (std::size_t i = 0; i < pi.size(); ++i) EXPECT_NEAR(pi[i].get_d(), vi[i], 1e-8);
  }
}

TEST(ReachProbabilities, RandomCorpusAgreement) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    auto m = random_model(seed, 2 + seed % 14, 1 + seed % 3, 3);
    for (auto dir : {Direction::min, Direction::max}) {
      auto exact = reach_probabilities(m, dir);
      auto vi = oracles::value_iteration(m, dir);
      auto lp = reach_probabilities_lp<double>(m, dir);
      for (std::size_t i = 0; i < exact.size(); ++i) {
        EXPECT_NEAR(exact[i].get_d(), vi[i], 1e-8);
        EXPECT_NEAR(exact[i].get_d(), lp[i], 1e-8);
        EXPECT_GE(exact[i], 0);
        EXPECT_LE(exact[i], 1);
      }
    }
  }
}

TEST(ReachProbabilities, DtmcMinEqualsMax) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto m = random_model(seed, 10, 1, 3);
    EXPECT_EQ(reach_probabilities_lp<Rational>(m, Direction::min),
              reach_probabilities_lp<Rational>(m, Direction::max));
  }
}

// Any z with Az <= b lies below Pr^min; any z with Az >= b lies above Pr^max.
TEST(ReachProbabilities, Monotonicity) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> slack(0, 20);
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto m = random_model(seed, 2 + seed % 14, 1 + seed % 3, 3);
    auto fs = build_farkas_system(m);
    for (auto dir : {Direction::min, Direction::max}) {
      auto pr = reach_probabilities(m, dir);
      auto z = pr;
      for (auto& v : z) {
        Rational d(slack(rng), 100);
        v = dir == Direction::min ? Rational(v - d) : Rational(v + d);
      }
      bool feasible = true;
      for (std::size_t r = 0; r < fs.row_count(); ++r) {
        Rational lhs(0);
        for (const auto& e : fs.a[r]) lhs += e.value * z[e.col];
        if (dir == Direction::min ? lhs > fs.b[r] : lhs < fs.b[r]) feasible = false;
      }
      if (!feasible) continue;
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (dir == Direction::min) {
          EXPECT_LE(z[i], pr[i]);
        } else {
          EXPECT_GE(z[i], pr[i]);
        }
      }
    }
  }
}

TEST(ReachProbabilities, AlmostSureTermination) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto m = random_model(seed, 12, 3, 3);
    // Pr^min of reaching goal or fail: merge fail into goal.
    MdpBuilder b(m.kind(), m.state_count(), m.initial(), m.goal(), m.fail());
    for (std::size_t s : m.transient_states()) {
      for (const auto& c : m.choices(s)) {
        Rational to_target(0);
        for (const auto& tr : c.transitions) {
          if (tr.target == m.fail() || tr.target == m.goal()) {
            to_target += tr.probability;
          } else {
            b.add(s, c.action, tr.target, tr.probability);
          }
        }
        if (to_target > 0) b.add(s, c.action, m.goal(), to_target);
      }
    }
    auto merged = b.build();
    for (double v : oracles::value_iteration(merged, Direction::min)) EXPECT_GE(v, 1 - 1e-9);
  }
}
