#include <gtest/gtest.h>

#include "farkas/linsys.hpp"
#include "farkas/model.hpp"
#include "fixtures.hpp"

using namespace farkas;

TEST(ParseModel, D1) {
  auto m = fixtures::d1();
  EXPECT_EQ(m.kind(), ModelKind::dtmc);
  EXPECT_EQ(m.state_count(), 4u);
  EXPECT_EQ(m.initial(), 0u);
  EXPECT_EQ(m.goal(), 2u);
  EXPECT_EQ(m.fail(), 3u);
  EXPECT_EQ(m.probability(0, 0, 1), Rational(1, 2));
  EXPECT_EQ(m.probability(0, 0, 2), Rational(3, 10));
  EXPECT_EQ(m.probability(1, 0, 3), Rational(3, 5));
  EXPECT_TRUE(m.is_dtmc());
}

TEST(ParseModel, DecimalsAreExact) {
  auto m = parse_model("mdp\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n0 a 1 0.3\n0 a 2 0.7\n");
  EXPECT_EQ(m.probability(0, 0, 1), Rational(3, 10));
}

TEST(ParseModel, NonStochasticRow) {
  try {
    parse_model("mdp\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n0 a 1 0.5\n0 a 2 0.4\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("non-stochastic row"), std::string::npos);
    EXPECT_EQ(e.line(), 6u);
  }
}

TEST(ParseModel, GoalNotAbsorbing) {
  try {
    parse_model("dtmc\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n0 - 1 1\n1 - 0 1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("goal not absorbing"), std::string::npos);
    EXPECT_EQ(e.line(), 7u);
  }
}

TEST(ParseModel, Errors) {
  EXPECT_THROW(parse_model("mdp\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n0 a 1 1/2\n0 a 1 1/2\n"),
               ParseError);
  EXPECT_THROW(parse_model("mdp\nstates: 3\ninitial: 1\ngoal: 1\nfail: 2\n0 a 1 1\n"), ParseError);
  EXPECT_THROW(parse_model("dtmc\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n0 a 1 1\n"), ParseError);
  EXPECT_THROW(parse_model("markov\n"), ParseError);
  EXPECT_THROW(parse_model("mdp\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n0 a 1 x\n"), ParseError);
  EXPECT_THROW(parse_model("mdp\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n"), ParseError);
}

TEST(ParseModel, CommentsAndGoalSelfLoops) {
  auto m = parse_model(
      "# header comment\ndtmc\nstates: 3  # three\ninitial: 0\ngoal: 1\nfail: 2\n"
      "0 - 1 1 # edge\n1 - 1 1\n2 - 2 1\n");
  EXPECT_EQ(m.transition_count(), 1u);
}

TEST(SerializeModel, RoundTrip) {
  for (const auto& m : {fixtures::d1(), fixtures::cyclic_mdp(), fixtures::coin_choice()}) {
    EXPECT_EQ(parse_model(serialize_model(m)), m);
  }
}

TEST(Validate, Examples) {
  EXPECT_TRUE(validate(fixtures::d1()).ok);
  EXPECT_TRUE(validate(fixtures::cyclic_mdp()).ok);
  auto trap = parse_model("dtmc\nstates: 4\ninitial: 0\ngoal: 1\nfail: 2\n0 - 3 1/2\n0 - 1 1/2\n3 - 3 1\n");
  auto report = validate(trap);
  ASSERT_FALSE(report.ok);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].check, "avoids-goal-and-fail");
  EXPECT_EQ(report.violations[0].states, std::vector<std::size_t>{3});
}

TEST(Validate, Unreachable) {
  auto m = parse_model("dtmc\nstates: 4\ninitial: 0\ngoal: 1\nfail: 2\n0 - 1 1\n3 - 1 1\n");
  auto report = validate(m);
  ASSERT_FALSE(report.ok);
  EXPECT_EQ(report.violations[0].check, "unreachable");
  EXPECT_EQ(report.violations[0].states, std::vector<std::size_t>{3});
}

TEST(PruneUnreachable, IsolatedState) {
  std::string text = fixtures::d1_text;
  text.replace(text.find("states: 4"), 9, "states: 5");
  text += "4 - 2 1\n";
  auto m = parse_model(text);
  auto pruned = prune_unreachable(m);
  EXPECT_EQ(pruned, fixtures::d1());
  EXPECT_EQ(prune_unreachable(fixtures::d1()), fixtures::d1());
}

TEST(Restrict, D1InitialOnly) {
  auto m = fixtures::d1();
  std::vector<std::size_t> r{0};
  auto sub = restrict_states(m, r);
  EXPECT_EQ(sub.mdp.state_count(), 3u);
  EXPECT_EQ(sub.state_count(), 1u);
  EXPECT_EQ(sub.mdp.probability(0, 0, sub.mdp.goal()), Rational(3, 10));
  EXPECT_EQ(sub.mdp.probability(0, 0, sub.mdp.fail()), Rational(7, 10));
  EXPECT_EQ(sub.parent_state, (std::vector<std::size_t>{0, 2, 3}));
}

TEST(Restrict, FullSystemUnchanged) {
  auto m = fixtures::d1();
  std::vector<std::size_t> r{0, 1};
  EXPECT_EQ(restrict_states(m, r).mdp, m);
}

TEST(Restrict, PairGranularity) {
  auto m = fixtures::cyclic_mdp();
  // Keep (0,b) and (1,a) only: 0's action a goes to fail entirely.
  std::vector<StateAction> r{{0, 1}, {1, 0}};
  auto sub = restrict(m, r);
  EXPECT_EQ(sub.state_count(), 2u);
  const auto& s = sub.mdp;
  EXPECT_EQ(s.probability(0, 0, s.fail()), Rational(1));
  EXPECT_EQ(s.probability(0, 1, s.goal()), Rational(1, 4));
  EXPECT_EQ(s.probability(0, 1, 1), Rational(3, 4));
  EXPECT_EQ(s.probability(1, 0, 0), Rational(1, 3));
  EXPECT_EQ(s.choices(0).size(), 2u);
}

TEST(Restrict, InitialAlwaysRetained) {
  auto m = fixtures::d1();
  auto sub = restrict(m, std::vector<StateAction>{});
  EXPECT_EQ(sub.mdp.state_count(), 3u);
  EXPECT_EQ(sub.mdp.probability(0, 0, sub.mdp.fail()), Rational(1));
  EXPECT_EQ(initial_probability(sub.mdp, Direction::max), Rational(0));
}

TEST(SubsystemFormat, RoundTrip) {
  auto m = fixtures::cyclic_mdp();
  std::vector<StateAction> r{{0, 1}, {1, 0}};
  auto sub = restrict(m, r);
  auto back = parse_subsystem(serialize_subsystem(sub, m), m);
  EXPECT_EQ(back.mdp, sub.mdp);
  EXPECT_EQ(back.kept_pairs, sub.kept_pairs);
  EXPECT_EQ(back.parent_state, sub.parent_state);
}

TEST(InducedDtmc, Examples) {
  auto m = fixtures::d1();
  auto id = MRScheduler::deterministic(m, std::vector<std::size_t>(4, 0));
  EXPECT_EQ(induced_dtmc(m, id), m);

  auto c = fixtures::coin_choice();
  MRScheduler half;
  half.weights = {{Rational(1, 2), Rational(1, 2)}, {}, {}};
  auto d = induced_dtmc(c, half);
  EXPECT_EQ(d.probability(0, 0, 1), Rational(1, 2));
  EXPECT_TRUE(d.is_dtmc());

  MRScheduler bad;
  bad.weights = {{Rational(1)}, {}, {}};
  EXPECT_THROW(induced_dtmc(c, bad), ModelError);
}

TEST(InducedDtmc, RowPerState) {
  auto m = fixtures::cyclic_mdp();
  auto d = induced_dtmc(m, MRScheduler::deterministic(m, std::vector<std::size_t>{1, 0, 1, 0, 0}));
  for (std::size_t s : d.transient_states()) EXPECT_EQ(d.choices(s).size(), 1u);
}

TEST(SwapGoalFail, Roles) {
  auto m = swap_goal_fail(fixtures::d1());
  EXPECT_EQ(m.goal(), 3u);
  EXPECT_EQ(m.fail(), 2u);
}

TEST(Property, Parse) {
  auto p = parse_property("min>=2/5");
  EXPECT_EQ(p.direction, Direction::min);
  EXPECT_EQ(p.relation, Relation::ge);
  EXPECT_EQ(p.lambda, Rational(2, 5));
  EXPECT_EQ(parse_property("max<0.3").lambda, Rational(3, 10));
  EXPECT_EQ(parse_property("max<0.3").relation, Relation::lt);
  EXPECT_THROW(parse_property("avg>=1/2"), Error);
  EXPECT_THROW(parse_property("min>=3/2"), Error);
  EXPECT_THROW(parse_property("min=1/2"), Error);
}
