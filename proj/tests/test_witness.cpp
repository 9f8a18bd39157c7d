#include <gtest/gtest.h>

#include "farkas/hardness.hpp"
#include "farkas/witness.hpp"
#include "fixtures.hpp"

using namespace farkas;

namespace {

PolytopeSpec min_spec(Rational l) { return {PolytopeFlavor::min_nonneg, std::move(l)}; }
PolytopeSpec max_spec(Rational l) { return {PolytopeFlavor::max, std::move(l)}; }

}  // namespace

TEST(Polytope, D1Membership) {
  auto m = fixtures::d1();
  auto fs = build_farkas_system(m);
  EXPECT_TRUE(polytope_contains(fs, min_spec(Rational(2, 5)), {Rational(1, 2), Rational(2, 5)}));
  EXPECT_FALSE(polytope_contains(fs, min_spec(Rational(2, 5)), {Rational(51, 100), Rational(2, 5)}));
  EXPECT_FALSE(polytope_contains(fs, min_spec(Rational(2, 5)), {Rational(1, 2), Rational(-1, 5)}));
  EXPECT_TRUE(polytope_contains(fs, max_spec(Rational(1, 2)), {Rational(1), Rational(1, 2)}));
  EXPECT_FALSE(polytope_contains(fs, max_spec(Rational(1, 2)), {Rational(1), Rational(0)}));
  EXPECT_THROW(polytope_contains(fs, max_spec(Rational(1, 2)), {Rational(1)}), DimensionMismatch);
}

TEST(WitnessFromPoint, D1) {
  auto m = fixtures::d1();
  auto w = witness_from_point(m, min_spec(Rational(2, 5)), {Rational(1, 2), Rational(2, 5)});
  EXPECT_EQ(w.state_count, 2u);
  EXPECT_EQ(w.probability, Rational(1, 2));

  // Only s0 in the support: goal is reached with 3/10.
  auto s = witness_from_point(m, min_spec(Rational(3, 10)), {Rational(3, 10), Rational(0)});
  EXPECT_EQ(s.state_count, 1u);
  EXPECT_EQ(s.probability, Rational(3, 10));

  EXPECT_THROW(witness_from_point(m, min_spec(Rational(2, 5)), {Rational(2, 5), Rational(0)}), PointNotInPolytope);
}

TEST(KBound, Values) {
  auto m = fixtures::d1();
  EXPECT_EQ(k_bound(m, min_spec(Rational(1, 2))), 1);
  // Expected visits: s0 once, state 1 half a time.
  EXPECT_EQ(k_bound(m, max_spec(Rational(1, 2))), Rational(3, 2));
  EXPECT_THROW(k_bound(m, max_spec(Rational(3, 4))), Infeasible);
  auto c = fixtures::cyclic_mdp();
  Rational k = k_bound(c, max_spec(Rational(0)));
  EXPECT_GE(k, 1);
}

TEST(QsHeuristic, D1) {
  auto m = fixtures::d1();
  auto w = qs_heuristic(m, min_spec(Rational(3, 10)), 3);
  EXPECT_EQ(w.state_count, 1u);
  EXPECT_EQ(w.iterate_support.size(), 3u);
  EXPECT_THROW(qs_heuristic(m, min_spec(Rational(51, 100)), 1), Infeasible);
  EXPECT_THROW(qs_heuristic(m, min_spec(Rational(1, 2)), 0), Error);
}

TEST(ExactMinimalWitness, D1) {
  auto m = fixtures::d1();
  auto a = exact_minimal_witness(m, min_spec(Rational(3, 10)));
  EXPECT_EQ(a.state_count, 1u);
  EXPECT_TRUE(a.optimal);
  auto b = exact_minimal_witness(m, min_spec(Rational(1, 2)));
  EXPECT_EQ(b.state_count, 2u);
  EXPECT_EQ(b.lower, 2u);
  EXPECT_EQ(b.upper, 2u);
  auto z = exact_minimal_witness(m, max_spec(Rational(0)));
  EXPECT_EQ(z.state_count, 1u);
}

TEST(ExactMinimalWitness, CoinChoiceKeepsOneAction) {
  auto m = fixtures::coin_choice();
  auto w = exact_minimal_witness(m, max_spec(Rational(1)));
  ASSERT_EQ(w.subsystem.kept_pairs.size(), 1u);
  EXPECT_EQ(m.choice(0, w.subsystem.kept_pairs[0].action).action, "a");
  EXPECT_EQ(w.probability, 1);
}

TEST(ExactMinimalWitness, MatchesBruteForceOnRandomModels) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto m = random_model(seed, 3 + seed % 6, 1 + seed % 3, 3);
    for (auto flavor : {PolytopeFlavor::min_nonneg, PolytopeFlavor::max}) {
      const Direction dir = direction_of(flavor);
      WitnessOracle oracle(m, dir);
      const Rational pr = reach_probabilities(m, dir)[build_farkas_system(m).initial_col];
      for (const Rational& lambda : {pr, Rational(pr * 2 / 3), Rational(pr / 4)}) {
        PolytopeSpec spec{flavor, lambda};
        auto w = exact_minimal_witness(m, spec);
        auto expected = oracle.min_witness(lambda);
        ASSERT_TRUE(expected.has_value());
        EXPECT_EQ(w.state_count, *expected) << "seed " << seed << " " << to_string(flavor) << " " << lambda;
        EXPECT_TRUE(w.optimal);
        EXPECT_GE(w.probability, lambda);
        EXPECT_GE(initial_probability(w.subsystem.mdp, dir), lambda);
        auto q = qs_heuristic(m, spec, 2);
        EXPECT_GE(q.state_count, w.state_count);
        EXPECT_GE(q.probability, lambda);
      }
    }
  }
}

TEST(ExactMinimalWitness, MaxFlavorPointsAreDeterministic) {
  for (std::uint64_t seed = 40; seed <= 55; ++seed) {
    auto m = random_model(seed, 6, 3, 3);
    auto fs = build_farkas_system(m);
    const Rational pr = reach_probabilities(m, Direction::max)[fs.initial_col];
    auto w = exact_minimal_witness(m, max_spec(pr / 2));
    std::vector<int> used(m.state_count(), 0);
    for (std::size_t r = 0; r < fs.row_count(); ++r) {
      if (sgn(w.point[r]) != 0) ++used[fs.rows[r].state];
    }
    for (int u : used) EXPECT_LE(u, 1);
    EXPECT_TRUE(polytope_contains(fs, max_spec(pr / 2), w.point));
  }
}

TEST(SupportCorrespondence, WitnessingSetsCarryPolytopePoints) {
  // Every witnessing state set admits a point supported inside it, and no
  // point exists inside a set that does not witness.
  for (std::uint64_t seed = 60; seed <= 75; ++seed) {
    auto m = random_model(seed, 5, 2, 3);
    auto fs = build_farkas_system(m);
    for (auto flavor : {PolytopeFlavor::min_nonneg, PolytopeFlavor::max}) {
      const Direction dir = direction_of(flavor);
      const Rational lambda = reach_probabilities(m, dir)[fs.initial_col] / 2;
      PolytopeSpec spec{flavor, lambda};
      WitnessOracle oracle(m, dir);
      const auto cols = m.transient_states();
      for (std::uint32_t mask = 0; mask < (1u << cols.size()); ++mask) {
        if (!(mask & 1u)) continue;
        auto states = oracle.states_of(mask);
        const bool witnesses = oracle.exact_value(mask) >= lambda;
        EXPECT_EQ(polytope_feasible_within(m, spec, coordinates_of_states(fs, spec, states)), witnesses)
            << "seed " << seed << " mask " << mask;
      }
    }
  }
}

TEST(ExactMinimalWitness, NodeLimitReportsBounds) {
  auto m = random_model(7, 12, 2, 3);
  const Rational pr = reach_probabilities(m, Direction::min)[0];
  auto w = exact_minimal_witness(m, min_spec(pr * 9 / 10), MilpOptions{0.0, 1});
  EXPECT_LE(w.lower, w.upper);
  EXPECT_EQ(w.upper, w.state_count);
  EXPECT_GE(w.lower, 1u);
  EXPECT_GE(w.probability, pr * 9 / 10);
  auto full = exact_minimal_witness(m, min_spec(pr * 9 / 10));
  EXPECT_TRUE(full.optimal);
  EXPECT_LE(w.lower, full.state_count);
  EXPECT_GE(w.upper, full.state_count);
}

TEST(ExportMilp, ParsesBackAndAcceptsTheOptimum) {
  auto m = fixtures::cyclic_mdp();
  for (auto spec : {min_spec(Rational(1, 5)), max_spec(Rational(1, 2))}) {
    const std::string text = export_milp(m, spec);
    EXPECT_NE(text.find("Subject To"), std::string::npos);
    auto file = parse_lp_file(text);
    auto fs = build_farkas_system(m);
    const std::size_t n = polytope_dimension(fs, spec);
    ASSERT_EQ(file.names.size(), 2 * n);
    EXPECT_EQ(file.binaries.size(), n);
    auto w = exact_minimal_witness(m, spec);
    // The optimal point with sigma = 1 on its support satisfies every row.
    std::vector<Rational> x(2 * n, Rational(0));
    for (std::size_t i = 0; i < n; ++i) {
      x[*file.index_of("x_" + std::to_string(i))] = w.point[i];
      x[*file.index_of("s_" + std::to_string(i))] = sgn(w.point[i]) != 0 ? 1 : 0;
    }
    Rational objective(0);
    for (std::size_t j = 0; j < x.size(); ++j) objective += file.lp.objective[j] * x[j];
    EXPECT_EQ(objective, Rational(static_cast<long>(detail::support_of(w.point).size())));
    for (const auto& row : file.lp.rows) {
      Rational lhs(0);
      for (const auto& [j, c] : row.coeffs) lhs += c * x[j];
      if (row.relation == RowRelation::le) EXPECT_LE(lhs, row.rhs);
      if (row.relation == RowRelation::ge) EXPECT_GE(lhs, row.rhs);
      if (row.relation == RowRelation::eq) EXPECT_EQ(lhs, row.rhs);
    }
    // The relaxation of the parsed program has an optimum no larger.
    auto relaxed = solve_lp(file.lp);
    ASSERT_EQ(relaxed.status, LpStatus::optimal);
    EXPECT_LE(relaxed.objective_value, objective);
  }
  EXPECT_THROW(parse_lp_file("Minimize\n obj: x\nSubject To\n c0: x >=\n"), ParseError);
}
