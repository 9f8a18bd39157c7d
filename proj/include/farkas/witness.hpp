#pragma once

// Witnessing subsystems from points of the Farkas polytopes
//   P^min_{>=0}(lambda) = { z >= 0 | Az <= b, z(s0) >= lambda }
//   P^max(lambda)       = { y >= 0 | yA <= delta, y.b >= lambda }
// The support of any point induces a witness; minimal supports give minimal
// witnesses. Provides the quotient-sum heuristic, an in-process
// branch-and-bound for the exact problem, and CPLEX-LP export.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "farkas/certificates.hpp"
#include "farkas/error.hpp"
#include "farkas/linsys.hpp"
#include "farkas/lp.hpp"
#include "farkas/model.hpp"
#include "farkas/rational.hpp"

namespace farkas {

enum class PolytopeFlavor { min_nonneg, max };

struct PolytopeSpec {
  PolytopeFlavor flavor = PolytopeFlavor::min_nonneg;
  Rational lambda;
};

inline Direction direction_of(PolytopeFlavor f) {
  return f == PolytopeFlavor::min_nonneg ? Direction::min : Direction::max;
}

inline std::string_view to_string(PolytopeFlavor f) { return f == PolytopeFlavor::min_nonneg ? "min" : "max"; }

enum class WitnessMethod { qs, exact, tree };

inline std::string_view to_string(WitnessMethod m) {
  switch (m) {
    case WitnessMethod::qs: return "qs";
    case WitnessMethod::exact: return "exact";
    case WitnessMethod::tree: return "tree";
  }
  return "?";
}

struct WitnessResult {
  Subsystem subsystem;
  std::size_t state_count = 0;     // |S'|, goal and fail not counted
  std::vector<Rational> point;     // over S (min flavor) or M (max flavor)
  WitnessMethod method = WitnessMethod::qs;
  bool optimal = false;
  std::size_t lower = 0;
  std::size_t upper = 0;
  Rational probability;            // Pr of the subsystem, computed exactly
  std::vector<std::size_t> iterate_support;  // qs: support size per iterate
  bool renormalized = false;       // max flavor: several actions at a state were collapsed
  std::size_t nodes = 0;           // branch-and-bound nodes solved
};

inline std::size_t polytope_dimension(const FarkasSystem& fs, const PolytopeSpec& spec) {
  return spec.flavor == PolytopeFlavor::min_nonneg ? fs.col_count() : fs.row_count();
}

/// Constraints of the polytope over variables 0..dim-1 (all >= 0), no objective.
template <class S>
LinearProgram<S> polytope_lp(const FarkasSystem& fs, const PolytopeSpec& spec) {
  const std::size_t dim = polytope_dimension(fs, spec);
  LinearProgram<S> lp(dim);
  if (spec.flavor == PolytopeFlavor::min_nonneg) {
    for (std::size_t r = 0; r < fs.row_count(); ++r) {
      std::vector<std::pair<std::size_t, S>> row;
      for (const auto& e : fs.a[r]) row.emplace_back(e.col, convert_scalar<S>(e.value));
      lp.add_row(std::move(row), RowRelation::le, convert_scalar<S>(fs.b[r]));
    }
    lp.add_row({{fs.initial_col, S(1)}}, RowRelation::ge, convert_scalar<S>(spec.lambda));
  } else {
    std::vector<std::vector<std::pair<std::size_t, S>>> cols(fs.col_count());
    for (std::size_t r = 0; r < fs.row_count(); ++r) {
      for (const auto& e : fs.a[r]) cols[e.col].emplace_back(r, convert_scalar<S>(e.value));
    }
    for (std::size_t c = 0; c < fs.col_count(); ++c) {
      lp.add_row(std::move(cols[c]), RowRelation::le, convert_scalar<S>(fs.delta0[c]));
    }
    std::vector<std::pair<std::size_t, S>> yb;
    for (std::size_t r = 0; r < fs.row_count(); ++r) {
      if (sgn(fs.b[r]) != 0) yb.emplace_back(r, convert_scalar<S>(fs.b[r]));
    }
    lp.add_row(std::move(yb), RowRelation::ge, convert_scalar<S>(spec.lambda));
  }
  return lp;
}

/// Exact membership test.
inline bool polytope_contains(const FarkasSystem& fs, const PolytopeSpec& spec, const std::vector<Rational>& p) {
  if (p.size() != polytope_dimension(fs, spec)) throw DimensionMismatch("point has the wrong dimension");
  for (const auto& x : p) {
    if (sgn(x) < 0) return false;
  }
  if (spec.flavor == PolytopeFlavor::min_nonneg) {
    auto az = detail::times_a(fs, p);
    for (std::size_t r = 0; r < fs.row_count(); ++r) {
      if (az[r] > fs.b[r]) return false;
    }
    return p[fs.initial_col] >= spec.lambda;
  }
  auto ya = detail::a_times(fs, p);
  for (std::size_t c = 0; c < fs.col_count(); ++c) {
    if (ya[c] > fs.delta0[c]) return false;
  }
  return detail::dot(p, fs.b) >= spec.lambda;
}

/// Exact feasibility of the polytope with every coordinate outside
/// `allowed` fixed to zero.
inline bool polytope_feasible_within(const ReachMdp& m, const PolytopeSpec& spec, const std::vector<bool>& allowed) {
  auto fs = build_farkas_system(m);
  auto lp = polytope_lp<Rational>(fs, spec);
  if (allowed.size() != lp.variable_count()) throw DimensionMismatch("mask has the wrong dimension");
  for (std::size_t i = 0; i < allowed.size(); ++i) {
    if (!allowed[i]) lp.upper[i] = Rational(0);
  }
  return solve_lp(lp).status == LpStatus::optimal;
}

/// Coordinates of the polytope for a set of states (min flavor: the states'
/// columns; max flavor: all enabled pairs of the states).
inline std::vector<bool> coordinates_of_states(const FarkasSystem& fs, const PolytopeSpec& spec,
                                               const std::vector<std::size_t>& states) {
  std::vector<bool> keep(polytope_dimension(fs, spec), false);
  for (std::size_t s : states) {
    if (spec.flavor == PolytopeFlavor::min_nonneg) {
      keep[fs.col_of_state[s]] = true;
    } else {
      for (std::size_t r = 0; r < fs.row_count(); ++r) {
        if (fs.rows[r].state == s) keep[r] = true;
      }
    }
  }
  return keep;
}

namespace detail {

inline Subsystem subsystem_from_support(const ReachMdp& m, const FarkasSystem& fs, const PolytopeSpec& spec,
                                        const std::vector<std::size_t>& support) {
  if (spec.flavor == PolytopeFlavor::min_nonneg) {
    std::vector<std::size_t> states;
    for (std::size_t c : support) states.push_back(fs.cols[c]);
    return restrict_states(m, states);
  }
  std::vector<StateAction> pairs;
  for (std::size_t r : support) pairs.push_back(fs.rows[r]);
  return restrict(m, pairs);
}

/// A point of the polytope supported inside the kept part of `sub`: the
/// subsystem's Pr^min lifted to S (min flavor), or the expected frequencies
/// of an optimal deterministic scheduler restricted to kept pairs (max).
inline std::vector<Rational> lifted_point(const ReachMdp& m, const FarkasSystem& fs, const PolytopeSpec& spec,
                                          const Subsystem& sub) {
  std::vector<Rational> point(polytope_dimension(fs, spec), Rational(0));
  const ReachMdp& sm = sub.mdp;
  if (spec.flavor == PolytopeFlavor::min_nonneg) {
    auto values = solve_reach_exact(sm, Direction::min).values;
    auto sub_cols = sm.transient_states();
    for (std::size_t c = 0; c < sub_cols.size(); ++c) {
      point[fs.col_of_state[sub.parent_state[sub_cols[c]]]] = values[c];
    }
    return point;
  }
  // Keep only kept actions; a state without kept actions moves to fail.
  std::vector<std::vector<bool>> kept(sm.state_count());
  for (std::size_t s = 0; s < sm.state_count(); ++s) kept[s].assign(sm.choices(s).size(), false);
  std::vector<std::size_t> local(m.state_count(), npos);
  for (std::size_t i = 0; i < sub.parent_state.size(); ++i) local[sub.parent_state[i]] = i;
  for (const auto& p : sub.kept_pairs) kept[local[p.state]][p.action] = true;
  MdpBuilder b(sm.kind(), sm.state_count(), sm.initial(), sm.goal(), sm.fail());
  std::vector<std::vector<std::size_t>> origin(sm.state_count());  // kept-only action -> sub action
  for (std::size_t s : sm.transient_states()) {
    for (std::size_t a = 0; a < sm.choices(s).size(); ++a) {
      if (!kept[s][a]) continue;
      origin[s].push_back(a);
      for (const auto& tr : sm.choice(s, a).transitions) b.add(s, sm.choice(s, a).action, tr.target, tr.probability);
    }
    if (origin[s].empty()) {
      b.add(s, sm.choice(s, 0).action, sm.fail(), Rational(1));
      origin[s].push_back(npos);
    }
  }
  ReachMdp kept_only = b.build();
  if (origin[sm.initial()][0] == npos) return point;
  auto policy = optimal_scheduler(kept_only, Direction::max);
  auto y = frequencies_from_scheduler(kept_only, MRScheduler::deterministic(kept_only, policy));
  auto kfs = build_farkas_system(kept_only);
  for (std::size_t r = 0; r < kfs.row_count(); ++r) {
    if (sgn(y[r]) == 0) continue;
    auto [s, a] = kfs.rows[r];
    const std::size_t sub_action = origin[s][a];
    if (sub_action == npos) continue;
    point[fs.row_of({sub.parent_state[s], sub_action})] = y[r];
  }
  return point;
}

inline std::vector<std::size_t> support_of(const std::vector<Rational>& p) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (sgn(p[i]) != 0) out.push_back(i);
  }
  return out;
}

inline std::vector<std::size_t> support_of(const std::vector<double>& p, double threshold = 1e-9) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > threshold) out.push_back(i);
  }
  return out;
}

inline WitnessResult make_result(const ReachMdp& m, const FarkasSystem& fs, const PolytopeSpec& spec, Subsystem sub,
                                 std::vector<Rational> point, const Rational& probability) {
  WitnessResult res;
  res.subsystem = std::move(sub);
  res.state_count = res.subsystem.state_count();
  res.point = std::move(point);
  res.probability = probability;
  (void)m;
  (void)fs;
  (void)spec;
  return res;
}

/// Witness whose kept set is the support of an exact lifted point derived
/// from `support`; nullopt when the support does not witness lambda.
inline std::optional<WitnessResult> witness_from_support(const ReachMdp& m, const FarkasSystem& fs,
                                                         const PolytopeSpec& spec,
                                                         const std::vector<std::size_t>& support) {
  const Direction dir = direction_of(spec.flavor);
  auto sub = subsystem_from_support(m, fs, spec, support);
  Rational pr = initial_probability(sub.mdp, dir);
  if (pr < spec.lambda) return std::nullopt;
  auto point = lifted_point(m, fs, spec, sub);
  if (!polytope_contains(fs, spec, point)) throw InternalError("lifted point left the polytope");
  auto canonical = support_of(point);
  if (canonical != support) {
    sub = subsystem_from_support(m, fs, spec, canonical);
    pr = initial_probability(sub.mdp, dir);
    if (pr < spec.lambda) throw InternalError("canonical support lost the threshold");
  }
  return make_result(m, fs, spec, std::move(sub), std::move(point), pr);
}

inline void require_lower_bound_holds(const ReachMdp& m, const PolytopeSpec& spec) {
  require_validated(m);
  if (spec.lambda < 0 || spec.lambda > 1) throw Error("threshold must lie in [0,1]");
  const auto fs = build_farkas_system(m);
  const Rational pr = solve_reach_exact(m, direction_of(spec.flavor)).values[fs.initial_col];
  if (pr < spec.lambda) {
    throw Infeasible("polytope is empty: Pr = " + to_string(pr) + " < lambda = " + to_string(spec.lambda));
  }
}

}  // namespace detail

/// Witness induced by the support of a point of the polytope. Throws
/// PointNotInPolytope when p is not feasible.
inline WitnessResult witness_from_point(const ReachMdp& m, const PolytopeSpec& spec, const std::vector<Rational>& p) {
  require_validated(m);
  const auto fs = build_farkas_system(m);
  if (!polytope_contains(fs, spec, p)) throw PointNotInPolytope("point is not in the polytope");
  auto support = detail::support_of(p);
  auto sub = detail::subsystem_from_support(m, fs, spec, support);
  Rational pr = initial_probability(sub.mdp, direction_of(spec.flavor));
  if (pr < spec.lambda) throw InternalError("support of a polytope point does not witness lambda");
  return detail::make_result(m, fs, spec, std::move(sub), p, pr);
}

/// Floating-point counterpart: support taken with threshold 1e-9, the
/// subsystem re-verified exactly.
inline std::optional<WitnessResult> witness_from_float_point(const ReachMdp& m, const PolytopeSpec& spec,
                                                             const std::vector<double>& p) {
  const auto fs = build_farkas_system(m);
  return detail::witness_from_support(m, fs, spec, detail::support_of(p));
}

/// K bounding every coordinate of every point of the polytope: 1 for the
/// min flavor, max sum y over P^max(lambda) for the max flavor.
inline Rational k_bound(const ReachMdp& m, const PolytopeSpec& spec) {
  detail::require_lower_bound_holds(m, spec);
  if (spec.flavor == PolytopeFlavor::min_nonneg) return Rational(1);
  auto lp = polytope_lp<Rational>(build_farkas_system(m), spec);
  lp.sense = LpSense::maximize;
  std::fill(lp.objective.begin(), lp.objective.end(), Rational(1));
  auto sol = solve_lp(lp);
  if (sol.status == LpStatus::infeasible) throw Infeasible("polytope is empty");
  if (sol.status == LpStatus::unbounded) throw InternalError("unbounded frequency polytope");
  return sol.objective_value;
}

/// Iterated reweighted LP minimization: o_1 = 1, o_{j+1}(i) = 1/QS_j(i) on
/// the support of QS_j and C = 10 max 1/QS_j(i) elsewhere.
inline WitnessResult qs_heuristic(const ReachMdp& m, const PolytopeSpec& spec, std::size_t iterations) {
  if (iterations == 0) throw Error("qs_heuristic needs at least one iteration");
  detail::require_lower_bound_holds(m, spec);
  const auto fs = build_farkas_system(m);
  auto lp = polytope_lp<double>(fs, spec);
  const std::size_t dim = lp.variable_count();
  std::vector<double> o(dim, 1.0);
  std::vector<double> qs;
  std::vector<std::size_t> sizes;
  bool exact_needed = false;
  for (std::size_t j = 0; j < iterations; ++j) {
    lp.objective = o;
    auto sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal) {
      exact_needed = true;
      break;
    }
    qs = sol.x;
    sizes.push_back(detail::support_of(qs).size());
    if (j + 1 == iterations) break;
    double largest = 0.0;
    for (double v : qs) {
      if (v > 1e-9) largest = std::max(largest, 1.0 / v);
    }
    const double c = largest > 0.0 ? 10.0 * largest : 1.0;
    for (std::size_t i = 0; i < dim; ++i) o[i] = qs[i] > 1e-9 ? 1.0 / qs[i] : c;
  }
  std::optional<WitnessResult> res;
  if (!exact_needed) res = detail::witness_from_support(m, fs, spec, detail::support_of(qs));
  if (!res) {
    // The rounded support lost the threshold: re-solve the last LP exactly.
    auto exact_lp = polytope_lp<Rational>(fs, spec);
    for (std::size_t i = 0; i < dim; ++i) exact_lp.objective[i] = rationalize(o[i]);
    auto sol = solve_lp(exact_lp);
    if (sol.status != LpStatus::optimal) throw InternalError("exact QS re-solve failed");
    if (sizes.size() < iterations) sizes.push_back(detail::support_of(sol.x).size());
    res = detail::witness_from_support(m, fs, spec, detail::support_of(sol.x));
    if (!res) throw InternalError("support of an exact polytope point does not witness lambda");
  }
  res->method = WitnessMethod::qs;
  res->iterate_support = std::move(sizes);
  res->lower = 1;
  res->upper = res->state_count;
  return *res;
}

struct MilpOptions {
  double time_budget_seconds = 0.0;  // 0 disables the budget
  std::size_t node_limit = 0;        // 0 disables the limit
};

namespace detail {

struct BranchNode {
  std::vector<signed char> fix;  // -1 free, 0 or 1 fixed
  double priority = 0.0;         // bound inherited from the parent
  std::size_t id = 0;
};

struct NodeOrder {
  bool operator()(const BranchNode& a, const BranchNode& b) const {
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.id > b.id;
  }
};

template <class S>
LinearProgram<S> milp_relaxation(const FarkasSystem& fs, const PolytopeSpec& spec, const Rational& k,
                                 const std::vector<signed char>& fix) {
  auto lp = polytope_lp<S>(fs, spec);
  const std::size_t n = lp.variable_count();
  for (std::size_t i = 0; i < n; ++i) lp.add_variable(S(1), S(0), S(1));
  for (std::size_t i = 0; i < n; ++i) {
    lp.add_row({{i, S(1)}, {n + i, convert_scalar<S>(Rational(-k))}}, RowRelation::le, S(0));
    if (fix[i] == 0) {
      lp.upper[i] = S(0);
      lp.upper[n + i] = S(0);
    } else if (fix[i] == 1) {
      lp.lower[n + i] = S(1);
    }
  }
  return lp;
}

inline bool lex_smaller(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

/// Exact minimal witness by best-first branch-and-bound on
///   min sum sigma  s.t.  x in polytope, x <= K sigma, sigma in {0,1}.
/// Node bounds come from the LP relaxation (floating point); every witness
/// candidate is verified exactly. Ties between equally small witnesses go
/// to the lexicographically smallest kept-index set among the candidates
/// met during the search.
inline WitnessResult exact_minimal_witness(const ReachMdp& m, const PolytopeSpec& spec, const MilpOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const Rational k = k_bound(m, spec);
  const auto fs = build_farkas_system(m);
  const std::size_t n = polytope_dimension(fs, spec);

  WitnessResult best = qs_heuristic(m, spec, 2);
  std::vector<std::size_t> best_support = detail::support_of(best.point);
  std::map<std::vector<std::size_t>, bool> tried;
  bool collapsed = false;

  auto offer = [&](const std::vector<std::size_t>& support, bool several_actions) {
    if (support.size() > best_support.size()) return false;
    auto [it, fresh] = tried.emplace(support, false);
    if (!fresh) return it->second;
    auto cand = detail::witness_from_support(m, fs, spec, support);
    it->second = cand.has_value();
    if (!cand) return false;
    auto cand_support = detail::support_of(cand->point);
    if (cand_support.size() < best_support.size() ||
        (cand_support.size() == best_support.size() && detail::lex_smaller(cand_support, best_support))) {
      best = std::move(*cand);
      best_support = std::move(cand_support);
      collapsed = several_actions;
    }
    return true;
  };

  auto several_actions_per_state = [&](const std::vector<std::size_t>& support) {
    if (spec.flavor != PolytopeFlavor::max) return false;
    for (std::size_t i = 1; i < support.size(); ++i) {
      if (fs.rows[support[i]].state == fs.rows[support[i - 1]].state) return true;
    }
    return false;
  };

  std::priority_queue<detail::BranchNode, std::vector<detail::BranchNode>, detail::NodeOrder> open;
  open.push({std::vector<signed char>(n, -1), 0.0, 0});
  std::size_t next_id = 1;
  std::size_t solved = 0;
  bool exhausted = true;

  while (!open.empty()) {
    if (std::ceil(open.top().priority - 1e-6) >= static_cast<double>(best_support.size())) {
      // Best-first: every remaining node is bounded away.
      while (!open.empty()) open.pop();
      break;
    }
    const double elapsed = std::chrono::duration<double>(clock::now() - start).count();
    if ((opts.time_budget_seconds > 0 && elapsed > opts.time_budget_seconds) ||
        (opts.node_limit > 0 && solved >= opts.node_limit)) {
      exhausted = false;
      break;
    }
    detail::BranchNode node = open.top();
    open.pop();
    ++solved;
    auto sol = solve_lp(detail::milp_relaxation<double>(fs, spec, k, node.fix));
    if (sol.status != LpStatus::optimal) {
      if (node.id != 0) continue;
      auto exact = solve_lp(detail::milp_relaxation<Rational>(fs, spec, k, node.fix));
      if (exact.status != LpStatus::optimal) throw InternalError("MILP root relaxation infeasible");
      sol.status = LpStatus::optimal;
      sol.x.clear();
      for (const auto& v : exact.x) sol.x.push_back(v.get_d());
      sol.objective_value = exact.objective_value.get_d();
    }
    std::vector<double> xs(sol.x.begin(), sol.x.begin() + static_cast<long>(n));
    auto support = detail::support_of(xs);
    const bool verified = offer(support, several_actions_per_state(support));
    const double bound = sol.objective_value;
    if (std::ceil(bound - 1e-6) >= static_cast<double>(best_support.size())) continue;

    std::optional<std::size_t> branch;
    double most = 1e-9;
    for (std::size_t i = 0; i < n; ++i) {
      if (node.fix[i] != -1) continue;
      const double s = sol.x[n + i];
      const double frac = std::min(s, 1.0 - s);
      if (frac > most) {
        most = frac;
        branch = i;
      }
    }
    if (!branch) {
      // Integral relaxation: its support is the best this subtree offers.
      if (!verified) {
        auto exact = solve_lp(detail::milp_relaxation<Rational>(fs, spec, k, node.fix));
        if (exact.status == LpStatus::optimal) {
          std::vector<Rational> ex(exact.x.begin(), exact.x.begin() + static_cast<long>(n));
          auto es = detail::support_of(ex);
          offer(es, several_actions_per_state(es));
        }
      }
      continue;
    }
    for (signed char v : {0, 1}) {
      detail::BranchNode child{node.fix, bound, next_id++};
      child.fix[*branch] = v;
      open.push(std::move(child));
    }
  }

  best.method = WitnessMethod::exact;
  best.nodes = solved;
  best.renormalized = collapsed;
  best.upper = best.state_count;
  if (exhausted) {
    best.optimal = true;
    best.lower = best.state_count;
  } else {
    double lowest = open.empty() ? static_cast<double>(best_support.size()) : open.top().priority;
    best.lower = std::max<std::size_t>(1, static_cast<std::size_t>(std::max(0.0, std::ceil(lowest - 1e-6))));
    best.lower = std::min(best.lower, best.upper);
    best.optimal = best.lower == best.upper;
  }
  return best;
}

// ---------------------------------------------------------------------------
// CPLEX-LP export and re-import

namespace detail {

inline std::string lp_number(const mpz_class& z) { return z.get_str(); }

/// Scales a rational row by the lcm of its denominators.
inline std::pair<std::vector<std::pair<std::size_t, mpz_class>>, mpz_class> integral_row(
    const std::vector<std::pair<std::size_t, Rational>>& coeffs, const Rational& rhs) {
  mpz_class l = rhs.get_den();
  for (const auto& [j, a] : coeffs) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), a.get_den_mpz_t());
  std::vector<std::pair<std::size_t, mpz_class>> out;
  for (const auto& [j, a] : coeffs) out.emplace_back(j, mpz_class(a.get_num() * (l / a.get_den())));
  return {out, mpz_class(rhs.get_num() * (l / rhs.get_den()))};
}

}  // namespace detail

/// The minimal-witness MILP in CPLEX-LP text format. Rows are scaled to
/// integer coefficients so the file is exact.
inline std::string export_milp(const ReachMdp& m, const PolytopeSpec& spec) {
  const Rational k = k_bound(m, spec);
  const auto fs = build_farkas_system(m);
  auto lp = polytope_lp<Rational>(fs, spec);
  const std::size_t n = lp.variable_count();
  auto name = [&](std::size_t j) { return j < n ? "x_" + std::to_string(j) : "s_" + std::to_string(j - n); };
  std::ostringstream out;
  out << "\\ minimal witnessing subsystem, " << to_string(spec.flavor) << " flavor, lambda " << to_string(spec.lambda)
      << ", K " << to_string(k) << "\n";
  out << "Minimize\n obj:";
  for (std::size_t i = 0; i < n; ++i) out << (i ? " + " : " ") << name(n + i);
  out << "\nSubject To\n";
  auto write_row = [&](const std::string& label, const std::vector<std::pair<std::size_t, Rational>>& coeffs,
                       RowRelation rel, const Rational& rhs) {
    auto [row, r] = detail::integral_row(coeffs, rhs);
    out << ' ' << label << ':';
    bool first = true;
    for (const auto& [j, a] : row) {
      if (a == 0) continue;
      mpz_class mag = abs(a);
      out << (a < 0 ? (first ? " -" : " - ") : (first ? " " : " + "));
      if (a < 0 && first) out << ' ';
      if (mag != 1) out << detail::lp_number(mag) << ' ';
      out << name(j);
      first = false;
    }
    if (first) out << " 0 " << name(0);
    out << (rel == RowRelation::le ? " <= " : rel == RowRelation::ge ? " >= " : " = ") << detail::lp_number(r) << '\n';
  };
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    write_row("c" + std::to_string(r), lp.rows[r].coeffs, lp.rows[r].relation, lp.rows[r].rhs);
  }
  for (std::size_t i = 0; i < n; ++i) {
    write_row("k" + std::to_string(i), {{i, Rational(1)}, {n + i, Rational(-k)}}, RowRelation::le, Rational(0));
  }
  out << "Bounds\n";
  for (std::size_t i = 0; i < n; ++i) out << ' ' << name(i) << " >= 0\n";
  for (std::size_t i = 0; i < n; ++i) out << " 0 <= " << name(n + i) << " <= 1\n";
  out << "Binaries\n";
  for (std::size_t i = 0; i < n; ++i) out << ' ' << name(n + i) << '\n';
  out << "End\n";
  return out.str();
}

/// A parsed CPLEX-LP file: the program over named variables plus binaries.
struct LpFile {
  LinearProgram<Rational> lp;
  std::vector<std::string> names;
  std::vector<std::size_t> binaries;
  std::vector<std::string> row_names;

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    return std::nullopt;
  }
};

/// Parser for the subset of CPLEX-LP written by export_milp (one row per
/// line; Minimize/Maximize, Subject To, Bounds, Binaries/General, End).
inline LpFile parse_lp_file(std::string_view text) {
  LpFile f;
  std::map<std::string, std::size_t> index;
  auto var = [&](const std::string& nm) {
    auto [it, fresh] = index.emplace(nm, f.names.size());
    if (fresh) {
      f.names.push_back(nm);
      f.lp.add_variable(Rational(0));
    }
    return it->second;
  };
  enum class Section { none, objective, constraints, bounds, binaries, end } section = Section::none;
  detail::Lines lines(text);
  std::string_view raw;

  // Parses "[label:] term term ... [op rhs]" into coefficients.
  auto parse_expr = [&](std::vector<std::string_view> toks, std::size_t ln,
                        std::vector<std::pair<std::size_t, Rational>>& coeffs) {
    Rational sign(1);
    std::optional<Rational> coef;
    for (auto t : toks) {
      if (t == "+") continue;
      if (t == "-") {
        sign = -sign;
        continue;
      }
      if (auto q = try_parse_rational(t)) {
        coef = *q;
        continue;
      }
      Rational c = sign * (coef ? *coef : Rational(1));
      coeffs.emplace_back(var(std::string(t)), c);
      sign = 1;
      coef.reset();
    }
    if (coef) throw ParseError(ln, "dangling coefficient");
  };

  while (lines.next(raw)) {
    auto line = raw;
    if (auto bs = line.find('\\'); bs != std::string_view::npos) line = line.substr(0, bs);
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    const std::size_t ln = lines.number();
    std::string head(toks[0]);
    std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::tolower(c); });
    if (head == "minimize" || head == "maximize") {
      f.lp.sense = head == "minimize" ? LpSense::minimize : LpSense::maximize;
      section = Section::objective;
      continue;
    }
    if (head == "subject" && toks.size() == 2) {
      section = Section::constraints;
      continue;
    }
    if (head == "bounds") {
      section = Section::bounds;
      continue;
    }
    if (head == "binaries" || head == "binary" || head == "general" || head == "generals") {
      section = Section::binaries;
      continue;
    }
    if (head == "end") {
      section = Section::end;
      continue;
    }
    std::string label;
    if (!toks.empty() && toks[0].back() == ':') {
      label = std::string(toks[0].substr(0, toks[0].size() - 1));
      toks.erase(toks.begin());
    }
    switch (section) {
      case Section::objective: {
        std::vector<std::pair<std::size_t, Rational>> coeffs;
        parse_expr(toks, ln, coeffs);
        for (const auto& [j, c] : coeffs) f.lp.objective[j] += c;
        break;
      }
      case Section::constraints: {
        auto op = std::find_if(toks.begin(), toks.end(), [](auto t) { return t == "<=" || t == ">=" || t == "="; });
        if (op == toks.end() || op + 2 != toks.end()) throw ParseError(ln, "expected '<expr> <op> <rhs>'");
        auto rhs = try_parse_rational(*(op + 1));
        if (!rhs) throw ParseError(ln, "malformed right-hand side");
        std::vector<std::pair<std::size_t, Rational>> coeffs;
        parse_expr(std::vector<std::string_view>(toks.begin(), op), ln, coeffs);
        RowRelation rel = *op == "<=" ? RowRelation::le : *op == ">=" ? RowRelation::ge : RowRelation::eq;
        f.lp.add_row(std::move(coeffs), rel, *rhs);
        f.row_names.push_back(label);
        break;
      }
      case Section::bounds: {
        if (toks.size() == 3) {
          auto v = var(std::string(toks[0]));
          auto q = try_parse_rational(toks[2]);
          if (!q) throw ParseError(ln, "malformed bound");
          if (toks[1] == ">=") {
            f.lp.lower[v] = *q;
          } else if (toks[1] == "<=") {
            f.lp.upper[v] = *q;
          } else if (toks[1] == "=") {
            f.lp.lower[v] = f.lp.upper[v] = *q;
          } else {
            throw ParseError(ln, "malformed bound");
          }
        } else if (toks.size() == 5 && toks[1] == "<=" && toks[3] == "<=") {
          auto lo = try_parse_rational(toks[0]);
          auto hi = try_parse_rational(toks[4]);
          if (!lo || !hi) throw ParseError(ln, "malformed bound");
          auto v = var(std::string(toks[2]));
          f.lp.lower[v] = *lo;
          f.lp.upper[v] = *hi;
        } else if (toks.size() == 2 && toks[1] == "free") {
          auto v = var(std::string(toks[0]));
          f.lp.lower[v] = std::nullopt;
        } else {
          throw ParseError(ln, "malformed bound");
        }
        break;
      }
      case Section::binaries:
        for (auto t : toks) f.binaries.push_back(var(std::string(t)));
        break;
      default:
        throw ParseError(ln, "content outside of a section");
    }
  }
  if (section != Section::end) throw ParseError(lines.number(), "missing End");
  return f;
}

// ---------------------------------------------------------------------------
// Witness files: the subsystem format followed by a statistics trailer.

inline std::string witness_trailer(const WitnessResult& w) {
  std::ostringstream out;
  out << "# states " << w.state_count << " # optimal " << (w.optimal ? "true" : "false") << " # bounds " << w.lower
      << ' ' << w.upper << '\n';
  out << "# method " << to_string(w.method) << '\n';
  out << "# probability " << to_string(w.probability) << '\n';
  if (!w.iterate_support.empty()) {
    out << "# iterate-support";
    for (std::size_t s : w.iterate_support) out << ' ' << s;
    out << '\n';
  }
  if (w.method == WitnessMethod::exact) out << "# nodes " << w.nodes << '\n';
  if (w.renormalized) out << "# renormalized true\n";
  return out.str();
}

inline std::string serialize_witness(const WitnessResult& w, const ReachMdp& parent) {
  return serialize_subsystem(w.subsystem, parent) + witness_trailer(w);
}

struct WitnessTrailer {
  std::size_t states = 0;
  bool optimal = false;
  std::size_t lower = 0;
  std::size_t upper = 0;
  std::string method;
  std::optional<Rational> probability;
  bool renormalized = false;
};

inline WitnessTrailer parse_witness_trailer(std::string_view text) {
  WitnessTrailer t;
  bool found = false;
  detail::Lines lines(text);
  std::string_view raw;
  while (lines.next(raw)) {
    auto hash = raw.find('#');
    if (hash == std::string_view::npos) continue;
    auto toks = detail::split_ws(raw.substr(hash));
    auto number = [&](std::string_view tok) {
      auto v = detail::parse_index(tok);
      if (!v) throw ParseError(lines.number(), "malformed witness trailer");
      return *v;
    };
    if (toks.size() == 10 && toks[1] == "states" && toks[3] == "#" && toks[4] == "optimal" && toks[6] == "#" &&
        toks[7] == "bounds") {
      t.states = number(toks[2]);
      if (toks[5] != "true" && toks[5] != "false") throw ParseError(lines.number(), "malformed witness trailer");
      t.optimal = toks[5] == "true";
      t.lower = number(toks[8]);
      t.upper = number(toks[9]);
      found = true;
    } else if (toks.size() == 3 && toks[1] == "method") {
      t.method = std::string(toks[2]);
    } else if (toks.size() == 3 && toks[1] == "probability") {
      t.probability = try_parse_rational(toks[2]);
      if (!t.probability) throw ParseError(lines.number(), "malformed probability in trailer");
    } else if (toks.size() == 3 && toks[1] == "renormalized") {
      t.renormalized = toks[2] == "true";
    }
  }
  if (!found) throw ParseError(lines.number(), "missing witness trailer");
  return t;
}

}  // namespace farkas
