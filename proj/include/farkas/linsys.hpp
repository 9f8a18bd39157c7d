#pragma once

// The Farkas system (A, b, delta_s0) of a reachability MDP and the
// computation of minimal and maximal reachability probabilities.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "farkas/error.hpp"
#include "farkas/lp.hpp"
#include "farkas/model.hpp"
#include "farkas/rational.hpp"

namespace farkas {

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

/// A in Q^{M x S} with A((s,a),t) = [s=t] - P(s,a,t), b(s,a) = P(s,a,goal)
/// and delta the indicator of s0. Rows follow state order then action order;
/// columns are the states of S in ascending index order.
struct FarkasSystem {
  struct Entry {
    std::size_t col;
    Rational value;
  };

  std::vector<StateAction> rows;
  std::vector<std::size_t> cols;
  std::vector<std::size_t> col_of_state;  // npos for goal and fail
  std::vector<std::vector<Entry>> a;
  std::vector<Rational> b;
  std::vector<Rational> delta0;
  std::size_t initial_col = 0;

  std::size_t row_count() const { return rows.size(); }
  std::size_t col_count() const { return cols.size(); }

  std::size_t row_of(StateAction p) const {
    auto it = std::lower_bound(rows.begin(), rows.end(), p);
    if (it == rows.end() || *it != p) return npos;
    return static_cast<std::size_t>(it - rows.begin());
  }
};

inline FarkasSystem build_farkas_system(const ReachMdp& m) {
  FarkasSystem fs;
  fs.cols = m.transient_states();
  fs.col_of_state.assign(m.state_count(), npos);
  for (std::size_t c = 0; c < fs.cols.size(); ++c) fs.col_of_state[fs.cols[c]] = c;
  fs.initial_col = fs.col_of_state[m.initial()];
  fs.delta0.assign(fs.cols.size(), Rational(0));
  fs.delta0[fs.initial_col] = 1;
  for (std::size_t s : fs.cols) {
    for (std::size_t a = 0; a < m.choices(s).size(); ++a) {
      fs.rows.push_back({s, a});
      std::vector<FarkasSystem::Entry> row;
      Rational diag(1);
      Rational to_goal(0);
      for (const auto& tr : m.choice(s, a).transitions) {
        if (tr.target == m.goal()) {
          to_goal += tr.probability;
        } else if (tr.target == s) {
          diag -= tr.probability;
        } else if (tr.target != m.fail()) {
          row.push_back({fs.col_of_state[tr.target], -tr.probability});
        }
      }
      if (diag != 0) row.push_back({fs.col_of_state[s], diag});
      std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.col < y.col; });
      fs.a.push_back(std::move(row));
      fs.b.push_back(to_goal);
    }
  }
  return fs;
}

// ---------------------------------------------------------------------------
// Compact per-state action rows used by the solvers.

template <class S>
struct ActionRow {
  S to_goal{};
  std::vector<std::pair<std::size_t, S>> succ;  // columns of S
};

template <class S>
struct ReachSystem {
  std::size_t initial = 0;
  std::vector<std::vector<ActionRow<S>>> states;  // indexed by column
  std::size_t size() const { return states.size(); }
};

template <class S>
ReachSystem<S> make_reach_system(const ReachMdp& m) {
  ReachSystem<S> sys;
  std::vector<std::size_t> col(m.state_count(), npos);
  auto transient = m.transient_states();
  for (std::size_t c = 0; c < transient.size(); ++c) col[transient[c]] = c;
  sys.initial = col[m.initial()];
  sys.states.resize(transient.size());
  for (std::size_t c = 0; c < transient.size(); ++c) {
    for (const auto& choice : m.choices(transient[c])) {
      ActionRow<S> row;
      row.to_goal = S(0);
      for (const auto& tr : choice.transitions) {
        if (tr.target == m.goal()) {
          row.to_goal += convert_scalar<S>(tr.probability);
        } else if (tr.target != m.fail()) {
          row.succ.emplace_back(col[tr.target], convert_scalar<S>(tr.probability));
        }
      }
      sys.states[c].push_back(std::move(row));
    }
  }
  return sys;
}

/// Solves the dense system M x = rhs (row-major n x n) by Gaussian
/// elimination with partial pivoting (first nonzero pivot for rationals).
template <class S>
std::vector<S> solve_dense(std::vector<S> mat, std::vector<S> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = npos;
    if constexpr (std::is_same_v<S, double>) {
      double best = 0.0;
      for (std::size_t i = k; i < n; ++i) {
        if (std::abs(mat[i * n + k]) > best) {
          best = std::abs(mat[i * n + k]);
          p = i;
        }
      }
      if (best < 1e-14) p = npos;
    } else {
      for (std::size_t i = k; i < n && p == npos; ++i) {
        if (mat[i * n + k] != 0) p = i;
      }
    }
    if (p == npos) throw InternalError("singular linear system");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(mat[k * n + j], mat[p * n + j]);
      std::swap(rhs[k], rhs[p]);
    }
    const S pivot = mat[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      if (mat[i * n + k] == S(0)) continue;
      const S f = mat[i * n + k] / pivot;
      for (std::size_t j = k; j < n; ++j) {
        if (mat[k * n + j] != S(0)) mat[i * n + j] -= f * mat[k * n + j];
      }
      rhs[i] -= f * rhs[k];
    }
  }
  std::vector<S> x(n, S(0));
  for (std::size_t k = n; k-- > 0;) {
    S acc = rhs[k];
    for (std::size_t j = k + 1; j < n; ++j) {
      if (mat[k * n + j] != S(0)) acc -= mat[k * n + j] * x[j];
    }
    x[k] = acc / mat[k * n + k];
  }
  return x;
}

/// Topological order of the columns if the graph over S (all actions) is
/// acyclic, successors before predecessors.
template <class S>
std::optional<std::vector<std::size_t>> reverse_topological_order(const ReachSystem<S>& sys) {
  const std::size_t n = sys.size();
  std::vector<std::size_t> out_degree(n, 0);
  std::vector<std::vector<std::size_t>> preds(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> succ;
    for (const auto& row : sys.states[s]) {
      for (const auto& [t, p] : row.succ) succ.push_back(t);
    }
    std::sort(succ.begin(), succ.end());
    succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
    for (std::size_t t : succ) {
      if (t == s) return std::nullopt;
      preds[t].push_back(s);
    }
    out_degree[s] = succ.size();
  }
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < n; ++s) {
    if (out_degree[s] == 0) order.push_back(s);
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t p : preds[order[i]]) {
      if (--out_degree[p] == 0) order.push_back(p);
    }
  }
  if (order.size() != n) return std::nullopt;
  return order;
}

template <class S>
struct PolicyResult {
  std::vector<S> values;            // per column
  std::vector<std::size_t> policy;  // chosen action per column
};

namespace detail {

template <class S>
S action_value(const ActionRow<S>& row, const std::vector<S>& x) {
  S v = row.to_goal;
  for (const auto& [t, p] : row.succ) v += p * x[t];
  return v;
}

template <class S>
bool strictly_better(const S& cand, const S& cur, Direction dir) {
  if constexpr (std::is_same_v<S, double>) {
    return dir == Direction::max ? cand > cur + 1e-12 : cand < cur - 1e-12;
  } else {
    return dir == Direction::max ? cand > cur : cand < cur;
  }
}

template <class S>
std::vector<S> evaluate_policy(const ReachSystem<S>& sys, const std::vector<std::size_t>& policy) {
  const std::size_t n = sys.size();
  std::vector<S> mat(n * n, S(0));
  std::vector<S> rhs(n, S(0));
  for (std::size_t s = 0; s < n; ++s) {
    const auto& row = sys.states[s][policy[s]];
    mat[s * n + s] += S(1);
    for (const auto& [t, p] : row.succ) mat[s * n + t] -= p;
    rhs[s] = row.to_goal;
  }
  return solve_dense(std::move(mat), std::move(rhs));
}

}  // namespace detail

/// Optimal values and an optimal memoryless deterministic scheduler. Every
/// scheduler of a model without trapping states reaches goal or fail almost
/// surely, so policy iteration is sound for both directions. Acyclic systems
/// are solved by a single backward sweep; ties pick the smallest action.
template <class S>
PolicyResult<S> solve_reach(const ReachSystem<S>& sys, Direction dir,
                            const std::vector<std::size_t>* seed = nullptr) {
  const std::size_t n = sys.size();
  PolicyResult<S> res;
  res.values.assign(n, S(0));
  res.policy.assign(n, 0);
  if (auto order = reverse_topological_order(sys)) {
    for (std::size_t s : *order) {
      const auto& rows = sys.states[s];
      S best = detail::action_value(rows[0], res.values);
      std::size_t arg = 0;
      for (std::size_t a = 1; a < rows.size(); ++a) {
        S v = detail::action_value(rows[a], res.values);
        if (detail::strictly_better(v, best, dir)) {
          best = v;
          arg = a;
        }
      }
      res.values[s] = best;
      res.policy[s] = arg;
    }
    return res;
  }
  if (seed) res.policy = *seed;
  for (std::size_t iter = 0; iter < 10000; ++iter) {
    res.values = detail::evaluate_policy(sys, res.policy);
    bool changed = false;
    for (std::size_t s = 0; s < n; ++s) {
      const auto& rows = sys.states[s];
      S best = detail::action_value(rows[res.policy[s]], res.values);
      std::size_t arg = res.policy[s];
      for (std::size_t a = 0; a < rows.size(); ++a) {
        S v = detail::action_value(rows[a], res.values);
        if (detail::strictly_better(v, best, dir)) {
          best = v;
          arg = a;
        }
      }
      if (arg != res.policy[s]) {
        res.policy[s] = arg;
        changed = true;
      }
    }
    if (!changed) return res;
  }
  throw InternalError("policy iteration did not converge");
}

/// Exact optimum: floating-point policy iteration proposes a scheduler which
/// exact policy iteration then confirms or improves.
inline PolicyResult<Rational> solve_reach_exact(const ReachMdp& m, Direction dir) {
  auto exact = make_reach_system<Rational>(m);
  if (reverse_topological_order(exact)) return solve_reach(exact, dir);
  auto approx = solve_reach(make_reach_system<double>(m), dir);
  return solve_reach(exact, dir, &approx.policy);
}

inline void require_no_trap(const ReachMdp& m) {
  if (!trapping_states(m).empty()) {
    throw ModelError("model not validated: some scheduler avoids goal and fail forever");
  }
}

/// Pr^min or Pr^max of reaching goal, per state of S (column order), exact.
inline std::vector<Rational> reach_probabilities(const ReachMdp& m, Direction dir) {
  require_validated(m);
  return solve_reach_exact(m, dir).values;
}

inline std::vector<double> reach_probabilities_float(const ReachMdp& m, Direction dir) {
  require_validated(m);
  return solve_reach(make_reach_system<double>(m), dir).values;
}

/// Reachability probability from s0. Unlike reach_probabilities this only
/// needs the absence of trapping states, so it applies to any subsystem of
/// a validated model (unreachable states are harmless).
inline Rational initial_probability(const ReachMdp& m, Direction dir) {
  require_no_trap(m);
  auto res = solve_reach_exact(m, dir);
  return res.values[make_reach_system<double>(m).initial];
}

/// Optimal memoryless deterministic scheduler, action index per state
/// (0 for goal and fail).
inline std::vector<std::size_t> optimal_scheduler(const ReachMdp& m, Direction dir) {
  require_no_trap(m);
  auto res = solve_reach_exact(m, dir);
  auto transient = m.transient_states();
  std::vector<std::size_t> out(m.state_count(), 0);
  for (std::size_t c = 0; c < transient.size(); ++c) out[transient[c]] = res.policy[c];
  return out;
}

/// The LP characterization: Pr^min is the optimum of max 1.z s.t. Az <= b,
/// Pr^max the optimum of min 1.z s.t. Az >= b, with z free.
template <class S>
LinearProgram<S> reach_lp(const FarkasSystem& fs, Direction dir) {
  const std::size_t n = fs.col_count();
  LinearProgram<S> lp(n, dir == Direction::min ? LpSense::maximize : LpSense::minimize);
  for (std::size_t j = 0; j < n; ++j) {
    lp.objective[j] = S(1);
    lp.lower[j] = std::nullopt;
  }
  const RowRelation rel = dir == Direction::min ? RowRelation::le : RowRelation::ge;
  for (std::size_t r = 0; r < fs.row_count(); ++r) {
    std::vector<std::pair<std::size_t, S>> coeffs;
    for (const auto& e : fs.a[r]) coeffs.emplace_back(e.col, convert_scalar<S>(e.value));
    lp.add_row(std::move(coeffs), rel, convert_scalar<S>(fs.b[r]));
  }
  return lp;
}

template <class S>
std::vector<S> reach_probabilities_lp(const ReachMdp& m, Direction dir) {
  require_validated(m);
  auto sol = solve_lp(reach_lp<S>(build_farkas_system(m), dir));
  if (sol.status != LpStatus::optimal) throw InternalError("reachability LP not optimal");
  return sol.x;
}

}  // namespace farkas
