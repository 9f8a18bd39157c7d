#pragma once

// Dense two-phase tableau simplex, templated on the scalar type. `double`
// runs with absolute tolerances of 1e-9; `Rational` is exact.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

#include "farkas/error.hpp"
#include "farkas/rational.hpp"

namespace farkas {

enum class LpSense { minimize, maximize };
enum class RowRelation { le, eq, ge };
enum class LpStatus { optimal, infeasible, unbounded };

template <class S>
struct LpRow {
  std::vector<std::pair<std::size_t, S>> coeffs;
  RowRelation relation = RowRelation::le;
  S rhs{};
};

/// A linear program over variables x_0..x_{n-1}. Bounds default to
/// 0 <= x < +inf; `std::nullopt` encodes an infinite bound.
template <class S>
struct LinearProgram {
  LpSense sense = LpSense::minimize;
  std::vector<S> objective;
  std::vector<LpRow<S>> rows;
  std::vector<std::optional<S>> lower;
  std::vector<std::optional<S>> upper;

  LinearProgram() = default;
  explicit LinearProgram(std::size_t n, LpSense s = LpSense::minimize)
      : sense(s), objective(n, S(0)), lower(n, S(0)), upper(n) {}

  std::size_t variable_count() const { return objective.size(); }

  std::size_t add_variable(const S& cost, std::optional<S> lo = S(0), std::optional<S> hi = std::nullopt) {
    objective.push_back(cost);
    lower.push_back(std::move(lo));
    upper.push_back(std::move(hi));
    return objective.size() - 1;
  }

  void add_row(std::vector<std::pair<std::size_t, S>> coeffs, RowRelation rel, const S& rhs) {
    rows.push_back(LpRow<S>{std::move(coeffs), rel, rhs});
  }
};

template <class S>
struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  std::vector<S> x;
  S objective_value{};
};

template <class To, class From>
To convert_scalar(const From& v) {
  if constexpr (std::is_same_v<To, From>) {
    return v;
  } else if constexpr (std::is_same_v<To, double>) {
    return v.get_d();
  } else {
    return To(v);
  }
}

template <class To, class From>
LinearProgram<To> convert_lp(const LinearProgram<From>& lp) {
  LinearProgram<To> out;
  out.sense = lp.sense;
  for (const auto& c : lp.objective) out.objective.push_back(convert_scalar<To>(c));
  for (const auto& r : lp.rows) {
    LpRow<To> row;
    row.relation = r.relation;
    row.rhs = convert_scalar<To>(r.rhs);
    for (const auto& [j, a] : r.coeffs) row.coeffs.emplace_back(j, convert_scalar<To>(a));
    out.rows.push_back(std::move(row));
  }
  for (const auto& b : lp.lower) {
    out.lower.push_back(b ? std::optional<To>(convert_scalar<To>(*b)) : std::nullopt);
  }
  for (const auto& b : lp.upper) {
    out.upper.push_back(b ? std::optional<To>(convert_scalar<To>(*b)) : std::nullopt);
  }
  return out;
}

namespace detail {

template <class S>
struct Tol;

template <>
struct Tol<double> {
  static bool pos(double v) { return v > 1e-9; }
  static bool neg(double v) { return v < -1e-9; }
  static bool zero(double v) { return std::abs(v) <= 1e-9; }
  static bool pivot_ok(double v) { return v > 1e-9; }
  static bool less(double a, double b) { return a < b - 1e-12 * (1.0 + std::abs(b)); }
  static bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)); }
  static void clean(double& v) {
    if (std::abs(v) < 1e-13) v = 0.0;
  }
};

template <>
struct Tol<Rational> {
  static bool pos(const Rational& v) { return sgn(v) > 0; }
  static bool neg(const Rational& v) { return sgn(v) < 0; }
  static bool zero(const Rational& v) { return sgn(v) == 0; }
  static bool pivot_ok(const Rational& v) { return sgn(v) > 0; }
  static bool less(const Rational& a, const Rational& b) { return a < b; }
  static bool same(const Rational& a, const Rational& b) { return a == b; }
  static void clean(Rational&) {}
};

/// Tableau in canonical form: every row has a basic variable with unit column.
template <class S>
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), t_(rows * (cols + 1), S(0)), basis_(rows) {}

  S& at(std::size_t i, std::size_t j) { return t_[i * (n_ + 1) + j]; }
  const S& at(std::size_t i, std::size_t j) const { return t_[i * (n_ + 1) + j]; }
  S& rhs(std::size_t i) { return at(i, n_); }
  const S& rhs(std::size_t i) const { return at(i, n_); }
  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }
  std::vector<std::size_t>& basis() { return basis_; }

  /// Reduced costs d_j = c_j - c_B B^{-1} A_j for the given cost vector.
  void price(const std::vector<S>& cost) {
    d_.assign(n_ + 1, S(0));
    for (std::size_t j = 0; j < n_; ++j) d_[j] = cost[j];
    for (std::size_t i = 0; i < m_; ++i) {
      const S& cb = cost[basis_[i]];
      if (cb == S(0)) continue;
      for (std::size_t j = 0; j <= n_; ++j) {
        if (at(i, j) != S(0)) d_[j] -= cb * at(i, j);
      }
    }
  }

  void pivot(std::size_t r, std::size_t e) {
    S inv = S(1) / at(r, e);
    for (std::size_t j = 0; j <= n_; ++j) {
      if (at(r, j) != S(0)) at(r, j) *= inv;
    }
    at(r, e) = S(1);
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      S f = at(i, e);
      if (f == S(0)) continue;
      for (std::size_t j = 0; j <= n_; ++j) {
        if (at(r, j) != S(0)) {
          at(i, j) -= f * at(r, j);
          Tol<S>::clean(at(i, j));
        }
      }
      at(i, e) = S(0);
    }
    S f = d_[e];
    if (f != S(0)) {
      for (std::size_t j = 0; j <= n_; ++j) {
        if (at(r, j) != S(0)) {
          d_[j] -= f * at(r, j);
          Tol<S>::clean(d_[j]);
        }
      }
      d_[e] = S(0);
    }
    basis_[r] = e;
  }

  enum class Outcome { optimal, unbounded };

  /// Minimizes the priced cost over columns with `allowed[j]`. Dantzig
  /// pricing with smallest-index ties; switches to Bland's rule after a run
  /// of degenerate pivots.
  Outcome optimize(const std::vector<bool>& allowed) {
    constexpr std::size_t degenerate_switch = 50;
    constexpr std::size_t iteration_cap = 200000;
    std::size_t degenerate_run = 0;
    bool bland = false;
    for (std::size_t iter = 0; iter < iteration_cap; ++iter) {
      std::optional<std::size_t> enter;
      for (std::size_t j = 0; j < n_; ++j) {
        if (!allowed[j] || !Tol<S>::neg(d_[j])) continue;
        if (!enter) {
          enter = j;
          if (bland) break;
        } else if (d_[j] < d_[*enter]) {
          enter = j;
        }
      }
      if (!enter) return Outcome::optimal;
      std::optional<std::size_t> leave;
      S best{};
      for (std::size_t i = 0; i < m_; ++i) {
        if (!Tol<S>::pivot_ok(at(i, *enter))) continue;
        S ratio = (rhs(i) < S(0) ? S(0) : rhs(i)) / at(i, *enter);
        if (!leave || Tol<S>::less(ratio, best) ||
            (Tol<S>::same(ratio, best) && basis_[i] < basis_[*leave])) {
          if (!leave || Tol<S>::less(ratio, best)) best = ratio;
          leave = i;
        }
      }
      if (!leave) return Outcome::unbounded;
      if (Tol<S>::zero(rhs(*leave))) {
        if (++degenerate_run >= degenerate_switch) bland = true;
      } else {
        degenerate_run = 0;
      }
      pivot(*leave, *enter);
    }
    throw InternalError("simplex iteration limit reached");
  }

  const S& reduced_cost(std::size_t j) const { return d_[j]; }
  S objective() const { return -d_[n_]; }

 private:
  std::size_t m_, n_;
  std::vector<S> t_;
  std::vector<std::size_t> basis_;
  std::vector<S> d_;
};

}  // namespace detail

template <class S>
LpSolution<S> solve_lp(const LinearProgram<S>& lp) {
  using detail::Tol;
  const std::size_t n = lp.variable_count();
  if (lp.lower.size() != n || lp.upper.size() != n) {
    throw DimensionMismatch("LP bounds do not match the variable count");
  }
  for (const auto& row : lp.rows) {
    for (const auto& [j, a] : row.coeffs) {
      if (j >= n) throw DimensionMismatch("LP row references an unknown variable");
    }
  }

  // Substitution x_j = offset_j + sign_j * x'_k (plus - x'_{k+1} when free).
  struct Map {
    S offset{};
    int sign = 1;
    std::size_t col = 0;
    bool split = false;
  };
  std::vector<Map> map(n);
  std::size_t structural = 0;
  std::vector<LpRow<S>> rows;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& lo = lp.lower[j];
    const auto& hi = lp.upper[j];
    map[j].col = structural;
    if (lo) {
      map[j].offset = *lo;
      if (hi) {
        if (Tol<S>::less(*hi, *lo)) return {LpStatus::infeasible, {}, S(0)};
        rows.push_back(LpRow<S>{{{structural, S(1)}}, RowRelation::le, *hi - *lo});
      }
      structural += 1;
    } else if (hi) {
      map[j].offset = *hi;
      map[j].sign = -1;
      structural += 1;
    } else {
      map[j].split = true;
      structural += 2;
    }
  }
  for (const auto& row : lp.rows) {
    LpRow<S> r;
    r.relation = row.relation;
    r.rhs = row.rhs;
    for (const auto& [j, a] : row.coeffs) {
      if (a == S(0)) continue;
      r.rhs -= a * map[j].offset;
      r.coeffs.emplace_back(map[j].col, map[j].sign > 0 ? a : S(-a));
      if (map[j].split) r.coeffs.emplace_back(map[j].col + 1, -a);
    }
    rows.push_back(std::move(r));
  }
  for (auto& r : rows) {
    if (r.rhs < S(0)) {
      r.rhs = -r.rhs;
      for (auto& c : r.coeffs) c.second = -c.second;
      if (r.relation == RowRelation::le) {
        r.relation = RowRelation::ge;
      } else if (r.relation == RowRelation::ge) {
        r.relation = RowRelation::le;
      }
    }
  }

  const std::size_t m = rows.size();
  std::size_t slacks = 0, artificials = 0;
  for (const auto& r : rows) {
    if (r.relation != RowRelation::eq) ++slacks;
    if (r.relation != RowRelation::le) ++artificials;
  }
  const std::size_t cols = structural + slacks + artificials;
  detail::Tableau<S> tab(m, cols);
  std::vector<bool> is_artificial(cols, false);
  std::size_t next_slack = structural, next_art = structural + slacks;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& r = rows[i];
    for (const auto& [k, a] : r.coeffs) tab.at(i, k) += a;
    tab.rhs(i) = r.rhs;
    switch (r.relation) {
      case RowRelation::le:
        tab.at(i, next_slack) = S(1);
        tab.basis()[i] = next_slack++;
        break;
      case RowRelation::ge:
        tab.at(i, next_slack++) = S(-1);
        tab.at(i, next_art) = S(1);
        is_artificial[next_art] = true;
        tab.basis()[i] = next_art++;
        break;
      case RowRelation::eq:
        tab.at(i, next_art) = S(1);
        is_artificial[next_art] = true;
        tab.basis()[i] = next_art++;
        break;
    }
  }

  if (artificials > 0) {
    std::vector<S> phase1(cols, S(0));
    for (std::size_t j = 0; j < cols; ++j) {
      if (is_artificial[j]) phase1[j] = S(1);
    }
    tab.price(phase1);
    std::vector<bool> allowed(cols, true);
    tab.optimize(allowed);
    if (Tol<S>::pos(tab.objective())) return {LpStatus::infeasible, {}, S(0)};
    // Drive remaining artificials out of the basis where possible; rows with
    // no usable pivot are redundant and keep their artificial at zero.
    for (std::size_t i = 0; i < m; ++i) {
      if (!is_artificial[tab.basis()[i]]) continue;
      std::optional<std::size_t> col;
      for (std::size_t j = 0; j < cols && !col; ++j) {
        if (!is_artificial[j] && !Tol<S>::zero(tab.at(i, j))) col = j;
      }
      if (col) tab.pivot(i, *col);
    }
  }

  // Phase 2 works on a normalized minimization objective.
  std::vector<S> cost(cols, S(0));
  S scale(0);
  for (std::size_t j = 0; j < n; ++j) {
    S c = lp.sense == LpSense::maximize ? S(-lp.objective[j]) : lp.objective[j];
    if (map[j].sign < 0) c = -c;
    cost[map[j].col] = c;
    if (map[j].split) cost[map[j].col + 1] = -c;
    S mag = c < S(0) ? S(-c) : c;
    if (mag > scale) scale = mag;
  }
  if constexpr (std::is_same_v<S, double>) {
    if (scale > 0) {
      for (auto& c : cost) c /= scale;
    }
  }
  tab.price(cost);
  std::vector<bool> allowed(cols);
  for (std::size_t j = 0; j < cols; ++j) allowed[j] = !is_artificial[j];
  if (tab.optimize(allowed) == detail::Tableau<S>::Outcome::unbounded) {
    return {LpStatus::unbounded, {}, S(0)};
  }

  std::vector<S> xs(cols, S(0));
  for (std::size_t i = 0; i < m; ++i) xs[tab.basis()[i]] = tab.rhs(i);
  LpSolution<S> sol;
  sol.status = LpStatus::optimal;
  sol.x.assign(n, S(0));
  sol.objective_value = S(0);
  for (std::size_t j = 0; j < n; ++j) {
    S v = xs[map[j].col];
    if (map[j].split) v -= xs[map[j].col + 1];
    sol.x[j] = map[j].sign > 0 ? S(map[j].offset + v) : S(map[j].offset - v);
    sol.objective_value += lp.objective[j] * sol.x[j];
  }
  return sol;
}

}  // namespace farkas
