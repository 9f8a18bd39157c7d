#pragma once

// Farkas certificates for threshold reachability properties: generation
// through a floating-point solve, rationalization, closed-form repair and an
// exact fallback; exact verification; scheduler/frequency conversion.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "farkas/error.hpp"
#include "farkas/linsys.hpp"
#include "farkas/lp.hpp"
#include "farkas/model.hpp"
#include "farkas/rational.hpp"

namespace farkas {

/// z-certificates live over S, y-certificates over the state-action pairs M.
enum class CertificateKind { z, y };

struct FarkasCertificate {
  PropertySpec prop;
  CertificateKind kind = CertificateKind::z;
  std::vector<Rational> vector;
  bool operator==(const FarkasCertificate&) const = default;
};

/// Which stage of the generation pipeline produced a certificate.
enum class CertificateSource { rounded, repaired, exact };

inline CertificateKind certificate_kind(const PropertySpec& p) {
  const bool lower = is_lower_bound(p.relation);
  return (p.direction == Direction::min) == lower ? CertificateKind::z : CertificateKind::y;
}

struct VerificationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

namespace detail {

inline std::string pair_name(const ReachMdp& m, StateAction p) {
  return "(" + std::to_string(p.state) + "," + m.choice(p.state, p.action).action + ")";
}

inline Rational dot(const std::vector<Rational>& x, const std::vector<Rational>& y) {
  Rational acc(0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (sgn(x[i]) != 0 && sgn(y[i]) != 0) acc += x[i] * y[i];
  }
  return acc;
}

inline std::vector<Rational> times_a(const FarkasSystem& fs, const std::vector<Rational>& z) {
  std::vector<Rational> out(fs.row_count(), Rational(0));
  for (std::size_t r = 0; r < fs.row_count(); ++r) {
    for (const auto& e : fs.a[r]) out[r] += e.value * z[e.col];
  }
  return out;
}

inline std::vector<Rational> a_times(const FarkasSystem& fs, const std::vector<Rational>& y) {
  std::vector<Rational> out(fs.col_count(), Rational(0));
  for (std::size_t r = 0; r < fs.row_count(); ++r) {
    if (sgn(y[r]) == 0) continue;
    for (const auto& e : fs.a[r]) out[e.col] += y[r] * e.value;
  }
  return out;
}

}  // namespace detail

/// Evaluates the certificate condition exactly, from the transition function
/// alone. Every violated scalar inequality is listed in the report.
inline VerificationReport verify_certificate(const ReachMdp& m, const FarkasCertificate& cert) {
  const auto fs = build_farkas_system(m);
  const std::size_t dim = cert.kind == CertificateKind::z ? fs.col_count() : fs.row_count();
  if (cert.vector.size() != dim) {
    throw DimensionMismatch("certificate has " + std::to_string(cert.vector.size()) + " entries, expected " +
                            std::to_string(dim));
  }
  if (cert.kind != certificate_kind(cert.prop)) {
    throw DimensionMismatch("certificate kind does not match its property");
  }
  VerificationReport rep;
  auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.violations.push_back(std::move(msg));
  };
  const auto& p = cert.prop;
  const auto& v = cert.vector;
  const std::string rel(relation_symbol(p.relation));
  if (cert.kind == CertificateKind::z) {
    const bool upper = p.direction == Direction::min;  // Az <= b
    auto az = detail::times_a(fs, v);
    for (std::size_t r = 0; r < fs.row_count(); ++r) {
      bool ok = upper ? az[r] <= fs.b[r] : az[r] >= fs.b[r];
      if (!ok) {
        fail("row " + detail::pair_name(m, fs.rows[r]) + " of Az " + (upper ? "<=" : ">=") +
             " b: " + to_string(az[r]) + " vs " + to_string(fs.b[r]) + " (excess " +
             to_string(abs(Rational(az[r] - fs.b[r]))) + ")");
      }
    }
    if (!compare(v[fs.initial_col], p.relation, p.lambda)) {
      fail("z(s0) " + rel + " lambda: " + to_string(v[fs.initial_col]) + " vs " + to_string(p.lambda));
    }
  } else {
    const bool upper = p.direction == Direction::max;  // yA <= delta
    for (std::size_t r = 0; r < fs.row_count(); ++r) {
      if (sgn(v[r]) < 0) fail("y" + detail::pair_name(m, fs.rows[r]) + " >= 0: " + to_string(v[r]));
    }
    auto ya = detail::a_times(fs, v);
    for (std::size_t c = 0; c < fs.col_count(); ++c) {
      bool ok = upper ? ya[c] <= fs.delta0[c] : ya[c] >= fs.delta0[c];
      if (!ok) {
        fail("column " + std::to_string(fs.cols[c]) + " of yA " + (upper ? "<=" : ">=") + " delta: " +
             to_string(ya[c]) + " vs " + to_string(fs.delta0[c]));
      }
    }
    Rational yb = detail::dot(v, fs.b);
    if (!compare(yb, p.relation, p.lambda)) {
      fail("y.b " + rel + " lambda: " + to_string(yb) + " vs " + to_string(p.lambda));
    }
  }
  return rep;
}

/// Closed-form slack repair: z - eps (min, lower bound), z + eps (max, upper
/// bound), (1 - eps) y (max, lower bound), (1 + eps) y (min, upper bound).
/// Throws RepairFailed if the result does not verify.
inline FarkasCertificate repair_certificate(const ReachMdp& m, const FarkasCertificate& cert, const Rational& eps) {
  if (eps < 0) throw Error("repair margin must be nonnegative");
  FarkasCertificate out = cert;
  const bool min = cert.prop.direction == Direction::min;
  if (cert.kind == CertificateKind::z) {
    for (auto& x : out.vector) x += min ? Rational(-eps) : eps;
  } else {
    const Rational factor = min ? Rational(1 + eps) : Rational(1 - eps);
    for (auto& x : out.vector) x *= factor;
  }
  auto rep = verify_certificate(m, out);
  if (!rep.ok) {
    std::string msg = "repaired certificate does not verify:";
    for (const auto& v : rep.violations) msg += " [" + v + "]";
    throw RepairFailed(msg);
  }
  return out;
}

/// S(s)(a) = y(s,a) / sum_b y(s,b); the first action where the sum is zero.
inline MRScheduler scheduler_from_y(const ReachMdp& m, const std::vector<Rational>& y) {
  const auto fs = build_farkas_system(m);
  if (y.size() != fs.row_count()) throw DimensionMismatch("y must have one entry per state-action pair");
  MRScheduler sched;
  sched.weights.resize(m.state_count());
  std::size_t r = 0;
  for (std::size_t s : fs.cols) {
    const std::size_t k = m.choices(s).size();
    Rational total(0);
    for (std::size_t a = 0; a < k; ++a) {
      if (sgn(y[r + a]) < 0) throw Error("negative entry in y");
      total += y[r + a];
    }
    auto& w = sched.weights[s];
    w.assign(k, Rational(0));
    if (sgn(total) == 0) {
      w[0] = 1;
    } else {
      for (std::size_t a = 0; a < k; ++a) w[a] = y[r + a] / total;
    }
    r += k;
  }
  return sched;
}

/// Expected number of times each state-action pair is taken under `sched`:
/// solves h (I - Q) = delta_s0 exactly and returns y(s,a) = h(s) sched(s)(a).
inline std::vector<Rational> frequencies_from_scheduler(const ReachMdp& m, const MRScheduler& sched) {
  check_scheduler(m, sched);
  require_no_trap(m);
  const auto fs = build_farkas_system(m);
  const std::size_t n = fs.col_count();
  // Transposed system (I - Q)^T h = delta.
  std::vector<Rational> mat(n * n, Rational(0));
  for (std::size_t c = 0; c < n; ++c) mat[c * n + c] = 1;
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t s = fs.cols[c];
    for (std::size_t a = 0; a < m.choices(s).size(); ++a) {
      const Rational& w = sched.weights[s][a];
      if (sgn(w) == 0) continue;
      for (const auto& tr : m.choice(s, a).transitions) {
        const std::size_t t = fs.col_of_state[tr.target];
        if (t != npos) mat[t * n + c] -= w * tr.probability;
      }
    }
  }
  auto h = solve_dense(std::move(mat), fs.delta0);
  std::vector<Rational> y(fs.row_count(), Rational(0));
  for (std::size_t r = 0; r < fs.row_count(); ++r) {
    auto [s, a] = fs.rows[r];
    y[r] = h[fs.col_of_state[s]] * sched.weights[s][a];
  }
  return y;
}

namespace detail {

inline std::vector<Rational> rationalize_all(const std::vector<double>& xs) {
  std::vector<Rational> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(rationalize(x));
  return out;
}

inline std::vector<double> float_y_certificate(const FarkasSystem& fs, Direction dir) {
  LinearProgram<double> lp(fs.row_count(), dir == Direction::max ? LpSense::maximize : LpSense::minimize);
  for (std::size_t r = 0; r < fs.row_count(); ++r) lp.objective[r] = fs.b[r].get_d();
  std::vector<std::vector<std::pair<std::size_t, double>>> cols(fs.col_count());
  for (std::size_t r = 0; r < fs.row_count(); ++r) {
    for (const auto& e : fs.a[r]) cols[e.col].emplace_back(r, e.value.get_d());
  }
  const RowRelation rel = dir == Direction::max ? RowRelation::le : RowRelation::ge;
  for (std::size_t c = 0; c < fs.col_count(); ++c) lp.add_row(cols[c], rel, fs.delta0[c].get_d());
  auto sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal) return {};
  return sol.x;
}

}  // namespace detail

/// Produces an exactly verified certificate for `prop`, or throws
/// PropertyFalse / StrictInfeasible when the property does not hold.
inline FarkasCertificate generate_certificate(const ReachMdp& m, const PropertySpec& prop,
                                              CertificateSource* source = nullptr) {
  require_validated(m);
  const auto exact = solve_reach_exact(m, prop.direction);
  const auto fs = build_farkas_system(m);
  const Rational pr = exact.values[fs.initial_col];
  if (!compare(pr, prop.relation, prop.lambda)) {
    const std::string msg = "property " + to_string(prop) + " does not hold: Pr = " + to_string(pr);
    if (pr == prop.lambda) throw StrictInfeasible(msg);
    throw PropertyFalse(msg);
  }

  FarkasCertificate cert{prop, certificate_kind(prop), {}};
  auto accept = [&](CertificateSource s) {
    if (source) *source = s;
    return cert;
  };

  // 1. Floating-point solve, rounded to nearby rationals.
  std::vector<double> approx;
  if (cert.kind == CertificateKind::z) {
    approx = solve_reach(make_reach_system<double>(m), prop.direction).values;
  } else {
    approx = detail::float_y_certificate(fs, prop.direction);
  }
  if (!approx.empty()) {
    cert.vector = detail::rationalize_all(approx);
    if (cert.kind == CertificateKind::y) {
      for (auto& x : cert.vector) {
        if (x < 0) x = 0;
      }
    }
    if (verify_certificate(m, cert).ok) return accept(CertificateSource::rounded);
    // 2. Closed-form repair with a small margin.
    try {
      cert = repair_certificate(m, cert, Rational(1, 1'000'000'000));
      return accept(CertificateSource::repaired);
    } catch (const RepairFailed&) {
    }
  }

  // 3. Exact fallback from the exact optimal scheduler.
  if (cert.kind == CertificateKind::z) {
    cert.vector = exact.values;
  } else {
    std::vector<std::size_t> policy(m.state_count(), 0);
    for (std::size_t c = 0; c < fs.col_count(); ++c) policy[fs.cols[c]] = exact.policy[c];
    cert.vector = frequencies_from_scheduler(m, MRScheduler::deterministic(m, policy));
  }
  if (!verify_certificate(m, cert).ok) throw InternalError("exact certificate failed verification");
  return accept(CertificateSource::exact);
}

// ---------------------------------------------------------------------------
// Certificate file format

inline std::string serialize_certificate(const FarkasCertificate& cert) {
  std::ostringstream out;
  out << "farkas-certificate\n";
  out << "property: " << to_string(cert.prop.direction) << ' ' << relation_keyword(cert.prop.relation) << ' '
      << to_string(cert.prop.lambda) << '\n';
  out << "kind: " << (cert.kind == CertificateKind::z ? 'z' : 'y') << '\n';
  out << "dimension: " << cert.vector.size() << '\n';
  for (std::size_t i = 0; i < cert.vector.size(); ++i) {
    if (sgn(cert.vector[i]) != 0) out << i << ' ' << to_string(cert.vector[i]) << '\n';
  }
  return out.str();
}

/// Reads a certificate. Without a `dimension:` line the vector is sized by
/// `fallback_dimension` (typically taken from the model).
inline FarkasCertificate parse_certificate(std::string_view text, std::optional<std::size_t> fallback_dimension = {}) {
  detail::Lines lines(text);
  std::string_view raw;
  bool header = false;
  std::optional<PropertySpec> prop;
  std::optional<CertificateKind> kind;
  std::optional<std::size_t> dim;
  std::vector<std::pair<std::size_t, Rational>> entries;
  while (lines.next(raw)) {
    auto tokens = detail::split_ws(detail::strip_comment(raw));
    if (tokens.empty()) continue;
    const std::size_t ln = lines.number();
    if (!header) {
      if (tokens.size() != 1 || tokens[0] != "farkas-certificate") throw ParseError(ln, "expected 'farkas-certificate'");
      header = true;
    } else if (tokens[0] == "property:") {
      if (tokens.size() != 4) throw ParseError(ln, "expected 'property: <min|max> <ge|gt|le|lt> <rational>'");
      PropertySpec p;
      if (tokens[1] == "min") {
        p.direction = Direction::min;
      } else if (tokens[1] == "max") {
        p.direction = Direction::max;
      } else {
        throw ParseError(ln, "direction must be min or max");
      }
      auto rel = relation_from_keyword(tokens[2]);
      if (!rel) throw ParseError(ln, "relation must be ge, gt, le or lt");
      p.relation = *rel;
      auto lambda = try_parse_rational(tokens[3]);
      if (!lambda || *lambda < 0 || *lambda > 1) throw ParseError(ln, "threshold must be a rational in [0,1]");
      p.lambda = *lambda;
      prop = p;
    } else if (tokens[0] == "kind:") {
      if (tokens.size() != 2 || (tokens[1] != "z" && tokens[1] != "y")) throw ParseError(ln, "kind must be z or y");
      kind = tokens[1] == "z" ? CertificateKind::z : CertificateKind::y;
    } else if (tokens[0] == "dimension:") {
      if (tokens.size() != 2) throw ParseError(ln, "expected 'dimension: <n>'");
      dim = detail::parse_index(tokens[1]);
      if (!dim) throw ParseError(ln, "malformed dimension");
    } else {
      if (tokens.size() != 2) throw ParseError(ln, "expected '<index> <rational>'");
      auto idx = detail::parse_index(tokens[0]);
      auto val = try_parse_rational(tokens[1]);
      if (!idx || !val) throw ParseError(ln, "malformed entry");
      entries.emplace_back(*idx, *val);
    }
  }
  if (!header || !prop || !kind) throw ParseError(lines.number(), "incomplete certificate header");
  if (!dim) dim = fallback_dimension;
  if (!dim) throw ParseError(lines.number(), "certificate dimension unknown");
  FarkasCertificate cert{*prop, *kind, std::vector<Rational>(*dim, Rational(0))};
  for (const auto& [i, v] : entries) {
    if (i >= *dim) throw DimensionMismatch("certificate index " + std::to_string(i) + " out of range");
    cert.vector[i] = v;
  }
  return cert;
}

}  // namespace farkas
