#pragma once

#include <gmpxx.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace farkas {

using Rational = mpq_class;

/// Parses `p/q`, an integer, or a finite decimal (`0.3`, `-1.25`, `2.5e-3`).
/// Decimals are converted exactly. Returns nullopt on malformed input.
inline std::optional<Rational> try_parse_rational(std::string_view text) {
  if (text.empty()) return std::nullopt;
  auto is_digits = [](std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
  };

  bool negative = false;
  std::string_view body = text;
  if (body.front() == '+' || body.front() == '-') {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }

  Rational value;
  if (auto slash = body.find('/'); slash != std::string_view::npos) {
    auto num = body.substr(0, slash);
    auto den = body.substr(slash + 1);
    if (!is_digits(num) || !is_digits(den)) return std::nullopt;
    mpz_class d(std::string(den), 10);
    if (d == 0) return std::nullopt;
    value = Rational(mpz_class(std::string(num), 10), d);
    value.canonicalize();
  } else {
    long exponent = 0;
    if (auto e = body.find_first_of("eE"); e != std::string_view::npos) {
      auto exp_text = body.substr(e + 1);
      bool exp_negative = false;
      if (!exp_text.empty() && (exp_text.front() == '+' || exp_text.front() == '-')) {
        exp_negative = exp_text.front() == '-';
        exp_text.remove_prefix(1);
      }
      if (!is_digits(exp_text) || exp_text.size() > 6) return std::nullopt;
      exponent = std::stol(std::string(exp_text));
      if (exp_negative) exponent = -exponent;
      body = body.substr(0, e);
    }
    std::string_view int_part = body;
    std::string_view frac_part;
    if (auto dot = body.find('.'); dot != std::string_view::npos) {
      int_part = body.substr(0, dot);
      frac_part = body.substr(dot + 1);
    }
    if (int_part.empty() && frac_part.empty()) return std::nullopt;
    if (!int_part.empty() && !is_digits(int_part)) return std::nullopt;
    if (!frac_part.empty() && !is_digits(frac_part)) return std::nullopt;
    std::string digits = std::string(int_part) + std::string(frac_part);
    mpz_class numerator(digits, 10);
    exponent -= static_cast<long>(frac_part.size());
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
    if (exponent >= 0) {
      value = Rational(numerator * scale);
    } else {
      value = Rational(numerator, scale);
      value.canonicalize();
    }
  }
  if (negative) value = -value;
  return value;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

/// Fixed-point rendering with `digits` fractional digits (rounded half away from zero).
inline std::string to_decimal(const Rational& q, int digits) {
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(digits));
  Rational scaled = abs(q) * scale;
  mpz_class rounded = (scaled.get_num() * 2 + scaled.get_den()) / (scaled.get_den() * 2);
  std::string s = rounded.get_str();
  if (digits > 0) {
    if (s.size() <= static_cast<std::size_t>(digits)) {
      s.insert(0, static_cast<std::size_t>(digits) + 1 - s.size(), '0');
    }
    s.insert(s.size() - static_cast<std::size_t>(digits), ".");
  }
  if (q < 0 && rounded != 0) s.insert(0, "-");
  return s;
}

/// Continued-fraction rounding of a double to the last convergent whose
/// denominator does not exceed `max_denominator`.
inline Rational rationalize(double x, std::int64_t max_denominator = 1'000'000'000'000LL) {
  if (!std::isfinite(x)) return Rational(0);
  Rational exact(x);
  mpz_class cap(static_cast<long>(max_denominator));
  // Convergent recurrences seeded with h_{-2}=0, h_{-1}=1, k_{-2}=1, k_{-1}=0.
  mpz_class h_m2 = 0, h_m1 = 1, k_m2 = 1, k_m1 = 0;
  Rational rest = exact;
  Rational best(0);
  for (int iter = 0; iter < 128; ++iter) {
    mpz_class a;
    mpz_fdiv_q(a.get_mpz_t(), rest.get_num_mpz_t(), rest.get_den_mpz_t());
    mpz_class h_new = a * h_m1 + h_m2;
    mpz_class k_new = a * k_m1 + k_m2;
    if (k_new > cap) break;
    best = Rational(h_new, k_new);
    best.canonicalize();
    h_m2 = h_m1;
    h_m1 = h_new;
    k_m2 = k_m1;
    k_m1 = k_new;
    Rational frac = rest - Rational(a);
    if (frac == 0) break;
    rest = 1 / frac;
  }
  return best;
}

}  // namespace farkas
