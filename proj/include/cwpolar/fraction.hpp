#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "cwpolar/error.hpp"

namespace cwpolar {

// Nonnegative rational in lowest terms. Parses "2/3", "0.125", "1".
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Fraction make(std::int64_t n, std::int64_t d) {
    if (d == 0) throw Error(ErrorCode::kParseError, "zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
    return g == 0 ? Fraction{0, 1} : Fraction{n / g, d / g};
  }

  static Fraction parse(std::string_view text) {
    auto digits = [&](std::string_view s) -> std::int64_t {
      if (s.empty()) throw Error(ErrorCode::kParseError, "bad number '" + std::string(text) + "'");
      std::int64_t v = 0;
      for (char c : s) {
        if (c < '0' || c > '9') throw Error(ErrorCode::kParseError, "bad number '" + std::string(text) + "'");
        if (v > (INT64_MAX - 9) / 10) throw Error(ErrorCode::kParseError, "number too long '" + std::string(text) + "'");
        v = v * 10 + (c - '0');
      }
      return v;
    };
    if (const auto slash = text.find('/'); slash != std::string_view::npos) {
      return make(digits(text.substr(0, slash)), digits(text.substr(slash + 1)));
    }
    if (const auto dot = text.find('.'); dot != std::string_view::npos) {
      const auto whole = text.substr(0, dot);
      const auto frac = text.substr(dot + 1);
      if (frac.size() > 17) throw Error(ErrorCode::kParseError, "too many decimals '" + std::string(text) + "'");
      std::int64_t scale = 1;
      for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
      const std::int64_t w = whole.empty() ? 0 : digits(whole);
      return make(w * scale + (frac.empty() ? 0 : digits(frac)), scale);
    }
    return make(digits(text), 1);
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }

  friend Fraction operator*(const Fraction& a, const Fraction& b) {
    const __int128 n = static_cast<__int128>(a.num) * b.num;
    const __int128 d = static_cast<__int128>(a.den) * b.den;
    __int128 x = n < 0 ? -n : n;
    __int128 y = d;
    while (y != 0) {
      const __int128 t = x % y;
      x = y;
      y = t;
    }
    const __int128 g = x == 0 ? 1 : x;
    if (n / g > INT64_MAX || d / g > INT64_MAX) throw Error(ErrorCode::kParseError, "fraction overflow");
    return Fraction{static_cast<std::int64_t>(n / g), static_cast<std::int64_t>(d / g)};
  }

  friend bool operator==(const Fraction& a, const Fraction& b) { return a.num == b.num && a.den == b.den; }
  friend bool operator<(const Fraction& a, const Fraction& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator<=(const Fraction& a, const Fraction& b) { return !(b < a); }
};

}  // namespace cwpolar
