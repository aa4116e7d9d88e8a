#pragma once

// Weight-constraint Markov chains: prefix tree, condensed (phase, weight)
// chain, modular-weight chain and weight-window chain.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cwpolar/error.hpp"
#include "cwpolar/fraction.hpp"
#include "cwpolar/process_model.hpp"

namespace cwpolar {

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    // r * (n - k + i) / i stays exact because r * (n-k+i) = C(n-k+i, i) * i.
    const auto num = static_cast<unsigned __int128>(r) * static_cast<unsigned>(n - k + i);
    r = static_cast<std::uint64_t>(num / static_cast<unsigned>(i));
  }
  return r;
}

namespace detail {

inline std::string ratio_text(std::uint64_t num, std::uint64_t den) {
  return Fraction::make(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)).str();
}

inline Transition exact_edge(int from, int x, int to, std::uint64_t num, std::uint64_t den) {
  return {from, x, x, to, static_cast<double>(num) / static_cast<double>(den), ratio_text(num, den)};
}

inline std::string phase_weight_label(int phase, int weight) {
  return "(" + std::to_string(phase) + "," + std::to_string(weight) + ")";
}

inline void require_fraction_weight(int b, int a) {
  if (b < 2 || a <= 0 || a >= b) {
    throw Error(ErrorCode::kBadWeight, "need 0 < a < b, got a=" + std::to_string(a) + " b=" + std::to_string(b));
  }
  if (b > 62) throw Error(ErrorCode::kTooLarge, "period above 62 overflows exact counts");
}

}  // namespace detail

// All prefixes of length < b that extend to a length-b word of weight a.
inline FimProcess build_prefix_chain(int b, int a) {
  detail::require_fraction_weight(b, a);
  if (b > 20) throw Error(ErrorCode::kTooLarge, "prefix chain limited to b <= 20");
  std::vector<std::string> names{"ε"};
  std::vector<std::pair<int, int>> len_wt{{0, 0}};
  std::vector<std::string> prefixes{""};
  std::map<std::string, int> index{{"", 0}};
  for (std::size_t head = 0; head < prefixes.size(); ++head) {
    const auto [len, wt] = len_wt[head];
    if (len + 1 >= b) continue;
    for (int x = 0; x < 2; ++x) {
      if (binomial(b - len - 1, a - wt - x) == 0) continue;
      const std::string child = prefixes[head] + static_cast<char>('0' + x);
      index.emplace(child, static_cast<int>(prefixes.size()));
      prefixes.push_back(child);
      names.push_back(child);
      len_wt.emplace_back(len + 1, wt + x);
    }
  }
  std::vector<Transition> trans;
  std::vector<StateTag> tags;
  for (std::size_t s = 0; s < prefixes.size(); ++s) {
    const auto [len, wt] = len_wt[s];
    tags.push_back({len, wt});
    const std::uint64_t den = binomial(b - len, a - wt);
    for (int x = 0; x < 2; ++x) {
      const std::uint64_t num = binomial(b - len - 1, a - wt - x);
      if (num == 0) continue;
      const int to = len + 1 == b ? 0 : index.at(prefixes[s] + static_cast<char>('0' + x));
      trans.push_back(detail::exact_edge(static_cast<int>(s), x, to, num, den));
    }
  }
  return FimProcess(std::move(names), {"0", "1"}, std::move(trans), std::move(tags),
                    ChainMeta{ChainKind::kPrefix, b, a, Fraction::make(a, b), Fraction::make(a, b)});
}

namespace detail {

// Condensed chain over (phase, weight) with count(phase, w) completions;
// count(b, w) is 1 when w is an admissible period weight.
inline FimProcess build_counted_chain(int b, const std::vector<char>& admissible_total, ChainMeta meta) {
  auto count = [&](int phase, int w) -> std::uint64_t {
    std::uint64_t c = 0;
    for (int total = 0; total <= b; ++total) {
      if (admissible_total[static_cast<std::size_t>(total)]) c += binomial(b - phase, total - w);
    }
    return c;
  };
  std::vector<std::string> names;
  std::vector<StateTag> tags;
  std::map<std::pair<int, int>, int> index;
  for (int phase = 0; phase < b; ++phase) {
    for (int w = 0; w <= phase; ++w) {
      if (count(phase, w) == 0) continue;
      index[{phase, w}] = static_cast<int>(names.size());
      names.push_back(phase_weight_label(phase, w));
      tags.push_back({phase, w});
    }
  }
  std::vector<Transition> trans;
  for (const auto& [key, s] : index) {
    const auto [phase, w] = key;
    const std::uint64_t den = count(phase, w);
    for (int x = 0; x < 2; ++x) {
      const std::uint64_t num = phase + 1 == b ? admissible_total[static_cast<std::size_t>(w + x)]
                                               : count(phase + 1, w + x);
      if (num == 0) continue;
      const int to = phase + 1 == b ? index.at({0, 0}) : index.at({phase + 1, w + x});
      trans.push_back(exact_edge(s, x, to, num, den));
    }
  }
  return FimProcess(std::move(names), {"0", "1"}, std::move(trans), std::move(tags), meta);
}

}  // namespace detail

// Prefix-tree states of equal phase and weight merged.
inline FimProcess build_condensed_chain(int b, int a) {
  detail::require_fraction_weight(b, a);
  std::vector<char> admissible(static_cast<std::size_t>(b) + 1, 0);
  admissible[static_cast<std::size_t>(a)] = 1;
  return detail::build_counted_chain(b, admissible,
                                     ChainMeta{ChainKind::kCondensed, b, a, Fraction::make(a, b), Fraction::make(a, b)});
}

// Period weight anywhere in [ceil(alpha b), floor(beta b)].
inline FimProcess build_window_chain(int b, Fraction alpha, Fraction beta) {
  if (b < 1 || b > 62) throw Error(ErrorCode::kBadWeight, "window chain needs 1 <= b <= 62");
  if (beta < alpha || Fraction{1, 1} < beta) throw Error(ErrorCode::kBadWeight, "need 0 <= alpha <= beta <= 1");
  const auto lo = static_cast<int>((alpha.num * b + alpha.den - 1) / alpha.den);
  const auto hi = static_cast<int>((beta.num * b) / beta.den);
  if (lo > hi) throw Error(ErrorCode::kBadWeight, "weight window is empty for this period");
  std::vector<char> admissible(static_cast<std::size_t>(b) + 1, 0);
  for (int t = lo; t <= hi; ++t) admissible[static_cast<std::size_t>(t)] = 1;
  return detail::build_counted_chain(b, admissible, ChainMeta{ChainKind::kWindow, b, 0, alpha, beta});
}

// Weight modulo b: x=0 stays, x=1 advances, every edge 1/2.
inline FimProcess build_mod_chain(int b) {
  if (b < 1) throw Error(ErrorCode::kBadWeight, "mod chain needs b >= 1");
  std::vector<std::string> names;
  std::vector<StateTag> tags;
  std::vector<Transition> trans;
  for (int j = 0; j < b; ++j) {
    names.push_back(std::to_string(j));
    tags.push_back({std::nullopt, j});
    trans.push_back({j, 0, 0, j, 0.5, "1/2"});
    trans.push_back({j, 1, 1, (j + 1) % b, 0.5, "1/2"});
  }
  return FimProcess(std::move(names), {"0", "1"}, std::move(trans), std::move(tags),
                    ChainMeta{ChainKind::kMod, b, 0, Fraction{0, 1}, Fraction{1, 1}});
}

// ---------------------------------------------------------------------------
// Weight constraints and terminal sets

enum class Rounding { kFloor, kCeil };

struct WeightConstraint {
  enum class Kind { kExactFraction, kWindow, kModResidue };
  Kind kind = Kind::kExactFraction;
  int a = 0;
  int b = 1;
  Fraction alpha{0, 1};
  Fraction beta{1, 1};
  Rounding rounding = Rounding::kFloor;

  static WeightConstraint exact_fraction(int a, int b, Rounding r = Rounding::kFloor) {
    if (b < 1 || a < 0 || a > b) throw Error(ErrorCode::kBadWeight, "exact fraction needs 0 <= a <= b");
    return {Kind::kExactFraction, a, b, Fraction::make(a, b), Fraction::make(a, b), r};
  }
  static WeightConstraint window(Fraction lo, Fraction hi) {
    if (hi < lo) throw Error(ErrorCode::kBadWeight, "window needs alpha <= beta");
    return {Kind::kWindow, 0, 1, lo, hi, Rounding::kFloor};
  }
  static WeightConstraint mod_residue(int a, int b) {
    if (b < 1 || a < 0 || a >= b) throw Error(ErrorCode::kBadWeight, "residue needs 0 <= a < b");
    return {Kind::kModResidue, a, b, Fraction{0, 1}, Fraction{1, 1}, Rounding::kFloor};
  }

  // Integer weight range allowed at length n (exact fraction and window).
  std::pair<std::int64_t, std::int64_t> weight_range(std::int64_t n) const {
    if (kind == Kind::kExactFraction) {
      const std::int64_t num = static_cast<std::int64_t>(a) * n;
      const std::int64_t t = rounding == Rounding::kFloor ? num / b : (num + b - 1) / b;
      return {t, t};
    }
    const std::int64_t lo = (alpha.num * n + alpha.den - 1) / alpha.den;
    const std::int64_t hi = (beta.num * n) / beta.den;
    return {lo, hi};
  }

  bool satisfied(std::int64_t weight, std::int64_t n) const {
    if (kind == Kind::kModResidue) return weight % b == a;
    const auto [lo, hi] = weight_range(n);
    return lo <= weight && weight <= hi;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::kExactFraction: return "weight=" + Fraction::make(a, b).str() + "*N";
      case Kind::kWindow: return "weight in [" + alpha.str() + "*N, " + beta.str() + "*N]";
      case Kind::kModResidue: return "weight=" + std::to_string(a) + " mod " + std::to_string(b);
    }
    return "";
  }
};

// Natural constraint of a builder-made chain.
inline WeightConstraint natural_constraint(const FimProcess& chain, int residue = 0,
                                           Rounding rounding = Rounding::kFloor) {
  const auto& m = chain.meta();
  switch (m.kind) {
    case ChainKind::kPrefix:
    case ChainKind::kCondensed: return WeightConstraint::exact_fraction(m.a, m.b, rounding);
    case ChainKind::kWindow: return WeightConstraint::window(m.alpha, m.beta);
    case ChainKind::kMod: return WeightConstraint::mod_residue(residue, m.b);
    case ChainKind::kCustom: break;
  }
  throw Error(ErrorCode::kBadArgument, "custom chains carry no weight constraint");
}

// Terminal states that make every length-n path from the root satisfy c.
inline std::vector<int> final_state_set(const FimProcess& chain, const WeightConstraint& c, std::int64_t n) {
  const auto& m = chain.meta();
  std::vector<int> out;
  if (m.kind == ChainKind::kMod) {
    if (c.kind != WeightConstraint::Kind::kModResidue || c.b != m.b) {
      throw Error(ErrorCode::kBadArgument, "mod chain pairs with a residue constraint of the same modulus");
    }
    out.push_back(c.a);
    return out;
  }
  if (m.kind == ChainKind::kCustom) throw Error(ErrorCode::kBadArgument, "custom chains carry no weight bookkeeping");
  if (c.kind == WeightConstraint::Kind::kModResidue) {
    throw Error(ErrorCode::kBadArgument, "residue constraint needs a mod chain");
  }
  const std::int64_t periods = n / m.b;
  const auto rem = static_cast<int>(n % m.b);
  // Period weights range over [plo, phi] per completed period.
  std::int64_t plo = m.a;
  std::int64_t phi = m.a;
  if (m.kind == ChainKind::kWindow) {
    plo = (m.alpha.num * m.b + m.alpha.den - 1) / m.alpha.den;
    phi = (m.beta.num * m.b) / m.beta.den;
  }
  const auto [lo, hi] = c.weight_range(n);
  for (std::size_t s = 0; s < chain.num_states(); ++s) {
    const auto& tag = chain.tags()[s];
    if (!tag.phase || !tag.weight || *tag.phase != rem) continue;
    if (periods * plo + *tag.weight >= lo && periods * phi + *tag.weight <= hi) out.push_back(static_cast<int>(s));
  }
  if (out.empty()) {
    throw Error(ErrorCode::kUnsatisfiable, "no terminal state meets '" + c.describe() + "' at N=" + std::to_string(n));
  }
  return out;
}

// Exhaustive P(X_1^N = x | A_N), y marginalized, keyed by the bit string.
inline std::map<std::string, double> enumerate_support(const FimProcess& chain, const StateEvent& event, int n) {
  if (n < 0 || n > 20) throw Error(ErrorCode::kTooLarge, "support enumeration limited to N <= 20");
  const auto pi = stationary_distribution(chain);
  const auto prior = start_prior(pi, event);
  const std::size_t ns = chain.num_states();
  std::map<std::string, double> out;
  double total = 0.0;
  std::string bits(static_cast<std::size_t>(n), '0');
  std::vector<std::vector<double>> stack(static_cast<std::size_t>(n) + 1, std::vector<double>(ns, 0.0));
  stack[0] = prior;
  auto dfs = [&](auto&& self, int t) -> void {
    const auto& cur = stack[static_cast<std::size_t>(t)];
    if (t == n) {
      double p = 0.0;
      for (std::size_t s = 0; s < ns; ++s) {
        if (event.end[s]) p += cur[s];
      }
      if (p > 0.0) {
        out[bits] += p;
        total += p;
      }
      return;
    }
    for (int x = 0; x < 2; ++x) {
      auto& next = stack[static_cast<std::size_t>(t) + 1];
      std::fill(next.begin(), next.end(), 0.0);
      bool any = false;
      for (std::size_t s = 0; s < ns; ++s) {
        if (cur[s] == 0.0) continue;
        for (const auto& tr : chain.outgoing(static_cast<int>(s))) {
          if (tr.x != x || tr.prob == 0.0) continue;
          next[static_cast<std::size_t>(tr.to)] += cur[s] * tr.prob;
          any = true;
        }
      }
      if (!any) continue;
      bits[static_cast<std::size_t>(t)] = static_cast<char>('0' + x);
      self(self, t + 1);
    }
  };
  dfs(dfs, 0);
  if (!(total > 0.0)) throw Error(ErrorCode::kEmptyEvent, "boundary event has probability zero");
  for (auto& [word, p] : out) p /= total;
  return out;
}

inline std::int64_t hamming_weight(const std::vector<int>& bits) {
  std::int64_t w = 0;
  for (int b : bits) w += b;
  return w;
}

}  // namespace cwpolar
