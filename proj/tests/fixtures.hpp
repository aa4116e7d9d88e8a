#pragma once

#include <random>
#include <string>
#include <vector>

#include "cwpolar/cwpolar.hpp"

namespace fixtures {

using cwpolar::FimProcess;
using cwpolar::Transition;

inline FimProcess one_state_uniform() {
  return FimProcess({"s"}, {"0", "1"}, {{0, 0, 0, 0, 0.5, "1/2"}, {0, 1, 1, 0, 0.5, "1/2"}});
}

inline FimProcess one_state_zero() { return FimProcess({"s"}, {"0", "1"}, {{0, 0, 0, 0, 1.0, "1"}}); }

inline FimProcess disconnected() {
  return FimProcess({"a", "b"}, {"0", "1"}, {{0, 0, 0, 0, 1.0, "1"}, {1, 1, 1, 1, 1.0, "1"}});
}

// Deterministic ring of length p emitting zeros.
inline FimProcess ring(int p) {
  std::vector<std::string> names;
  std::vector<Transition> tr;
  for (int i = 0; i < p; ++i) {
    names.push_back("r" + std::to_string(i));
    tr.push_back({i, 0, 0, (i + 1) % p, 1.0, "1"});
  }
  return FimProcess(names, {"0", "1"}, tr);
}

// Dense random chain: every state reaches every state on some bit, with
// observation noise drawn per edge. Aperiodic thanks to self loops.
inline FimProcess random_chain(int states, unsigned seed, int obs = 2) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  std::vector<std::string> names;
  std::vector<std::string> symbols;
  for (int s = 0; s < states; ++s) names.push_back("q" + std::to_string(s));
  for (int y = 0; y < obs; ++y) symbols.push_back(std::to_string(y));
  std::vector<Transition> tr;
  for (int s = 0; s < states; ++s) {
    std::vector<Transition> row;
    double total = 0.0;
    for (int t = 0; t < states; ++t) {
      const int x = static_cast<int>(rng() % 2);
      for (int y = 0; y < obs; ++y) {
        const double w = unif(rng);
        row.push_back({s, x, y, t, w, ""});
        total += w;
      }
    }
    for (auto& r : row) {
      r.prob /= total;
      tr.push_back(r);
    }
  }
  return FimProcess(names, symbols, tr);
}

// Two-state hidden chain with bits biased by state and noisy observations.
inline FimProcess two_state_hmm() {
  std::vector<Transition> tr;
  const double stay[2] = {0.8, 0.6};
  const double one[2] = {0.2, 0.7};
  const double flip = 0.1;
  for (int s = 0; s < 2; ++s) {
    for (int t = 0; t < 2; ++t) {
      const double pt = t == s ? stay[s] : 1.0 - stay[s];
      for (int x = 0; x < 2; ++x) {
        const double px = x ? one[s] : 1.0 - one[s];
        for (int y = 0; y < 2; ++y) tr.push_back({s, x, y, t, pt * px * (y == x ? 1.0 - flip : flip), ""});
      }
    }
  }
  return FimProcess({"g", "b"}, {"0", "1"}, tr);
}

inline std::vector<int> bits_of(std::uint64_t v, std::size_t n) {
  std::vector<int> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = static_cast<int>((v >> t) & 1U);
  return out;
}

inline std::string word(const std::vector<int>& x) {
  std::string s;
  for (int b : x) s += static_cast<char>('0' + b);
  return s;
}

}  // namespace fixtures
