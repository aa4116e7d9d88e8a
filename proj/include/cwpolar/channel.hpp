#pragma once

// Memoryless observation channels W(y|x) and their composition onto a chain
// whose native output is y = x.

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "cwpolar/error.hpp"
#include "cwpolar/fraction.hpp"
#include "cwpolar/process_model.hpp"

namespace cwpolar {

struct Channel {
  std::string spec;                       // "bsc:0.11", "noiseless", ...
  std::vector<std::string> outputs;
  std::array<std::vector<double>, 2> w;   // w[x][y]
  std::array<std::vector<std::string>, 2> w_text;  // exact forms, may be empty

  std::size_t num_outputs() const { return outputs.size(); }

  static Channel noiseless() {
    return {"noiseless", {"0", "1"}, {{{1.0, 0.0}, {0.0, 1.0}}}, {{{"1", "0"}, {"0", "1"}}}};
  }

  // Y carries no information.
  static Channel constant() { return {"none", {"-"}, {{{1.0}, {1.0}}}, {{{"1"}, {"1"}}}}; }

  static Channel bsc(std::string_view p_text) {
    const Fraction p = Fraction::parse(p_text);
    if (Fraction{1, 1} < p) throw Error(ErrorCode::kBadChannel, "crossover probability above 1");
    const Fraction q = Fraction::make(p.den - p.num, p.den);
    return {"bsc:" + std::string(p_text),
            {"0", "1"},
            {{{q.value(), p.value()}, {p.value(), q.value()}}},
            {{{q.str(), p.str()}, {p.str(), q.str()}}}};
  }

  static Channel bec(std::string_view e_text) {
    const Fraction e = Fraction::parse(e_text);
    if (Fraction{1, 1} < e) throw Error(ErrorCode::kBadChannel, "erasure probability above 1");
    const Fraction q = Fraction::make(e.den - e.num, e.den);
    return {"bec:" + std::string(e_text),
            {"0", "1", "?"},
            {{{q.value(), 0.0, e.value()}, {0.0, q.value(), e.value()}}},
            {{{q.str(), "0", e.str()}, {"0", q.str(), e.str()}}}};
  }

  // noiseless | none | constant | bsc:P | bec:P
  static Channel parse(std::string_view text) {
    if (text == "noiseless" || text == "identity") return noiseless();
    if (text == "none" || text == "constant") return constant();
    if (text.substr(0, 4) == "bsc:") return bsc(text.substr(4));
    if (text.substr(0, 4) == "bec:") return bec(text.substr(4));
    throw Error(ErrorCode::kBadChannel, "unknown channel '" + std::string(text) + "'");
  }

  void validate() const {
    for (int x = 0; x < 2; ++x) {
      if (w[x].size() != outputs.size()) throw Error(ErrorCode::kBadChannel, "channel row has the wrong length");
      double sum = 0.0;
      for (double v : w[x]) {
        if (v < 0.0) throw Error(ErrorCode::kBadChannel, "negative channel probability");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12) {
        throw Error(ErrorCode::kBadChannel, "channel row for x=" + std::to_string(x) + " sums to " + std::to_string(sum));
      }
    }
  }
};

// P(x, y, s' | s) = P_src(x, s' | s) * W(y | x).
inline FimProcess attach_channel(const FimProcess& source, const Channel& channel) {
  channel.validate();
  if (!source.observes_input()) {
    throw Error(ErrorCode::kBadChannel, "source process must emit y = x over {0,1}");
  }
  std::vector<Transition> out;
  for (const auto& t : source.transitions()) {
    for (std::size_t y = 0; y < channel.num_outputs(); ++y) {
      const double wv = channel.w[static_cast<std::size_t>(t.x)][y];
      if (wv <= 0.0) continue;
      std::string text;
      const auto& wt = channel.w_text[static_cast<std::size_t>(t.x)];
      if (!t.prob_text.empty() && y < wt.size() && !wt[y].empty()) {
        text = (Fraction::parse(t.prob_text) * Fraction::parse(wt[y])).str();
      }
      out.push_back({t.from, t.x, static_cast<int>(y), t.to, t.prob * wv, std::move(text)});
    }
  }
  return FimProcess(source.states(), channel.outputs, std::move(out), source.tags(), source.meta());
}

}  // namespace cwpolar
