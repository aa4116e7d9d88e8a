#pragma once

// Exact sampling of (x, y, s) paths conditioned on S_0 in start, S_N in end:
// backward tail probabilities, then a reweighted forward pass.

#include <cstdint>
#include <random>
#include <vector>

#include "cwpolar/error.hpp"
#include "cwpolar/process_model.hpp"

namespace cwpolar {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Independent stream for (seed, stream) pairs.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

struct SampledPath {
  std::vector<int> x;
  std::vector<int> y;
  std::vector<int> s;  // s_0 .. s_N
};

class PathSampler {
 public:
  PathSampler(const FimProcess& proc, const StationaryDistribution& pi, const StateEvent& event, std::size_t n)
      : proc_(&proc), n_(n), prior_(start_prior(pi, event)) {
    const std::size_t ns = proc.num_states();
    tail_.assign(n + 1, std::vector<double>(ns, 0.0));
    for (std::size_t s = 0; s < ns; ++s) tail_[n][s] = event.end.at(s) ? 1.0 : 0.0;
    for (std::size_t t = n; t-- > 0;) {
      double hi = 0.0;
      for (std::size_t s = 0; s < ns; ++s) {
        double v = 0.0;
        for (const auto& tr : proc.outgoing(static_cast<int>(s))) v += tr.prob * tail_[t + 1][static_cast<std::size_t>(tr.to)];
        tail_[t][s] = v;
        hi = std::max(hi, v);
      }
      if (hi > 0.0) {
        for (auto& v : tail_[t]) v /= hi;
      }
    }
    start_weight_.resize(ns);
    double total = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      start_weight_[s] = prior_[s] * tail_[0][s];
      total += start_weight_[s];
    }
    if (!(total > 0.0)) throw Error(ErrorCode::kEmptyEvent, "boundary event has probability zero");
  }

  std::size_t length() const { return n_; }

  SampledPath sample(Rng& rng) const {
    SampledPath path;
    path.x.resize(n_);
    path.y.resize(n_);
    path.s.resize(n_ + 1);
    int s = pick_start(rng);
    path.s[0] = s;
    for (std::size_t t = 0; t < n_; ++t) {
      const auto out = proc_->outgoing(s);
      double total = 0.0;
      for (const auto& tr : out) total += tr.prob * tail_[t + 1][static_cast<std::size_t>(tr.to)];
      double r = uniform01(rng) * total;
      const Transition* chosen = nullptr;
      for (const auto& tr : out) {
        const double w = tr.prob * tail_[t + 1][static_cast<std::size_t>(tr.to)];
        if (w <= 0.0) continue;
        chosen = &tr;
        if (r < w) break;
        r -= w;
      }
      path.x[t] = chosen->x;
      path.y[t] = chosen->y;
      s = chosen->to;
      path.s[t + 1] = s;
    }
    return path;
  }

 private:
  int pick_start(Rng& rng) const {
    double total = 0.0;
    for (double w : start_weight_) total += w;
    double r = uniform01(rng) * total;
    int last = -1;
    for (std::size_t s = 0; s < start_weight_.size(); ++s) {
      if (start_weight_[s] <= 0.0) continue;
      last = static_cast<int>(s);
      if (r < start_weight_[s]) return last;
      r -= start_weight_[s];
    }
    return last;
  }

  const FimProcess* proc_;
  std::size_t n_;
  std::vector<double> prior_;
  std::vector<std::vector<double>> tail_;
  std::vector<double> start_weight_;
};

inline SampledPath sample_path(const FimProcess& proc, const StateEvent& event, std::size_t n, Rng& rng) {
  const auto pi = stationary_distribution(proc);
  return PathSampler(proc, pi, event, n).sample(rng);
}

inline SampledPath sample_path(const FimProcess& proc, const PhaseStructure& ps, const BoundarySpec& boundary,
                               Rng& rng) {
  check_boundary(proc, ps, boundary);
  return sample_path(proc, boundary.event(proc.num_states()), boundary.block_len, rng);
}

}  // namespace cwpolar
