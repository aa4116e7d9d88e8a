#pragma once

// Exhaustive joint law of (X_1^L, Y_1^L, S_0, S_{L/2}, S_L) under a boundary
// event, used as the exact oracle for conditional tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <tuple>
#include <vector>

#include "cwpolar/error.hpp"
#include "cwpolar/polar_transform.hpp"
#include "cwpolar/process_model.hpp"

namespace cwpolar {

struct JointAtom {
  std::uint32_t x = 0;   // bit t = x_{t+1}
  std::uint32_t u = 0;   // polar transform of x, same packing
  std::uint64_t y = 0;   // mixed radix, digit t = y_{t+1}; 0 when y is marginalized
  int s0 = 0;
  int smid = 0;          // S_{L/2}
  int send = 0;
  double p = 0.0;        // normalized to the event
};

struct JointOptions {
  bool keep_y = true;
  std::size_t max_atoms = std::size_t{1} << 22;
};

class ExactJoint {
 public:
  static ExactJoint enumerate(const FimProcess& proc, const StationaryDistribution& pi, const StateEvent& event,
                              std::size_t len, JointOptions opt = {}) {
    if (len == 0 || len > 24) throw Error(ErrorCode::kTooLarge, "exact enumeration limited to 1 <= L <= 24");
    const int log_len = log2_exact(len);
    const std::size_t ny = opt.keep_y ? proc.num_obs() : 1;
    {
      long double cap = 1.0L;
      for (std::size_t t = 0; t < len; ++t) cap *= static_cast<long double>(ny);
      if (cap > 1.8e19L) throw Error(ErrorCode::kTooLarge, "observation sequences overflow 64-bit index");
    }
    ExactJoint j;
    j.len_ = len;
    j.num_obs_ = ny;
    j.num_states_ = proc.num_states();
    const auto prior = start_prior(pi, event);

    struct Entry {
      int s0, smid, s;
      double p;
    };
    std::vector<std::vector<Entry>> level(len + 1);
    for (std::size_t s = 0; s < prior.size(); ++s) {
      if (prior[s] > 0.0) level[0].push_back({static_cast<int>(s), static_cast<int>(s), static_cast<int>(s), prior[s]});
    }
    std::uint64_t ypow = 1;
    std::vector<std::uint64_t> pow_table(len + 1, 1);
    for (std::size_t t = 1; t <= len; ++t) pow_table[t] = pow_table[t - 1] * ny;
    (void)ypow;
    double total = 0.0;
    const std::size_t mid = len / 2;

    auto dfs = [&](auto&& self, std::size_t t, std::uint32_t xbits, std::uint64_t yidx) -> void {
      const auto& cur = level[t];
      if (t == len) {
        for (const auto& e : cur) {
          if (!event.end[static_cast<std::size_t>(e.s)] || e.p <= 0.0) continue;
          if (j.atoms_.size() >= opt.max_atoms) throw Error(ErrorCode::kTooLarge, "joint support exceeds atom cap");
          j.atoms_.push_back({xbits, 0, yidx, e.s0, e.smid, e.s, e.p});
          total += e.p;
        }
        return;
      }
      for (int x = 0; x < 2; ++x) {
        for (std::size_t y = 0; y < ny; ++y) {
          auto& next = level[t + 1];
          next.clear();
          for (const auto& e : cur) {
            for (const auto& tr : proc.outgoing(e.s)) {
              if (tr.x != x || tr.prob <= 0.0) continue;
              if (opt.keep_y && static_cast<std::size_t>(tr.y) != y) continue;
              const int smid = t + 1 == mid ? tr.to : e.smid;
              auto it = std::find_if(next.begin(), next.end(), [&](const Entry& o) {
                return o.s0 == e.s0 && o.smid == smid && o.s == tr.to;
              });
              if (it == next.end()) {
                next.push_back({e.s0, smid, tr.to, e.p * tr.prob});
              } else {
                it->p += e.p * tr.prob;
              }
            }
          }
          if (next.empty()) continue;
          self(self, t + 1, xbits | (static_cast<std::uint32_t>(x) << t), yidx + y * pow_table[t]);
        }
      }
    };
    dfs(dfs, 0, 0U, 0ULL);
    if (!(total > 0.0)) throw Error(ErrorCode::kEmptyEvent, "boundary event has probability zero");
    j.event_mass_ = total;
    for (auto& a : j.atoms_) {
      a.p /= total;
      a.u = polar_transform_bits(a.x, log_len);
    }
    return j;
  }

  std::size_t length() const { return len_; }
  std::size_t num_obs() const { return num_obs_; }
  std::size_t num_states() const { return num_states_; }
  bool has_y() const { return num_obs_ > 1; }
  const std::vector<JointAtom>& atoms() const { return atoms_; }

  // P(S_L in end | S_0 ~ prior restricted to start).
  double event_mass() const { return event_mass_; }

  // Conditional law on the atoms satisfying pred, with its probability.
  ExactJoint restrict(const std::function<bool(const JointAtom&)>& pred, double* mass = nullptr) const {
    ExactJoint out;
    out.len_ = len_;
    out.num_obs_ = num_obs_;
    out.num_states_ = num_states_;
    double total = 0.0;
    for (const auto& a : atoms_) {
      if (pred(a)) {
        out.atoms_.push_back(a);
        total += a.p;
      }
    }
    if (!(total > 0.0)) throw Error(ErrorCode::kEmptyEvent, "restricted event has probability zero");
    for (auto& a : out.atoms_) a.p /= total;
    out.event_mass_ = event_mass_ * total;
    if (mass) *mass = total;
    return out;
  }

  // Observations marginalized.
  ExactJoint without_y() const {
    ExactJoint out;
    out.len_ = len_;
    out.num_obs_ = 1;
    out.num_states_ = num_states_;
    out.event_mass_ = event_mass_;
    out.atoms_ = atoms_;
    for (auto& a : out.atoms_) a.y = 0;
    std::sort(out.atoms_.begin(), out.atoms_.end(), [](const JointAtom& a, const JointAtom& b) {
      return std::tie(a.x, a.s0, a.smid, a.send) < std::tie(b.x, b.s0, b.smid, b.send);
    });
    std::vector<JointAtom> merged;
    for (const auto& a : out.atoms_) {
      if (!merged.empty() && merged.back().x == a.x && merged.back().s0 == a.s0 && merged.back().smid == a.smid &&
          merged.back().send == a.send) {
        merged.back().p += a.p;
      } else {
        merged.push_back(a);
      }
    }
    out.atoms_ = std::move(merged);
    return out;
  }

 private:
  std::size_t len_ = 0;
  std::size_t num_obs_ = 1;
  std::size_t num_states_ = 0;
  double event_mass_ = 0.0;
  std::vector<JointAtom> atoms_;
};

}  // namespace cwpolar
