#pragma once

// Successive-cancellation trellis: each node holds a pair of |S|x|S| evidence
// matrices (one per hypothesis of its current bit), entry (s_begin, s_end).
// Node (layer l, branch b) covers positions [b 2^l, (b+1) 2^l).

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cwpolar/error.hpp"
#include "cwpolar/polar_transform.hpp"
#include "cwpolar/process_model.hpp"

namespace cwpolar {

class EvidenceMatrix {
 public:
  EvidenceMatrix() = default;
  explicit EvidenceMatrix(std::size_t s) : s_(s), v_(s * s, 0.0) {}

  std::size_t size() const { return s_; }
  double& operator()(std::size_t i, std::size_t j) { return v_[i * s_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v_[i * s_ + j]; }
  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  double max_entry() const { return v_.empty() ? 0.0 : *std::max_element(v_.begin(), v_.end()); }
  double sum() const {
    double t = 0.0;
    for (double v : v_) t += v;
    return t;
  }

 private:
  std::size_t s_ = 0;
  std::vector<double> v_;
};

using EvidencePair = std::array<EvidenceMatrix, 2>;

namespace detail {

// c += a * b, all s x s row-major.
inline void mul_acc(const double* a, const double* b, double* c, std::size_t s) {
  for (std::size_t i = 0; i < s; ++i) {
    const double* arow = a + i * s;
    double* crow = c + i * s;
    for (std::size_t k = 0; k < s; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b + k * s;
      for (std::size_t j = 0; j < s; ++j) crow[j] += aik * brow[j];
    }
  }
}

inline void minus_kernel(const double* l0, const double* l1, const double* r0, const double* r1, double* o0,
                         double* o1, std::size_t s) {
  std::fill(o0, o0 + s * s, 0.0);
  std::fill(o1, o1 + s * s, 0.0);
  mul_acc(l0, r0, o0, s);
  mul_acc(l1, r1, o0, s);
  mul_acc(l1, r0, o1, s);
  mul_acc(l0, r1, o1, s);
}

// The minus bit is known: the left block carries u' xor u''.
inline void plus_kernel(const double* l0, const double* l1, const double* r0, const double* r1, int u_minus,
                        double* o0, double* o1, std::size_t s) {
  std::fill(o0, o0 + s * s, 0.0);
  std::fill(o1, o1 + s * s, 0.0);
  mul_acc(u_minus == 0 ? l0 : l1, r0, o0, s);
  mul_acc(u_minus == 0 ? l1 : l0, r1, o1, s);
}

// Scales the pair so its largest entry is 1; returns log2 of the factor removed.
inline double normalize_pair(double* o0, double* o1, std::size_t count) {
  double hi = 0.0;
  for (std::size_t k = 0; k < count; ++k) hi = std::max({hi, o0[k], o1[k]});
  if (!(hi > 0.0)) return 0.0;
  const double inv = 1.0 / hi;
  for (std::size_t k = 0; k < count; ++k) {
    o0[k] *= inv;
    o1[k] *= inv;
  }
  return std::log2(hi);
}

}  // namespace detail

// Per-symbol transition matrices A_{x,y}(s, s') = P(x, y, s' | s).
class TrellisModel {
 public:
  explicit TrellisModel(const FimProcess& proc) : s_(proc.num_states()), y_(proc.num_obs()) {
    leaf_.assign(y_ * 2 * s_ * s_, 0.0);
    any_.assign(2 * s_ * s_, 0.0);
    for (const auto& t : proc.transitions()) {
      const std::size_t cell = static_cast<std::size_t>(t.from) * s_ + static_cast<std::size_t>(t.to);
      leaf_[(static_cast<std::size_t>(t.y) * 2 + static_cast<std::size_t>(t.x)) * s_ * s_ + cell] += t.prob;
      any_[static_cast<std::size_t>(t.x) * s_ * s_ + cell] += t.prob;
    }
  }

  std::size_t num_states() const { return s_; }
  std::size_t num_obs() const { return y_; }

  // y < 0 marginalizes the observation.
  const double* leaf(int x, int y) const {
    if (y < 0) return any_.data() + static_cast<std::size_t>(x) * s_ * s_;
    return leaf_.data() + (static_cast<std::size_t>(y) * 2 + static_cast<std::size_t>(x)) * s_ * s_;
  }

 private:
  std::size_t s_;
  std::size_t y_;
  std::vector<double> leaf_;
  std::vector<double> any_;
};

// Entry (s, s') = sum over consistent x of P(x, y_t, s' | s); y_t absent sums over y.
inline EvidenceMatrix leaf_evidence(const FimProcess& proc, std::optional<int> y, std::optional<int> x) {
  const TrellisModel model(proc);
  if (y && (*y < 0 || *y >= static_cast<int>(proc.num_obs()))) {
    throw Error(ErrorCode::kBadArgument, "observation index out of range");
  }
  EvidenceMatrix m(proc.num_states());
  for (int b = 0; b < 2; ++b) {
    if (x && *x != b) continue;
    const double* src = model.leaf(b, y ? *y : -1);
    for (std::size_t k = 0; k < m.size() * m.size(); ++k) m.data()[k] += src[k];
  }
  return m;
}

inline void require_same_shape(const EvidencePair& left, const EvidencePair& right) {
  const std::size_t s = left[0].size();
  if (left[1].size() != s || right[0].size() != s || right[1].size() != s) {
    throw Error(ErrorCode::kShapeMismatch, "evidence matrices differ in size");
  }
}

inline EvidencePair combine_minus(const EvidencePair& left, const EvidencePair& right) {
  require_same_shape(left, right);
  const std::size_t s = left[0].size();
  EvidencePair out{EvidenceMatrix(s), EvidenceMatrix(s)};
  detail::minus_kernel(left[0].data(), left[1].data(), right[0].data(), right[1].data(), out[0].data(), out[1].data(), s);
  return out;
}

inline EvidencePair combine_plus(const EvidencePair& left, const EvidencePair& right, int u_minus) {
  require_same_shape(left, right);
  const std::size_t s = left[0].size();
  EvidencePair out{EvidenceMatrix(s), EvidenceMatrix(s)};
  detail::plus_kernel(left[0].data(), left[1].data(), right[0].data(), right[1].data(), u_minus, out[0].data(),
                      out[1].data(), s);
  return out;
}

// One successive-cancellation pass. Call conditional() then commit() for
// each index in order. An empty y marginalizes the observations.
class ScDecoder {
 public:
  ScDecoder(const TrellisModel& model, std::vector<double> prior, std::vector<char> end_mask, std::vector<int> y,
            std::size_t n)
      : model_(&model),
        s_(model.num_states()),
        n_(n),
        log_n_(log2_exact(n)),
        prior_(std::move(prior)),
        end_(std::move(end_mask)),
        y_(std::move(y)) {
    if (prior_.size() != s_ || end_.size() != s_) throw Error(ErrorCode::kShapeMismatch, "prior/end mask size");
    if (!y_.empty() && y_.size() != n_) throw Error(ErrorCode::kBadLength, "observation length differs from N");
    for (int v : y_) {
      if (v < 0 || v >= static_cast<int>(model.num_obs())) throw Error(ErrorCode::kBadArgument, "observation out of range");
    }
    p_.resize(static_cast<std::size_t>(log_n_) + 1);
    c_.resize(static_cast<std::size_t>(log_n_) + 1);
    for (int l = 0; l <= log_n_; ++l) {
      const std::size_t branches = n_ >> l;
      if (l > 0) p_[static_cast<std::size_t>(l)].assign(branches * 2 * s_ * s_, 0.0);
      c_[static_cast<std::size_t>(l)].assign(branches * 2, 0);
    }
    u_.reserve(n_);
  }

  std::size_t length() const { return n_; }
  std::size_t position() const { return phi_; }
  bool done() const { return phi_ == n_; }
  const std::vector<int>& u() const { return u_; }

  // Root likelihoods for the current index before normalization.
  std::array<double, 2> likelihoods() {
    if (done()) throw Error(ErrorCode::kBadArgument, "all indices decided");
    if (!ready_) {
      calc_p(log_n_, phi_);
      ready_ = true;
    }
    std::array<double, 2> lik{0.0, 0.0};
    for (int b = 0; b < 2; ++b) {
      const double* m = p_ptr(log_n_, 0, b);
      for (std::size_t i = 0; i < s_; ++i) {
        if (prior_[i] == 0.0) continue;
        double row = 0.0;
        for (std::size_t j = 0; j < s_; ++j) {
          if (end_[j]) row += m[i * s_ + j];
        }
        lik[static_cast<std::size_t>(b)] += prior_[i] * row;
      }
    }
    return lik;
  }

  // (P(u_i=0 | past), P(u_i=1 | past)); ZERO_EVIDENCE if the past is impossible.
  std::array<double, 2> conditional() {
    const auto lik = likelihoods();
    const double total = lik[0] + lik[1];
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw Error(ErrorCode::kZeroEvidence, "index " + std::to_string(phi_ + 1) + " has zero total evidence");
    }
    return {lik[0] / total, lik[1] / total};
  }

  void commit(int bit) {
    if (done()) throw Error(ErrorCode::kBadArgument, "all indices decided");
    if (bit != 0 && bit != 1) throw Error(ErrorCode::kBadArgument, "decision must be a bit");
    if (!ready_) {
      calc_p(log_n_, phi_);
    }
    c_[static_cast<std::size_t>(log_n_)][phi_ % 2] = static_cast<unsigned char>(bit);
    if (phi_ % 2 == 1) update_c(log_n_, phi_);
    u_.push_back(bit);
    ++phi_;
    ready_ = false;
  }

  // Input word; valid once every index is decided.
  std::vector<int> x() const {
    if (!done()) throw Error(ErrorCode::kBadArgument, "decoding not finished");
    if (n_ == 1) return {u_[0]};
    std::vector<int> out(n_);
    for (std::size_t b = 0; b < n_; ++b) out[b] = c_[0][2 * b];
    return out;
  }

 private:
  double* p_ptr(int layer, std::size_t branch, int bit) {
    return p_[static_cast<std::size_t>(layer)].data() + (branch * 2 + static_cast<std::size_t>(bit)) * s_ * s_;
  }

  const double* source(int layer, std::size_t branch, int bit) {
    if (layer == 0) return model_->leaf(bit, y_.empty() ? -1 : y_[branch]);
    return p_ptr(layer, branch, bit);
  }

  void calc_p(int layer, std::size_t phi) {
    if (layer == 0) {
      if (n_ == 1) {
        // Single position: root reads straight from the leaf.
        p_[0].assign(2 * s_ * s_, 0.0);
        for (int b = 0; b < 2; ++b) {
          const double* src = source(0, 0, b);
          std::copy(src, src + s_ * s_, p_[0].data() + static_cast<std::size_t>(b) * s_ * s_);
        }
      }
      return;
    }
    const std::size_t psi = phi >> 1;
    if (phi % 2 == 0) calc_p(layer - 1, psi);
    const std::size_t branches = n_ >> layer;
    const auto& cl = c_[static_cast<std::size_t>(layer)];
    for (std::size_t b = 0; b < branches; ++b) {
      const double* l0 = source(layer - 1, 2 * b, 0);
      const double* l1 = source(layer - 1, 2 * b, 1);
      const double* r0 = source(layer - 1, 2 * b + 1, 0);
      const double* r1 = source(layer - 1, 2 * b + 1, 1);
      double* o0 = p_ptr(layer, b, 0);
      double* o1 = p_ptr(layer, b, 1);
      if (phi % 2 == 0) {
        detail::minus_kernel(l0, l1, r0, r1, o0, o1, s_);
      } else {
        detail::plus_kernel(l0, l1, r0, r1, cl[2 * b], o0, o1, s_);
      }
      detail::normalize_pair(o0, o1, s_ * s_);
    }
  }

  void update_c(int layer, std::size_t phi) {
    const std::size_t psi = phi >> 1;
    const std::size_t branches = n_ >> layer;
    auto& cur = c_[static_cast<std::size_t>(layer)];
    auto& below = c_[static_cast<std::size_t>(layer) - 1];
    for (std::size_t b = 0; b < branches; ++b) {
      below[2 * (2 * b) + psi % 2] = cur[2 * b] ^ cur[2 * b + 1];
      below[2 * (2 * b + 1) + psi % 2] = cur[2 * b + 1];
    }
    if (psi % 2 == 1) update_c(layer - 1, psi);
  }

  const TrellisModel* model_;
  std::size_t s_;
  std::size_t n_;
  int log_n_;
  std::vector<double> prior_;
  std::vector<char> end_;
  std::vector<int> y_;
  std::vector<std::vector<double>> p_;
  std::vector<std::vector<unsigned char>> c_;
  std::vector<int> u_;
  std::size_t phi_ = 0;
  bool ready_ = false;
};

inline ScDecoder make_decoder(const TrellisModel& model, const StationaryDistribution& pi, const StateEvent& event,
                              std::vector<int> y, std::size_t n) {
  return ScDecoder(model, start_prior(pi, event), event.end, std::move(y), n);
}

// P(U_i | U_1^{i-1} = prefix, Y_1^N = y, event); i = prefix.size() + 1.
inline std::array<double, 2> sc_conditional(const FimProcess& proc, const StateEvent& event,
                                            const std::vector<int>& y, const std::vector<int>& u_prefix,
                                            std::size_t n) {
  const TrellisModel model(proc);
  const auto pi = stationary_distribution(proc);
  auto dec = make_decoder(model, pi, event, y, n);
  if (u_prefix.size() >= n) throw Error(ErrorCode::kBadArgument, "prefix must be shorter than N");
  for (int b : u_prefix) {
    dec.commit(b);
  }
  return dec.conditional();
}

struct Decision {
  enum class Kind { kFrozen, kInformation, kShaped };
  Kind kind = Kind::kInformation;
  int value = 0;  // frozen value

  static Decision frozen(int v) { return {Kind::kFrozen, v}; }
  static Decision information() { return {Kind::kInformation, 0}; }
  static Decision shaped() { return {Kind::kShaped, 0}; }
};

struct ScResult {
  std::vector<int> u;
  std::vector<int> x;
};

// Frozen: mandated value (ZERO_EVIDENCE if impossible). Information: argmax,
// ties to 0. Shaped: drawn from the conditional with `uniform` (argmax when null).
template <typename UniformFn>
ScResult sc_decode(const FimProcess& proc, const StateEvent& event, const std::vector<int>& y,
                   const std::vector<Decision>& decisions, UniformFn&& uniform) {
  const std::size_t n = decisions.size();
  const TrellisModel model(proc);
  const auto pi = stationary_distribution(proc);
  auto dec = make_decoder(model, pi, event, y, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = dec.conditional();
    int bit = 0;
    switch (decisions[i].kind) {
      case Decision::Kind::kFrozen:
        bit = decisions[i].value;
        if (p[static_cast<std::size_t>(bit)] <= 0.0) {
          throw Error(ErrorCode::kZeroEvidence, "frozen value at index " + std::to_string(i + 1) + " is impossible");
        }
        break;
      case Decision::Kind::kInformation: bit = p[1] > p[0] ? 1 : 0; break;
      case Decision::Kind::kShaped: bit = uniform() < p[0] ? 0 : 1; break;
    }
    dec.commit(bit);
  }
  return {dec.u(), dec.x()};
}

// Forward algorithm with a log2 scale: returns log2 P(x, y, S_N in end | prior).
// y empty marginalizes observations. -inf for impossible words.
inline double sequence_log2_probability(const FimProcess& proc, const StationaryDistribution& pi,
                                        const StateEvent& event, const std::vector<int>& x, const std::vector<int>& y) {
  if (!y.empty() && y.size() != x.size()) throw Error(ErrorCode::kBadLength, "x and y lengths differ");
  const TrellisModel model(proc);
  const std::size_t s = proc.num_states();
  std::vector<double> alpha = start_prior(pi, event);
  std::vector<double> next(s);
  double log_scale = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double* m = model.leaf(x[t], y.empty() ? -1 : y[t]);
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < s; ++i) {
      if (alpha[i] == 0.0) continue;
      for (std::size_t j = 0; j < s; ++j) next[j] += alpha[i] * m[i * s + j];
    }
    const double hi = *std::max_element(next.begin(), next.end());
    if (!(hi > 0.0)) return -INFINITY;
    for (auto& v : next) v /= hi;
    log_scale += std::log2(hi);
    alpha.swap(next);
  }
  double tail = 0.0;
  for (std::size_t j = 0; j < s; ++j) {
    if (event.end[j]) tail += alpha[j];
  }
  return tail > 0.0 ? log_scale + std::log2(tail) : -INFINITY;
}

inline double sequence_probability(const FimProcess& proc, const StateEvent& event, const std::vector<int>& x,
                                   const std::vector<int>& y) {
  const auto pi = stationary_distribution(proc);
  return std::exp2(sequence_log2_probability(proc, pi, event, x, y));
}

}  // namespace cwpolar
