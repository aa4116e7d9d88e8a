#pragma once

// Exact checks of the polarization recursion on doubled blocks, plus
// index-fraction and entropy-rate summaries.
//
// Children of index i on a block of length N are indices 2i-1 (minus) and
// 2i (plus) on the block of length 2N; their contexts (u_1^{2i-2}, y_1^{2N})
// are in bijection with (U_1^{i-1}, V_1^{i-1}, Y_1^N, Y_{N+1}^{2N}).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "cwpolar/enumeration.hpp"
#include "cwpolar/error.hpp"
#include "cwpolar/parallel.hpp"
#include "cwpolar/parameters.hpp"
#include "cwpolar/polar_transform.hpp"
#include "cwpolar/process_model.hpp"
#include "cwpolar/sampling.hpp"
#include "cwpolar/trellis.hpp"

namespace cwpolar {

inline constexpr double kCheckTolerance = 1e-9;

namespace detail {

struct DeltaContext {
  PhaseStructure ps;
  StationaryDistribution pi;
  StateEvent event;

  DeltaContext(const FimProcess& proc, int delta)
      : ps(detect_phases(proc)), pi(stationary_distribution(proc)), event(StateEvent::phase_class_event(ps, delta)) {}

  ExactJoint joint(const FimProcess& proc, std::size_t len, bool keep_y = true) const {
    return ExactJoint::enumerate(proc, pi, event, len, {keep_y, std::size_t{1} << 22});
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Martingale inequalities

struct MartingaleRow {
  int level = 0;  // n, block N = 2^n
  std::size_t index = 0;
  double hat_parent = 0.0;       // H(U_i|Q_i,S_0,S_N,D)
  double hat_child_mean = 0.0;
  double hat_slack = 0.0;        // child mean - parent, should be >= 0
  double bar_parent = 0.0;       // H(U_i|Q_i,D)
  double bar_child_mean = 0.0;
  double bar_slack = 0.0;        // parent - child mean, should be >= 0
  bool hypothesis = true;        // 2^n >= d
};

struct MartingaleReport {
  int delta = 0;
  int d = 1;
  std::vector<MartingaleRow> rows;

  double worst_slack(bool hypothesis_only = false) const {
    double w = INFINITY;
    for (const auto& r : rows) {
      if (hypothesis_only && !r.hypothesis) continue;
      w = std::min({w, r.hat_slack, r.bar_slack});
    }
    return w;
  }
  bool ok(bool hypothesis_only = false) const { return worst_slack(hypothesis_only) >= -kCheckTolerance; }
  void require_ok() const {
    for (const auto& r : rows) {
      if (std::min(r.hat_slack, r.bar_slack) < -kCheckTolerance) {
        throw Error(ErrorCode::kViolation, "martingale step fails at level " + std::to_string(r.level) + ", index " +
                                               std::to_string(r.index) + ", slack " +
                                               std::to_string(std::min(r.hat_slack, r.bar_slack)));
      }
    }
  }
};

struct LevelProfiles {
  std::vector<double> hat;  // H(U_i|Q_i,S_0,S_N,D)
  std::vector<double> bar;  // H(U_i|Q_i,D)
  std::vector<double> z;    // Z(U_i|Q_i,D)
  std::vector<double> k_hat;  // K(U_i|Q_i,S_0,S_N,D)
};

inline LevelProfiles level_profiles(const ExactJoint& joint) {
  const ContextView hat(joint, true, StateContext::kBoundary);
  const ContextView bar(joint, true, StateContext::kNone);
  LevelProfiles out;
  for (std::size_t i = 1; i <= joint.length(); ++i) {
    const auto vh = hat.hzk(i);
    const auto vb = bar.hzk(i);
    out.hat.push_back(vh.h);
    out.k_hat.push_back(vh.k);
    out.bar.push_back(vb.h);
    out.z.push_back(vb.z);
  }
  return out;
}

// Levels n = n_min .. n_max-1, children on level n+1.
inline MartingaleReport martingale_check(const FimProcess& proc, int delta, int n_max, int n_min = 1) {
  if (n_min < 0 || n_max <= n_min || n_max > 4) {
    throw Error(ErrorCode::kTooLarge, "exact martingale levels must satisfy 0 <= n_min < n_max <= 4");
  }
  const detail::DeltaContext ctx(proc, delta);
  std::vector<LevelProfiles> levels(static_cast<std::size_t>(n_max) + 1);
  for (int n = n_min; n <= n_max; ++n) {
    levels[static_cast<std::size_t>(n)] = level_profiles(ctx.joint(proc, std::size_t{1} << n));
  }
  MartingaleReport rep;
  rep.delta = delta;
  rep.d = ctx.ps.d;
  for (int n = n_min; n < n_max; ++n) {
    const auto& par = levels[static_cast<std::size_t>(n)];
    const auto& ch = levels[static_cast<std::size_t>(n) + 1];
    for (std::size_t i = 0; i < par.hat.size(); ++i) {
      MartingaleRow r;
      r.level = n;
      r.index = i + 1;
      r.hat_parent = par.hat[i];
      r.hat_child_mean = 0.5 * (ch.hat[2 * i] + ch.hat[2 * i + 1]);
      r.hat_slack = r.hat_child_mean - r.hat_parent;
      r.bar_parent = par.bar[i];
      r.bar_child_mean = 0.5 * (ch.bar[2 * i] + ch.bar[2 * i + 1]);
      r.bar_slack = r.bar_parent - r.bar_child_mean;
      r.hypothesis = (1 << n) >= ctx.ps.d;
      rep.rows.push_back(r);
    }
  }
  return rep;
}

// Random index path J_n = 1 + sum_{j<n} B_j 2^{n-1-j}.
struct MartingalePathPoint {
  int level = 0;
  std::size_t index = 0;
  double hat = 0.0;
  double bar = 0.0;
  double z = 0.0;
};

struct MartingalePath {
  std::vector<int> bits;
  std::vector<MartingalePathPoint> points;
};

inline std::size_t path_index(const std::vector<int>& bits, int n) {
  std::size_t j = 1;
  for (int t = 0; t < n; ++t) j += static_cast<std::size_t>(bits[static_cast<std::size_t>(t)]) << (n - 1 - t);
  return j;
}

inline MartingalePath martingale_path(const FimProcess& proc, int delta, int levels, Rng& rng) {
  if (levels < 1 || levels > 4) throw Error(ErrorCode::kTooLarge, "exact path levels limited to 1..4");
  const detail::DeltaContext ctx(proc, delta);
  MartingalePath path;
  for (int t = 0; t < levels; ++t) path.bits.push_back(static_cast<int>(rng() >> 63));
  for (int n = 1; n <= levels; ++n) {
    const auto prof = level_profiles(ctx.joint(proc, std::size_t{1} << n));
    const std::size_t j = path_index(path.bits, n);
    path.points.push_back({n, j, prof.hat[j - 1], prof.bar[j - 1], prof.z[j - 1]});
  }
  return path;
}

// ---------------------------------------------------------------------------
// One-step Z / K transform inequalities

struct TransformRow {
  std::size_t index = 0;
  double z = 0.0, z_minus = 0.0, z_plus = 0.0;
  double k_hat = 0.0, k_hat_minus = 0.0, k_hat_plus = 0.0;
  double slack_z_minus = 0.0;  // 2 M Z - Z^-
  double slack_z_plus = 0.0;   // M Z^2 - Z^+
  double slack_k_plus = 0.0;   // 2 K - K^+
  double slack_k_minus = 0.0;  // d M K^2 - K^-
  double worst() const { return std::min({slack_z_minus, slack_z_plus, slack_k_plus, slack_k_minus}); }
};

struct TransformCheck {
  int delta = 0;
  int level = 0;
  int d = 1;
  double m_delta = 1.0;
  bool hypothesis = true;  // 2^n >= d
  std::vector<TransformRow> rows;

  double worst_slack() const {
    double w = INFINITY;
    for (const auto& r : rows) w = std::min(w, r.worst());
    return w;
  }
  bool ok() const { return worst_slack() >= -kCheckTolerance; }
  void require_ok() const {
    for (const auto& r : rows) {
      if (r.worst() < -kCheckTolerance) {
        throw Error(ErrorCode::kViolation, "transform inequality fails at index " + std::to_string(r.index) +
                                               ", slack " + std::to_string(r.worst()));
      }
    }
  }
};

inline TransformCheck transform_inequality_check(const FimProcess& proc, int delta, int n) {
  if (n < 0 || n > 3) throw Error(ErrorCode::kTooLarge, "exact transform check limited to n <= 3");
  const detail::DeltaContext ctx(proc, delta);
  const std::size_t len = std::size_t{1} << n;
  const auto par = level_profiles(ctx.joint(proc, len));
  const auto ch = level_profiles(ctx.joint(proc, 2 * len));
  TransformCheck out;
  out.delta = delta;
  out.level = n;
  out.d = ctx.ps.d;
  out.m_delta = mixing_constant(ctx.pi, ctx.ps, delta);
  out.hypothesis = static_cast<int>(len) >= ctx.ps.d;
  const double m = out.m_delta;
  const double d = ctx.ps.d;
  for (std::size_t i = 0; i < len; ++i) {
    TransformRow r;
    r.index = i + 1;
    r.z = par.z[i];
    r.z_minus = ch.z[2 * i];
    r.z_plus = ch.z[2 * i + 1];
    r.k_hat = par.k_hat[i];
    r.k_hat_minus = ch.k_hat[2 * i];
    r.k_hat_plus = ch.k_hat[2 * i + 1];
    r.slack_z_minus = 2.0 * m * r.z - r.z_minus;
    r.slack_z_plus = m * r.z * r.z - r.z_plus;
    r.slack_k_plus = 2.0 * r.k_hat - r.k_hat_plus;
    r.slack_k_minus = d * m * r.k_hat * r.k_hat - r.k_hat_minus;
    out.rows.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// alpha / beta / gamma per boundary triplet

struct TripletValue {
  int s0 = 0, sn = 0, s2n = 0;
  double prob = 0.0;   // P(S_0, S_N, S_2N | D)
  double alpha = 0.0;  // H(U_i+V_i | Q_i, R_i, S_0, S_N, S_2N)
  double beta = 0.0;   // (gamma(s0,sN) + gamma(sN,s2N)) / 2
};

struct AlphaBetaRow {
  std::size_t index = 0;
  double hat_minus = 0.0;    // H(U_i+V_i | Q_i, R_i, S_0, S_2N, D)
  double alpha_bound = 0.0;  // sum P(triplet|D) alpha
  double hat = 0.0;          // H(U_i | Q_i, S_0, S_N, D)
  double beta_sum = 0.0;     // sum P(triplet|D) beta
  double min_alpha_minus_beta = 0.0;
  std::vector<TripletValue> triplets;
};

struct AlphaBetaReport {
  int delta = 0;
  std::size_t block = 0;
  std::vector<AlphaBetaRow> rows;

  // min of (hat_minus - alpha_bound), -(|hat - beta_sum|), (alpha - beta).
  double worst_slack() const {
    double w = INFINITY;
    for (const auto& r : rows) {
      w = std::min({w, r.hat_minus - r.alpha_bound, -std::abs(r.hat - r.beta_sum), r.min_alpha_minus_beta});
    }
    return w;
  }
  bool ok() const { return worst_slack() >= -kCheckTolerance; }
};

inline AlphaBetaReport alpha_beta_check(const FimProcess& proc, int delta, std::size_t n) {
  const detail::DeltaContext ctx(proc, delta);
  require_block_length(ctx.ps, n);
  const auto s = static_cast<std::uint32_t>(proc.num_states());
  const auto doubled = ctx.joint(proc, 2 * n);
  const ContextView mid_view(doubled, true, StateContext::kBoundaryMid);
  const ContextView end_view(doubled, true, StateContext::kBoundary);
  const auto single = ctx.joint(proc, n);
  const ContextView hat_view(single, true, StateContext::kBoundary);
  // gamma(a, b) does not depend on the phase event: use the stationary start.
  const auto all = ExactJoint::enumerate(proc, ctx.pi, StateEvent::all(proc.num_states()), n);
  const ContextView gamma_view(all, true, StateContext::kBoundary);

  AlphaBetaReport rep;
  rep.delta = delta;
  rep.block = n;
  for (std::size_t i = 1; i <= n; ++i) {
    AlphaBetaRow row;
    row.index = i;
    row.hat_minus = end_view.hzk(2 * i - 1).h;
    row.hat = hat_view.hzk(i).h;
    std::map<std::uint32_t, double> gamma;
    for (const auto& st : gamma_view.strata(i)) gamma[st.states] = st.value.h;
    row.min_alpha_minus_beta = INFINITY;
    for (const auto& st : mid_view.strata(2 * i - 1)) {
      TripletValue t;
      t.s2n = static_cast<int>(st.states % s);
      t.sn = static_cast<int>((st.states / s) % s);
      t.s0 = static_cast<int>(st.states / (s * s));
      t.prob = st.mass;
      t.alpha = st.value.h;
      const auto g1 = gamma.find(static_cast<std::uint32_t>(t.s0) * s + static_cast<std::uint32_t>(t.sn));
      const auto g2 = gamma.find(static_cast<std::uint32_t>(t.sn) * s + static_cast<std::uint32_t>(t.s2n));
      if (g1 == gamma.end() || g2 == gamma.end()) {
        throw Error(ErrorCode::kEmptyEvent, "boundary pair of a positive triplet is missing");
      }
      t.beta = 0.5 * (g1->second + g2->second);
      row.alpha_bound += t.prob * t.alpha;
      row.beta_sum += t.prob * t.beta;
      row.min_alpha_minus_beta = std::min(row.min_alpha_minus_beta, t.alpha - t.beta);
      row.triplets.push_back(t);
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Mixing inequality on singleton events of two adjacent blocks

struct MixingReport {
  int delta = 0;
  std::size_t block = 0;
  double m_delta = 1.0;
  std::size_t support_first = 0;   // singleton events of positive probability
  std::size_t support_second = 0;
  std::size_t positive_pairs = 0;
  double worst_slack = INFINITY;   // min of M P(a) P(b) - P(a, b)
  double worst_ratio = 0.0;        // max of P(a, b) / (P(a) P(b))
  bool ok(double tol = 1e-10) const { return worst_slack >= -tol; }
};

// Pairs with P(a, b) = 0 hold trivially, so only the joint support is scanned.
inline MixingReport mixing_check(const FimProcess& proc, int delta, std::size_t n) {
  const detail::DeltaContext ctx(proc, delta);
  require_block_length(ctx.ps, n);
  const auto joint = ctx.joint(proc, 2 * n);
  std::uint64_t ypow = 1;
  for (std::size_t t = 0; t < n; ++t) ypow *= joint.num_obs();
  const std::uint32_t xmask = (1U << n) - 1U;
  using Half = std::pair<std::uint32_t, std::uint64_t>;
  std::map<Half, double> first, second;
  std::map<std::pair<Half, Half>, double> pair;
  for (const auto& a : joint.atoms()) {
    const Half ha{a.x & xmask, a.y % ypow};
    const Half hb{a.x >> n, a.y / ypow};
    first[ha] += a.p;
    second[hb] += a.p;
    pair[{ha, hb}] += a.p;
  }
  MixingReport rep;
  rep.delta = delta;
  rep.block = n;
  rep.m_delta = mixing_constant(ctx.pi, ctx.ps, delta);
  rep.support_first = first.size();
  rep.support_second = second.size();
  rep.positive_pairs = pair.size();
  for (const auto& [key, p] : pair) {
    const double pa = first.at(key.first);
    const double pb = second.at(key.second);
    rep.worst_slack = std::min(rep.worst_slack, rep.m_delta * pa * pb - p);
    rep.worst_ratio = std::max(rep.worst_ratio, p / (pa * pb));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Boundary-set bounds with xi = 1 / (mu d)

struct BoundaryBoundRow {
  std::size_t index = 0;
  double z_a = 0.0;    // Z(U_i|U^{i-1},Y,A)
  double z_d = 0.0;    // Z(U_i|U^{i-1},Y,D)
  double k_a = 0.0;    // K(U_i|U^{i-1},A)
  double k_hat = 0.0;  // K(U_i|U^{i-1},S_0,S_N,D)
  double slack_z = 0.0;
  double slack_k = 0.0;
};

struct BoundaryBoundReport {
  int delta = 0;
  std::size_t block = 0;
  double mu = 0.0;
  double xi = 0.0;
  std::vector<BoundaryBoundRow> rows;
  double worst_slack() const {
    double w = INFINITY;
    for (const auto& r : rows) w = std::min({w, r.slack_z, r.slack_k});
    return w;
  }
  bool ok(double tol = 1e-10) const { return worst_slack() >= -tol; }
};

inline BoundaryBoundReport boundary_bound_check(const FimProcess& proc, const BoundarySpec& boundary) {
  const auto ps = detect_phases(proc);
  check_boundary(proc, ps, boundary);
  require_block_length(ps, boundary.block_len);
  const int delta = ps.phase_of(boundary.psi0.front()) % ps.d;
  const detail::DeltaContext ctx(proc, delta);
  BoundaryBoundReport rep;
  rep.delta = delta;
  rep.block = boundary.block_len;
  rep.mu = min_triplet_probability(proc, ctx.pi, ps, delta, boundary.block_len);
  rep.xi = 1.0 / (rep.mu * ps.d);
  const auto joint = ctx.joint(proc, boundary.block_len);
  const auto ev = boundary.event(proc.num_states());
  const auto in_a = [&](const JointAtom& a) {
    return ev.start[static_cast<std::size_t>(a.s0)] && ev.end[static_cast<std::size_t>(a.send)];
  };
  const auto joint_a = joint.restrict(in_a);
  const ContextView zd(joint, true, StateContext::kNone);
  const ContextView za(joint_a, true, StateContext::kNone);
  const ContextView kd(joint, false, StateContext::kBoundary);
  const ContextView ka(joint_a, false, StateContext::kNone);
  for (std::size_t i = 1; i <= boundary.block_len; ++i) {
    BoundaryBoundRow r;
    r.index = i;
    r.z_a = za.hzk(i).z;
    r.z_d = zd.hzk(i).z;
    r.k_a = ka.hzk(i).k;
    r.k_hat = kd.hzk(i).k;
    r.slack_z = rep.xi * r.z_d - r.z_a;
    r.slack_k = rep.xi * r.k_hat - r.k_a;
    rep.rows.push_back(r);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Polarized fractions

struct PolarizationFractions {
  double threshold = 0.0;
  double frac_good_z = 0.0;
  double frac_good_k = 0.0;
};

// Counts i with value < 2^{-N^beta}; Monte Carlo entries use value + 3 stderr.
inline PolarizationFractions polarization_fractions(const IndexProfile& p, double beta) {
  PolarizationFractions out;
  out.threshold = std::exp2(-std::pow(static_cast<double>(p.n), beta));
  std::size_t gz = 0, gk = 0;
  for (std::size_t i = 0; i < p.n; ++i) {
    if (p.z[i] + 3.0 * p.se_z[i] < out.threshold) ++gz;
    if (p.k[i] + 3.0 * p.se_k[i] < out.threshold) ++gk;
  }
  out.frac_good_z = static_cast<double>(gz) / static_cast<double>(p.n);
  out.frac_good_k = static_cast<double>(gk) / static_cast<double>(p.n);
  return out;
}

// Share of values below lo or above hi.
inline double polarized_share(const std::vector<double>& values, double lo = 0.1, double hi = 0.9) {
  if (values.empty()) return 0.0;
  std::size_t c = 0;
  for (double v : values) c += (v < lo || v > hi) ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(values.size());
}

// ---------------------------------------------------------------------------
// Entropy rate (1/N) H(X_1^N | Y_1^N, event)

struct EntropyRatePoint {
  std::size_t n = 0;
  double rate = 0.0;
  double stderr_rate = 0.0;
  std::string estimator = "exact";
};

struct EntropyRateOptions {
  bool with_y = true;
  std::size_t exact_max = 16;
  bool allow_mc = false;
  McOptions mc;
};

// H(X|Y) = H(X, Y) - H(Y) from the exact joint (states marginalized).
inline double exact_conditional_entropy(const ExactJoint& joint, bool with_y) {
  std::map<std::pair<std::uint32_t, std::uint64_t>, double> xy;
  std::map<std::uint64_t, double> y;
  for (const auto& a : joint.atoms()) {
    const std::uint64_t yy = with_y ? a.y : 0;
    xy[{a.x, yy}] += a.p;
    y[yy] += a.p;
  }
  double h = 0.0;
  for (const auto& [k, p] : xy) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  for (const auto& [k, p] : y) {
    if (p > 0.0) h += p * std::log2(p);
  }
  return h;
}

inline EntropyRatePoint entropy_rate_point(const FimProcess& proc, const StateEvent& event, std::size_t n,
                                           const EntropyRateOptions& opt) {
  const auto pi = stationary_distribution(proc);
  EntropyRatePoint pt;
  pt.n = n;
  if (n <= opt.exact_max) {
    const auto joint = ExactJoint::enumerate(proc, pi, event, n, {opt.with_y, std::size_t{1} << 22});
    pt.rate = exact_conditional_entropy(joint, opt.with_y) / static_cast<double>(n);
    return pt;
  }
  if (!opt.allow_mc) throw Error(ErrorCode::kTooLarge, "N=" + std::to_string(n) + " needs the Monte Carlo estimator");
  // Mean of -log2 P(x | y, event), accumulated along the SC chain rule.
  const PathSampler sampler(proc, pi, event, n);
  const TrellisModel model(proc);
  const auto prior = start_prior(pi, event);
  constexpr std::size_t kChunk = 16;
  const std::size_t chunks = (opt.mc.trials + kChunk - 1) / kChunk;
  std::vector<std::pair<double, double>> acc(chunks);
  parallel_chunks(chunks, opt.mc.threads, [&](std::size_t c) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t t = c * kChunk; t < std::min(opt.mc.trials, (c + 1) * kChunk); ++t) {
      auto rng = make_stream(opt.mc.seed, t);
      const auto path = sampler.sample(rng);
      const auto u = polar_transform(path.x);
      ScDecoder dec(model, prior, event.end, opt.with_y ? path.y : std::vector<int>{}, n);
      double nll = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto p = dec.conditional();
        nll -= std::log2(p[static_cast<std::size_t>(u[i])]);
        dec.commit(u[i]);
      }
      s1 += nll;
      s2 += nll * nll;
    }
    acc[c] = {s1, s2};
  });
  double s1 = 0.0, s2 = 0.0;
  for (const auto& [a, b] : acc) {
    s1 += a;
    s2 += b;
  }
  const auto t = static_cast<double>(opt.mc.trials);
  const double mean = s1 / t;
  const double var = opt.mc.trials > 1 ? std::max(0.0, (s2 - t * mean * mean) / (t - 1.0)) : 0.0;
  pt.rate = mean / static_cast<double>(n);
  pt.stderr_rate = std::sqrt(var / t) / static_cast<double>(n);
  pt.estimator = "monte_carlo(" + std::to_string(opt.mc.trials) + ")";
  return pt;
}

inline std::vector<EntropyRatePoint> entropy_rate_estimate(const FimProcess& proc, const StateEvent& event,
                                                           const std::vector<std::size_t>& ns,
                                                           const EntropyRateOptions& opt = {}) {
  std::vector<EntropyRatePoint> out;
  for (std::size_t n : ns) out.push_back(entropy_rate_point(proc, event, n, opt));
  return out;
}

}  // namespace cwpolar
