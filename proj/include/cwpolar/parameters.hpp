#pragma once

// H, Z and K of U_i given its past, under the conditioning variants:
// with or without Y, and with (S_0, S_N) or (S_0, S_{N/2}, S_N) revealed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "cwpolar/enumeration.hpp"
#include "cwpolar/error.hpp"
#include "cwpolar/parallel.hpp"
#include "cwpolar/polar_transform.hpp"
#include "cwpolar/process_model.hpp"
#include "cwpolar/sampling.hpp"
#include "cwpolar/trellis.hpp"

namespace cwpolar {

enum class StateContext { kNone, kBoundary, kBoundaryMid };

struct Conditioning {
  bool with_y = true;
  StateContext states = StateContext::kNone;
  std::string event_label = "A_N";

  // e.g. "U_i|U_1^{i-1},Y_1^N,S_0,S_N,D(0)"
  std::string notation() const {
    std::string s = "U_i|U_1^{i-1}";
    if (with_y) s += ",Y_1^N";
    if (states == StateContext::kBoundary) s += ",S_0,S_N";
    if (states == StateContext::kBoundaryMid) s += ",S_0,S_{N/2},S_N";
    if (!event_label.empty()) s += "," + event_label;
    return s;
  }
  std::string notation(char param) const { return std::string(1, param) + "(" + notation() + ")"; }
};

struct TableRow {
  std::uint64_t context = 0;
  std::uint32_t states = 0;  // packed revealed states, 0 when none
  double p0 = 0.0;
  double p1 = 0.0;
  double weight = 0.0;
};

struct ConditionalTable {
  std::vector<TableRow> rows;
  Conditioning conditioning;
};

struct Hzk {
  double h = 0.0;
  double z = 0.0;
  double k = 0.0;
};

inline double binary_entropy_pair(double p0, double p1) {
  double h = 0.0;
  if (p0 > 0.0) h -= p0 * std::log2(p0);
  if (p1 > 0.0) h -= p1 * std::log2(p1);
  return h;
}

inline Hzk row_hzk(double p0, double p1) {
  return {binary_entropy_pair(p0, p1), 2.0 * std::sqrt(p0 * p1), std::abs(p0 - p1)};
}

inline Hzk hzk_from_table(const ConditionalTable& t) {
  Hzk out;
  for (const auto& r : t.rows) {
    const auto v = row_hzk(r.p0, r.p1);
    out.h += r.weight * v.h;
    out.z += r.weight * v.z;
    out.k += r.weight * v.k;
  }
  return out;
}

struct Stratum {
  std::uint32_t states = 0;
  double mass = 0.0;
  Hzk value;
};

// Atoms sorted so every context of every index is a contiguous run.
class ContextView {
 public:
  ContextView(const ExactJoint& joint, bool with_y, StateContext states)
      : len_(joint.length()), num_states_(joint.num_states()), with_y_(with_y), states_(states) {
    keys_.reserve(joint.atoms().size());
    for (const auto& a : joint.atoms()) {
      std::uint32_t rev = 0;
      for (std::size_t t = 0; t < len_; ++t) rev |= ((a.u >> t) & 1U) << (len_ - 1 - t);
      keys_.push_back({state_key(a), with_y ? a.y : 0, rev, a.p});
    }
    std::sort(keys_.begin(), keys_.end(), [](const Key& a, const Key& b) {
      return std::tie(a.states, a.y, a.urev) < std::tie(b.states, b.y, b.urev);
    });
  }

  std::size_t length() const { return len_; }

  std::uint32_t state_key(const JointAtom& a) const {
    const auto s = static_cast<std::uint32_t>(num_states_);
    switch (states_) {
      case StateContext::kNone: return 0;
      case StateContext::kBoundary: return static_cast<std::uint32_t>(a.s0) * s + static_cast<std::uint32_t>(a.send);
      case StateContext::kBoundaryMid:
        return (static_cast<std::uint32_t>(a.s0) * s + static_cast<std::uint32_t>(a.smid)) * s +
               static_cast<std::uint32_t>(a.send);
    }
    return 0;
  }

  // Visits (states, m0, m1) per context of index i (1-based); masses are joint.
  template <typename Fn>
  void for_each_context(std::size_t i, Fn&& fn) const {
    if (i < 1 || i > len_) throw Error(ErrorCode::kBadArgument, "index out of range");
    const std::size_t shift = len_ - i;  // u_i sits at bit `shift` of urev
    std::size_t k = 0;
    while (k < keys_.size()) {
      const Key& head = keys_[k];
      const std::uint64_t prefix = shift + 1 >= 64 ? 0 : (head.urev >> (shift + 1));
      double m[2] = {0.0, 0.0};
      std::size_t e = k;
      while (e < keys_.size() && keys_[e].states == head.states && keys_[e].y == head.y &&
             (shift + 1 >= 64 ? 0 : (keys_[e].urev >> (shift + 1))) == prefix) {
        m[(keys_[e].urev >> shift) & 1U] += keys_[e].p;
        ++e;
      }
      fn(head.states, m[0], m[1]);
      k = e;
    }
  }

  ConditionalTable table(std::size_t i) const {
    ConditionalTable t;
    t.conditioning = Conditioning{with_y_, states_, ""};
    std::uint64_t ctx = 0;
    for_each_context(i, [&](std::uint32_t st, double m0, double m1) {
      const double w = m0 + m1;
      if (w > 0.0) t.rows.push_back({ctx, st, m0 / w, m1 / w, w});
      ++ctx;
    });
    return t;
  }

  Hzk hzk(std::size_t i) const {
    Hzk out;
    for_each_context(i, [&](std::uint32_t, double m0, double m1) {
      const double w = m0 + m1;
      if (w <= 0.0) return;
      const auto v = row_hzk(m0 / w, m1 / w);
      out.h += w * v.h;
      out.z += w * v.z;
      out.k += w * v.k;
    });
    return out;
  }

  // Per revealed-state tuple: its probability and H/Z/K conditioned on it.
  std::vector<Stratum> strata(std::size_t i) const {
    std::vector<Stratum> out;
    for_each_context(i, [&](std::uint32_t st, double m0, double m1) {
      const double w = m0 + m1;
      if (w <= 0.0) return;
      if (out.empty() || out.back().states != st) out.push_back({st, 0.0, {}});
      const auto v = row_hzk(m0 / w, m1 / w);
      auto& s = out.back();
      s.mass += w;
      s.value.h += w * v.h;
      s.value.z += w * v.z;
      s.value.k += w * v.k;
    });
    for (auto& s : out) {
      s.value.h /= s.mass;
      s.value.z /= s.mass;
      s.value.k /= s.mass;
    }
    return out;
  }

 private:
  struct Key {
    std::uint32_t states;
    std::uint64_t y;
    std::uint32_t urev;
    double p;
  };
  std::size_t len_;
  std::size_t num_states_;
  bool with_y_;
  StateContext states_;
  std::vector<Key> keys_;
};

// ---------------------------------------------------------------------------
// Profiles

struct IndexProfile {
  std::size_t n = 0;
  std::vector<double> h, z, k;
  std::vector<double> se_h, se_z, se_k;
  std::string estimator = "exact";
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  Conditioning conditioning;

  static IndexProfile zeros(std::size_t n) {
    IndexProfile p;
    p.n = n;
    for (auto* v : {&p.h, &p.z, &p.k, &p.se_h, &p.se_z, &p.se_k}) v->assign(n, 0.0);
    return p;
  }
  bool exact() const { return estimator == "exact"; }
  double mean_h() const {
    double s = 0.0;
    for (double v : h) s += v;
    return n ? s / static_cast<double>(n) : 0.0;
  }
};

inline IndexProfile profile_from_view(const ContextView& view, Conditioning cond) {
  auto p = IndexProfile::zeros(view.length());
  p.conditioning = std::move(cond);
  for (std::size_t i = 1; i <= p.n; ++i) {
    const auto v = view.hzk(i);
    p.h[i - 1] = v.h;
    p.z[i - 1] = v.z;
    p.k[i - 1] = v.k;
  }
  return p;
}

inline IndexProfile exact_profile(const FimProcess& proc, const StateEvent& event, std::size_t n,
                                  const Conditioning& cond) {
  const auto pi = stationary_distribution(proc);
  const auto joint = ExactJoint::enumerate(proc, pi, event, n, {cond.with_y, std::size_t{1} << 22});
  const ContextView view(joint, cond.with_y, cond.states);
  auto c = cond;
  if (c.event_label.empty()) c.event_label = event.label;
  return profile_from_view(view, c);
}

struct McOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  unsigned threads = default_threads();
};

// Per sample: exact SC conditional along the sampled u; averages the H, Z, K
// integrands. kBoundary reruns the trellis with the sampled (S_0, S_N).
inline IndexProfile mc_profile(const FimProcess& proc, const StateEvent& event, std::size_t n,
                               const Conditioning& cond, const McOptions& opt) {
  if (opt.trials < 1) throw Error(ErrorCode::kBadArgument, "trials must be positive");
  if (cond.states == StateContext::kBoundaryMid) {
    throw Error(ErrorCode::kBadArgument, "Monte Carlo supports none or boundary state contexts");
  }
  const auto pi = stationary_distribution(proc);
  const PathSampler sampler(proc, pi, event, n);
  const TrellisModel model(proc);
  const auto prior = start_prior(pi, event);
  constexpr std::size_t kChunk = 32;
  const std::size_t chunks = (opt.trials + kChunk - 1) / kChunk;
  struct Acc {
    std::vector<double> s[6];
  };
  std::vector<Acc> acc(chunks);
  parallel_chunks(chunks, opt.threads, [&](std::size_t c) {
    auto& a = acc[c];
    for (auto& v : a.s) v.assign(n, 0.0);
    const std::size_t lo = c * kChunk;
    const std::size_t hi = std::min(opt.trials, lo + kChunk);
    for (std::size_t t = lo; t < hi; ++t) {
      auto rng = make_stream(opt.seed, t);
      const auto path = sampler.sample(rng);
      const auto u = polar_transform(path.x);
      std::vector<double> pr = prior;
      std::vector<char> end = event.end;
      if (cond.states == StateContext::kBoundary) {
        std::fill(pr.begin(), pr.end(), 0.0);
        pr[static_cast<std::size_t>(path.s.front())] = 1.0;
        std::fill(end.begin(), end.end(), 0);
        end[static_cast<std::size_t>(path.s.back())] = 1;
      }
      ScDecoder dec(model, std::move(pr), std::move(end), cond.with_y ? path.y : std::vector<int>{}, n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto p = dec.conditional();
        const auto v = row_hzk(p[0], p[1]);
        a.s[0][i] += v.h;
        a.s[1][i] += v.z;
        a.s[2][i] += v.k;
        a.s[3][i] += v.h * v.h;
        a.s[4][i] += v.z * v.z;
        a.s[5][i] += v.k * v.k;
        dec.commit(u[i]);
      }
    }
  });
  std::vector<double> tot[6];
  for (auto& v : tot) v.assign(n, 0.0);
  for (const auto& a : acc) {
    for (int q = 0; q < 6; ++q) {
      for (std::size_t i = 0; i < n; ++i) tot[q][i] += a.s[q][i];
    }
  }
  auto prof = IndexProfile::zeros(n);
  prof.estimator = "monte_carlo";
  prof.trials = opt.trials;
  prof.seed = opt.seed;
  prof.conditioning = cond;
  if (prof.conditioning.event_label.empty()) prof.conditioning.event_label = event.label;
  const auto t = static_cast<double>(opt.trials);
  std::vector<double>* means[3] = {&prof.h, &prof.z, &prof.k};
  std::vector<double>* ses[3] = {&prof.se_h, &prof.se_z, &prof.se_k};
  for (int q = 0; q < 3; ++q) {
    for (std::size_t i = 0; i < n; ++i) {
      const double m = tot[q][i] / t;
      (*means[q])[i] = m;
      const double var = opt.trials > 1 ? std::max(0.0, (tot[q + 3][i] - t * m * m) / (t - 1.0)) : 0.0;
      (*ses[q])[i] = std::sqrt(var / t);
    }
  }
  return prof;
}

// ---------------------------------------------------------------------------
// Event decomposition: C split into mutually exclusive A_j.

struct DecompositionRow {
  std::size_t index = 0;
  Hzk union_value;
  Hzk weighted_parts;
  double slack_z = 0.0;  // Z(C) - sum P(A_j|C) Z(A_j)
  double slack_k = 0.0;  // sum P(A_j|C) K(A_j) - K(C)
  double slack_h = 0.0;  // H(C) - sum P(A_j|C) H(A_j)
};

struct DecompositionReport {
  std::vector<DecompositionRow> rows;
  double worst_slack = 0.0;
  bool ok(double tol = 1e-10) const { return worst_slack >= -tol; }
  void require_ok(double tol = 1e-10) const {
    if (ok(tol)) return;
    for (const auto& r : rows) {
      const double s = std::min({r.slack_z, r.slack_k, r.slack_h});
      if (s < -tol) {
        throw Error(ErrorCode::kViolation, "event decomposition fails at index " + std::to_string(r.index) +
                                               " with slack " + std::to_string(s));
      }
    }
  }
};

inline DecompositionRow decomposition_row(std::size_t index, const Hzk& union_value, std::span<const Hzk> parts,
                                          std::span<const double> probs) {
  if (parts.size() != probs.size()) throw Error(ErrorCode::kShapeMismatch, "one probability per sub-event");
  DecompositionRow r;
  r.index = index;
  r.union_value = union_value;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    r.weighted_parts.h += probs[j] * parts[j].h;
    r.weighted_parts.z += probs[j] * parts[j].z;
    r.weighted_parts.k += probs[j] * parts[j].k;
  }
  r.slack_z = union_value.z - r.weighted_parts.z;
  r.slack_k = r.weighted_parts.k - union_value.k;
  r.slack_h = union_value.h - r.weighted_parts.h;
  return r;
}

// Table-level check for one index.
inline DecompositionRow event_decomposition_check(const ConditionalTable& union_table,
                                                  std::span<const ConditionalTable> parts,
                                                  std::span<const double> probs, std::size_t index = 0) {
  std::vector<Hzk> pv;
  for (const auto& t : parts) pv.push_back(hzk_from_table(t));
  return decomposition_row(index, hzk_from_table(union_table), pv, probs);
}

// All indices; the partition labels each atom of the union joint.
inline DecompositionReport event_decomposition_check(const ExactJoint& union_joint, bool with_y,
                                                     const std::function<int(const JointAtom&)>& part_of) {
  std::map<int, double> labels;
  for (const auto& a : union_joint.atoms()) labels[part_of(a)] += a.p;
  const ContextView uview(union_joint, with_y, StateContext::kNone);
  std::vector<ContextView> views;
  std::vector<double> probs;
  for (const auto& [label, mass] : labels) {
    const int l = label;
    views.emplace_back(union_joint.restrict([&](const JointAtom& a) { return part_of(a) == l; }), with_y,
                       StateContext::kNone);
    probs.push_back(mass);
  }
  DecompositionReport rep;
  rep.worst_slack = INFINITY;
  for (std::size_t i = 1; i <= union_joint.length(); ++i) {
    std::vector<Hzk> pv;
    for (const auto& v : views) pv.push_back(v.hzk(i));
    rep.rows.push_back(decomposition_row(i, uview.hzk(i), pv, probs));
    const auto& r = rep.rows.back();
    rep.worst_slack = std::min({rep.worst_slack, r.slack_z, r.slack_k, r.slack_h});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// CSV

using ConfigHeader = std::vector<std::pair<std::string, std::string>>;

inline void write_config_header(std::ostream& out, const ConfigHeader& config) {
  for (const auto& [k, v] : config) out << "# " << k << '=' << v << '\n';
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_profile_csv(std::ostream& out, const IndexProfile& p, const ConfigHeader& config) {
  write_config_header(out, config);
  out << "# h=" << p.conditioning.notation('H') << '\n';
  out << "# z=" << p.conditioning.notation('Z') << '\n';
  out << "# k=" << p.conditioning.notation('K') << '\n';
  out << "# transform=" << kPolarConvention << '\n';
  out << "i,h,z,k,stderr_h,stderr_z,stderr_k,conditioning,estimator,seed\n";
  for (std::size_t i = 0; i < p.n; ++i) {
    out << i + 1 << ',' << fmt_double(p.h[i]) << ',' << fmt_double(p.z[i]) << ',' << fmt_double(p.k[i]) << ','
        << fmt_double(p.se_h[i]) << ',' << fmt_double(p.se_z[i]) << ',' << fmt_double(p.se_k[i]) << ','
        << '"' << p.conditioning.notation() << "\"," << p.estimator;
    if (p.estimator != "exact") out << '(' << p.trials << ')';
    out << ',' << p.seed << '\n';
  }
}

}  // namespace cwpolar
