#pragma once

// Finite-state irreducible Markov (FIM) input/observation processes:
// kernel P(x, y, s' | s), phase structure, stationary law, boundary events.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cwpolar/error.hpp"
#include "cwpolar/fraction.hpp"

namespace cwpolar {

struct Transition {
  int from = 0;
  int x = 0;  // input bit
  int y = 0;  // observation index
  int to = 0;
  double prob = 0.0;
  std::string prob_text;  // exact form when known ("2/3"), empty otherwise
};

// Bookkeeping carried by builder-made chains.
struct StateTag {
  std::optional<int> phase;
  std::optional<int> weight;
};

enum class ChainKind { kCustom, kPrefix, kCondensed, kMod, kWindow };

inline std::string_view chain_kind_name(ChainKind kind) {
  switch (kind) {
    case ChainKind::kCustom: return "custom";
    case ChainKind::kPrefix: return "prefix";
    case ChainKind::kCondensed: return "condensed";
    case ChainKind::kMod: return "mod";
    case ChainKind::kWindow: return "window";
  }
  return "custom";
}

struct ChainMeta {
  ChainKind kind = ChainKind::kCustom;
  int b = 0;
  int a = 0;
  Fraction alpha{0, 1};
  Fraction beta{1, 1};
};

class FimProcess {
 public:
  FimProcess() = default;

  FimProcess(std::vector<std::string> states, std::vector<std::string> observations,
             std::vector<Transition> transitions, std::vector<StateTag> tags = {}, ChainMeta meta = {})
      : states_(std::move(states)),
        obs_(std::move(observations)),
        transitions_(std::move(transitions)),
        tags_(std::move(tags)),
        meta_(meta) {
    if (states_.empty()) throw Error(ErrorCode::kBadArgument, "process needs at least one state");
    if (obs_.empty()) throw Error(ErrorCode::kBadArgument, "process needs at least one observation symbol");
    if (tags_.empty()) tags_.resize(states_.size());
    if (tags_.size() != states_.size()) throw Error(ErrorCode::kShapeMismatch, "one tag per state required");
    const int ns = static_cast<int>(states_.size());
    const int ny = static_cast<int>(obs_.size());
    for (const auto& t : transitions_) {
      if (t.from < 0 || t.from >= ns || t.to < 0 || t.to >= ns || t.y < 0 || t.y >= ny || (t.x != 0 && t.x != 1)) {
        throw Error(ErrorCode::kBadArgument, "transition references an unknown state, symbol or bit");
      }
    }
    std::stable_sort(transitions_.begin(), transitions_.end(),
                     [](const Transition& a, const Transition& b) { return a.from < b.from; });
    row_begin_.assign(states_.size() + 1, 0);
    for (const auto& t : transitions_) ++row_begin_[t.from + 1];
    std::partial_sum(row_begin_.begin(), row_begin_.end(), row_begin_.begin());
  }

  std::size_t num_states() const { return states_.size(); }
  std::size_t num_obs() const { return obs_.size(); }
  const std::vector<std::string>& states() const { return states_; }
  const std::vector<std::string>& observations() const { return obs_; }
  const std::string& state_name(int s) const { return states_.at(static_cast<std::size_t>(s)); }
  const std::vector<StateTag>& tags() const { return tags_; }
  const ChainMeta& meta() const { return meta_; }
  std::span<const Transition> transitions() const { return transitions_; }

  std::span<const Transition> outgoing(int s) const {
    return std::span<const Transition>(transitions_).subspan(
        row_begin_[static_cast<std::size_t>(s)],
        row_begin_[static_cast<std::size_t>(s) + 1] - row_begin_[static_cast<std::size_t>(s)]);
  }

  int state_index(std::string_view name) const {
    for (std::size_t i = 0; i < states_.size(); ++i) {
      if (states_[i] == name) return static_cast<int>(i);
    }
    throw Error(ErrorCode::kBadArgument, "unknown state '" + std::string(name) + "'");
  }

  int obs_index(std::string_view name) const {
    for (std::size_t i = 0; i < obs_.size(); ++i) {
      if (obs_[i] == name) return static_cast<int>(i);
    }
    throw Error(ErrorCode::kBadArgument, "unknown observation '" + std::string(name) + "'");
  }

  // True when the observation alphabet is {"0","1"} and every transition emits y = x.
  bool observes_input() const {
    if (obs_.size() != 2 || obs_[0] != "0" || obs_[1] != "1") return false;
    return std::all_of(transitions_.begin(), transitions_.end(), [](const Transition& t) { return t.x == t.y; });
  }

 private:
  std::vector<std::string> states_;
  std::vector<std::string> obs_;
  std::vector<Transition> transitions_;
  std::vector<StateTag> tags_;
  ChainMeta meta_;
  std::vector<std::size_t> row_begin_;
};

// State-to-state transition matrix, marginalizing x and y.
inline Eigen::MatrixXd state_matrix(const FimProcess& proc) {
  const auto n = static_cast<Eigen::Index>(proc.num_states());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (const auto& t : proc.transitions()) p(t.from, t.to) += t.prob;
  return p;
}

inline Eigen::MatrixXd matrix_power(Eigen::MatrixXd base, std::uint64_t exponent) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(base.rows(), base.cols());
  while (exponent > 0) {
    if (exponent & 1U) result = result * base;
    exponent >>= 1U;
    if (exponent > 0) base = base * base;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  std::vector<std::pair<int, double>> row_defects;  // (state, row sum)
  std::vector<int> negative_rows;
  std::vector<int> unreachable;  // not reachable from state 0
  bool irreducible = true;

  bool ok() const { return row_defects.empty() && negative_rows.empty() && irreducible; }

  void require_ok(const FimProcess& proc) const {
    if (!negative_rows.empty()) {
      throw Error(ErrorCode::kNegativeProbability, "negative probability leaving state '" +
                                                       proc.state_name(negative_rows.front()) + "'");
    }
    if (!row_defects.empty()) {
      throw Error(ErrorCode::kBadRowSum, "outgoing probabilities of state '" +
                                             proc.state_name(row_defects.front().first) + "' sum to " +
                                             std::to_string(row_defects.front().second));
    }
    if (!irreducible) throw Error(ErrorCode::kReducible, "state graph is not strongly connected");
  }
};

namespace detail {

inline std::vector<char> reachable_from(const std::vector<std::vector<int>>& adj, int root) {
  std::vector<char> seen(adj.size(), 0);
  std::vector<int> stack{root};
  seen[static_cast<std::size_t>(root)] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

inline std::vector<std::vector<int>> adjacency(const FimProcess& proc, bool reverse) {
  std::vector<std::vector<int>> adj(proc.num_states());
  for (const auto& t : proc.transitions()) {
    if (t.prob <= 0.0) continue;
    if (reverse) {
      adj[static_cast<std::size_t>(t.to)].push_back(t.from);
    } else {
      adj[static_cast<std::size_t>(t.from)].push_back(t.to);
    }
  }
  return adj;
}

}  // namespace detail

inline ValidationReport validate_process(const FimProcess& proc) {
  ValidationReport report;
  const int ns = static_cast<int>(proc.num_states());
  for (int s = 0; s < ns; ++s) {
    double sum = 0.0;
    bool negative = false;
    for (const auto& t : proc.outgoing(s)) {
      sum += t.prob;
      negative = negative || t.prob < 0.0;
    }
    if (negative) report.negative_rows.push_back(s);
    if (std::abs(sum - 1.0) > 1e-12) report.row_defects.emplace_back(s, sum);
  }
  const auto fwd = detail::reachable_from(detail::adjacency(proc, false), 0);
  const auto bwd = detail::reachable_from(detail::adjacency(proc, true), 0);
  for (int s = 0; s < ns; ++s) {
    if (!fwd[static_cast<std::size_t>(s)]) report.unreachable.push_back(s);
    if (!fwd[static_cast<std::size_t>(s)] || !bwd[static_cast<std::size_t>(s)]) report.irreducible = false;
  }
  return report;
}

inline void require_valid(const FimProcess& proc) { validate_process(proc).require_ok(proc); }

// ---------------------------------------------------------------------------
// Phases

struct PhaseStructure {
  int period = 1;
  std::vector<int> phase;  // per state, in [0, period)
  int d = 1;               // power-of-two part of period
  int q = 1;               // odd part of period

  int phase_of(int s) const { return phase.at(static_cast<std::size_t>(s)); }
};

inline std::pair<int, int> factor_period(int period) {
  int d = 1;
  int q = period;
  while (q % 2 == 0) {
    q /= 2;
    d *= 2;
  }
  return {d, q};
}

// Period = gcd of (level(u) + 1 - level(v)) over edges u -> v, with BFS levels
// from state 0. Phase of a state is its level mod period.
inline PhaseStructure detect_phases(const FimProcess& proc) {
  require_valid(proc);
  const auto adj = detail::adjacency(proc, false);
  std::vector<int> level(proc.num_states(), -1);
  std::queue<int> frontier;
  level[0] = 0;
  frontier.push(0);
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (level[static_cast<std::size_t>(v)] < 0) {
        level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
        frontier.push(v);
      }
    }
  }
  int g = 0;
  for (std::size_t u = 0; u < adj.size(); ++u) {
    for (int v : adj[u]) g = std::gcd(g, std::abs(level[u] + 1 - level[static_cast<std::size_t>(v)]));
  }
  PhaseStructure ps;
  ps.period = g == 0 ? 1 : g;
  ps.phase.resize(proc.num_states());
  for (std::size_t s = 0; s < level.size(); ++s) ps.phase[s] = level[s] % ps.period;
  std::tie(ps.d, ps.q) = factor_period(ps.period);
  return ps;
}

// ---------------------------------------------------------------------------
// Stationary distribution

struct StationaryDistribution {
  std::vector<double> pi;

  double operator[](int s) const { return pi.at(static_cast<std::size_t>(s)); }
};

// Direct solve of (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
inline StationaryDistribution stationary_distribution(const FimProcess& proc) {
  require_valid(proc);
  const Eigen::MatrixXd p = state_matrix(proc);
  const auto n = p.rows();
  Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (lu.rank() < n) throw Error(ErrorCode::kSingular, "stationary system is rank deficient");
  const Eigen::VectorXd pi = lu.solve(rhs);
  const Eigen::VectorXd residual = pi.transpose() * p - pi.transpose();
  if (!pi.allFinite() || residual.cwiseAbs().maxCoeff() > 1e-10 || pi.minCoeff() <= 0.0) {
    throw Error(ErrorCode::kSingular, "stationary solve did not produce a positive fixed point");
  }
  StationaryDistribution out;
  out.pi.assign(pi.data(), pi.data() + n);
  return out;
}

// ---------------------------------------------------------------------------
// Phase classes, boundary pairs and mixing constants

inline std::vector<int> phase_class(const PhaseStructure& ps, int delta) {
  if (delta < 0 || delta >= ps.d) throw Error(ErrorCode::kBadArgument, "delta outside [0, d)");
  std::vector<int> out;
  for (std::size_t s = 0; s < ps.phase.size(); ++s) {
    if (ps.phase[s] % ps.d == delta) out.push_back(static_cast<int>(s));
  }
  return out;
}

// Prob{D(delta)} = sum of pi over the phase class.
inline double phase_class_probability(const StationaryDistribution& pi, const PhaseStructure& ps, int delta) {
  double sum = 0.0;
  for (int s : phase_class(ps, delta)) sum += pi[s];
  return sum;
}

inline bool phase_gap_matches(const PhaseStructure& ps, int from, int to, std::uint64_t steps) {
  const auto p = static_cast<std::uint64_t>(ps.period);
  const auto gap = (static_cast<std::uint64_t>(ps.phase_of(to)) + p - static_cast<std::uint64_t>(ps.phase_of(from))) % p;
  return gap == steps % p;
}

inline void require_block_length(const PhaseStructure& ps, std::uint64_t n) {
  if (n == 0 || (n & (n - 1)) != 0) throw Error(ErrorCode::kBadLength, "block length must be a power of two");
  if (n < static_cast<std::uint64_t>(ps.d)) throw Error(ErrorCode::kBadLength, "block length must be at least d");
}

// S_N^2(delta): pairs (s0, sN) with s0 in S(delta) and phase(sN) - phase(s0) = N mod p.
inline std::vector<std::pair<int, int>> boundary_pairs(const PhaseStructure& ps, int delta, std::uint64_t n) {
  require_block_length(ps, n);
  std::vector<std::pair<int, int>> out;
  const auto cls = phase_class(ps, delta);
  for (int s0 : cls) {
    for (int sn = 0; sn < static_cast<int>(ps.phase.size()); ++sn) {
      if (phase_gap_matches(ps, s0, sn, n)) out.emplace_back(s0, sn);
    }
  }
  return out;
}

struct StateTriplet {
  int s0, sn, s2n;
};

// S_N^3(delta).
inline std::vector<StateTriplet> boundary_triplets(const PhaseStructure& ps, int delta, std::uint64_t n) {
  std::vector<StateTriplet> out;
  for (const auto& [s0, sn] : boundary_pairs(ps, delta, n)) {
    for (int s2n = 0; s2n < static_cast<int>(ps.phase.size()); ++s2n) {
      if (phase_gap_matches(ps, sn, s2n, n)) out.push_back({s0, sn, s2n});
    }
  }
  return out;
}

// M(delta) = 1 / (d * min{pi_s : s in S(delta)}).
inline double mixing_constant(const StationaryDistribution& pi, const PhaseStructure& ps, int delta) {
  double lo = 1.0;
  for (int s : phase_class(ps, delta)) lo = std::min(lo, pi[s]);
  return 1.0 / (static_cast<double>(ps.d) * lo);
}

// min over S_N^3(delta) of pi(s0) P^N(s0, sN) P^N(sN, s2N); the mu certificate at this N.
inline double min_triplet_probability(const FimProcess& proc, const StationaryDistribution& pi,
                                      const PhaseStructure& ps, int delta, std::uint64_t n) {
  const Eigen::MatrixXd pn = matrix_power(state_matrix(proc), n);
  double lo = 1.0;
  for (const auto& t : boundary_triplets(ps, delta, n)) {
    const double v = pi[t.s0] * pn(t.s0, t.sn) * pn(t.sn, t.s2n);
    if (!(v > 0.0)) {
      throw Error(ErrorCode::kNotYetMixed, "triplet (" + proc.state_name(t.s0) + ", " + proc.state_name(t.sn) + ", " +
                                               proc.state_name(t.s2n) + ") has probability 0 at N=" +
                                               std::to_string(n));
    }
    lo = std::min(lo, v);
  }
  return lo;
}

// First power-of-two N >= d (up to max_n) at which every triplet is positive.
inline std::optional<std::uint64_t> first_mixed_length(const FimProcess& proc, const StationaryDistribution& pi,
                                                       const PhaseStructure& ps, int delta, std::uint64_t max_n) {
  for (std::uint64_t n = static_cast<std::uint64_t>(ps.d); n <= max_n; n *= 2) {
    try {
      (void)min_triplet_probability(proc, pi, ps, delta, n);
      return n;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNotYetMixed) throw;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Boundary events

// Restriction of (S_0, S_N) used for conditioning: S_0 in start, S_N in end.
// S_0 is drawn from pi restricted to start.
struct StateEvent {
  std::vector<char> start;
  std::vector<char> end;
  std::string label = "A_N";

  static StateEvent all(std::size_t num_states, std::string label = "") {
    return {std::vector<char>(num_states, 1), std::vector<char>(num_states, 1), std::move(label)};
  }

  static StateEvent from_sets(std::size_t num_states, std::span<const int> start_states,
                              std::span<const int> end_states, std::string label = "A_N") {
    StateEvent ev{std::vector<char>(num_states, 0), std::vector<char>(num_states, 0), std::move(label)};
    for (int s : start_states) ev.start.at(static_cast<std::size_t>(s)) = 1;
    for (int s : end_states) ev.end.at(static_cast<std::size_t>(s)) = 1;
    return ev;
  }

  // D(delta) = {S_0 in S(delta)}.
  static StateEvent phase_class_event(const PhaseStructure& ps, int delta) {
    const auto cls = phase_class(ps, delta);
    StateEvent ev = all(ps.phase.size(), "D(" + std::to_string(delta) + ")");
    std::fill(ev.start.begin(), ev.start.end(), 0);
    for (int s : cls) ev.start[static_cast<std::size_t>(s)] = 1;
    return ev;
  }
};

// pi restricted to the start set and renormalized.
inline std::vector<double> start_prior(const StationaryDistribution& pi, const StateEvent& ev) {
  std::vector<double> prior(pi.pi.size(), 0.0);
  double total = 0.0;
  for (std::size_t s = 0; s < prior.size(); ++s) {
    if (ev.start.at(s)) {
      prior[s] = pi.pi[s];
      total += prior[s];
    }
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kEmptyEvent, "start set is empty");
  for (auto& v : prior) v /= total;
  return prior;
}

// Boundary with Psi_0 of a single phase, Psi_N at that phase + N.
struct BoundarySpec {
  std::vector<int> psi0;
  std::vector<int> psin;
  std::uint64_t block_len = 0;

  StateEvent event(std::size_t num_states) const { return StateEvent::from_sets(num_states, psi0, psin, "A_N"); }
};

// Throws BAD_ARGUMENT for an empty or mixed-phase Psi_0 and EMPTY_EVENT when a
// Psi_N state has the wrong phase (A_N would have probability zero there).
inline void check_boundary(const FimProcess& proc, const PhaseStructure& ps, const BoundarySpec& b) {
  if (b.psi0.empty() || b.psin.empty()) throw Error(ErrorCode::kBadArgument, "boundary sets must be nonempty");
  const int phi = ps.phase_of(b.psi0.front());
  for (int s : b.psi0) {
    if (ps.phase_of(s) != phi) throw Error(ErrorCode::kBadArgument, "Psi_0 states must share one phase");
  }
  for (int s : b.psin) {
    if (!phase_gap_matches(ps, b.psi0.front(), s, b.block_len)) {
      throw Error(ErrorCode::kEmptyEvent,
                  "state '" + proc.state_name(s) + "' in Psi_N has the wrong phase for N=" + std::to_string(b.block_len));
    }
  }
}

}  // namespace cwpolar
