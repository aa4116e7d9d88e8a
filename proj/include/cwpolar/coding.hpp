#pragma once

// Constant-weight polar code: index classes from profiles, shaped encoding
// onto the constrained process and SC-trellis decoding.
//
// Roles per index: 'I' message bit, 'F' determined bit (argmax of the
// Y-free conditional, or a stored constant), 'S' shaped bit (sampled from the
// Y-free conditional with the shared shaping stream, or rounded to its argmax).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cwpolar/chain_builders.hpp"
#include "cwpolar/channel.hpp"
#include "cwpolar/error.hpp"
#include "cwpolar/parallel.hpp"
#include "cwpolar/parameters.hpp"
#include "cwpolar/process_model.hpp"
#include "cwpolar/sampling.hpp"
#include "cwpolar/trellis.hpp"

namespace cwpolar {

enum class ShapingMode { kGenie, kBlind, kDeterministic };

inline std::string shaping_name(ShapingMode m) {
  switch (m) {
    case ShapingMode::kGenie: return "genie";
    case ShapingMode::kBlind: return "blind";
    case ShapingMode::kDeterministic: return "deterministic";
  }
  return "?";
}

inline ShapingMode parse_shaping(const std::string& s) {
  if (s == "genie") return ShapingMode::kGenie;
  if (s == "blind") return ShapingMode::kBlind;
  if (s == "deterministic") return ShapingMode::kDeterministic;
  throw Error(ErrorCode::kBadArgument, "unknown shaping mode '" + s + "'");
}

struct CodeSpec {
  std::size_t n = 0;
  BoundarySpec boundary;
  std::size_t num_states = 0;
  std::string roles;                  // one of I, F, S per index
  std::map<std::size_t, int> frozen;  // 1-based index -> constant value
  double delta_z = 1e-3;
  double delta_k = 1e-3;
  ShapingMode shaping = ShapingMode::kGenie;
  std::map<std::string, std::string> meta;

  std::vector<std::size_t> indices(char role) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < roles.size(); ++i) {
      if (roles[i] == role) out.push_back(i + 1);
    }
    return out;
  }
  std::vector<std::size_t> info_set() const { return indices('I'); }
  std::vector<std::size_t> shaped_set() const { return indices('S'); }
  std::vector<std::size_t> frozen_set() const { return indices('F'); }
  std::size_t message_length() const { return static_cast<std::size_t>(std::count(roles.begin(), roles.end(), 'I')); }
  double rate() const { return n ? static_cast<double>(message_length()) / static_cast<double>(n) : 0.0; }
};

inline double upper(const std::vector<double>& v, const std::vector<double>& se, std::size_t i) {
  return v[i] + 3.0 * (se.empty() ? 0.0 : se[i]);
}

namespace detail {

inline void require_profiles(const BoundarySpec& b, const IndexProfile& with_y, const IndexProfile& no_y) {
  if (with_y.n != b.block_len || no_y.n != b.block_len) {
    throw Error(ErrorCode::kShapeMismatch, "profiles must cover [1,N]");
  }
  if (!with_y.conditioning.with_y || no_y.conditioning.with_y) {
    throw Error(ErrorCode::kBadArgument, "expected one profile with Y and one without");
  }
}

inline CodeSpec base_code(const FimProcess& proc, const BoundarySpec& b, double dz, double dk) {
  CodeSpec c;
  c.n = b.block_len;
  c.boundary = b;
  c.num_states = proc.num_states();
  c.delta_z = dz;
  c.delta_k = dk;
  c.roles.assign(c.n, 'S');
  return c;
}

// Non-message indices: determined when the Y-free Z is below delta_z.
inline void assign_rest(CodeSpec& c, const IndexProfile& no_y) {
  for (std::size_t i = 0; i < c.n; ++i) {
    if (c.roles[i] == 'I') continue;
    c.roles[i] = upper(no_y.z, no_y.se_z, i) < c.delta_z ? 'F' : 'S';
  }
}

}  // namespace detail

// I = {i : Z(with Y) < delta_z and K(without Y) < delta_k}; estimates from
// Monte Carlo profiles enter as value + 3 stderr.
inline CodeSpec construct_code(const FimProcess& proc, const BoundarySpec& boundary, const IndexProfile& with_y,
                               const IndexProfile& no_y, double delta_z, double delta_k) {
  detail::require_profiles(boundary, with_y, no_y);
  auto c = detail::base_code(proc, boundary, delta_z, delta_k);
  for (std::size_t i = 0; i < c.n; ++i) {
    if (upper(with_y.z, with_y.se_z, i) < delta_z && upper(no_y.k, no_y.se_k, i) < delta_k) c.roles[i] = 'I';
  }
  if (c.message_length() == 0) throw Error(ErrorCode::kEmptyInfo, "no index satisfies both thresholds");
  detail::assign_rest(c, no_y);
  return c;
}

// floor(rate N) message indices: the smallest Z(with Y) among indices with
// K(without Y) < delta_k.
inline CodeSpec construct_code_for_rate(const FimProcess& proc, const BoundarySpec& boundary,
                                        const IndexProfile& with_y, const IndexProfile& no_y, double rate,
                                        double delta_k, double delta_z = 1e-3) {
  detail::require_profiles(boundary, with_y, no_y);
  if (!(rate > 0.0) || rate > 1.0) throw Error(ErrorCode::kBadArgument, "rate must lie in (0, 1]");
  auto c = detail::base_code(proc, boundary, delta_z, delta_k);
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < c.n; ++i) {
    if (upper(no_y.k, no_y.se_k, i) < delta_k) eligible.push_back(i);
  }
  std::stable_sort(eligible.begin(), eligible.end(), [&](std::size_t a, std::size_t b) {
    return upper(with_y.z, with_y.se_z, a) < upper(with_y.z, with_y.se_z, b);
  });
  const auto want = static_cast<std::size_t>(std::floor(rate * static_cast<double>(c.n) + 1e-9));
  const std::size_t take = std::min(want, eligible.size());
  if (take == 0) throw Error(ErrorCode::kEmptyInfo, "no index is eligible at the requested rate");
  for (std::size_t j = 0; j < take; ++j) c.roles[eligible[j]] = 'I';
  c.meta["requested_rate"] = fmt_double(rate);
  detail::assign_rest(c, no_y);
  return c;
}

// Shared state for repeated encoding and decoding with one process.
class CodeRuntime {
 public:
  CodeRuntime(const FimProcess& proc, CodeSpec code)
      : proc_(&proc), code_(std::move(code)), model_(proc), pi_(stationary_distribution(proc)) {
    if (code_.num_states != proc.num_states()) {
      throw Error(ErrorCode::kShapeMismatch, "code was built for a chain with " + std::to_string(code_.num_states) +
                                                 " states");
    }
    if (code_.roles.size() != code_.n) throw Error(ErrorCode::kShapeMismatch, "role string length differs from N");
    const auto ps = detect_phases(proc);
    check_boundary(proc, ps, code_.boundary);
    event_ = code_.boundary.event(proc.num_states());
    prior_ = start_prior(pi_, event_);
  }

  const FimProcess& process() const { return *proc_; }
  const CodeSpec& code() const { return code_; }
  const StateEvent& event() const { return event_; }

  ScDecoder decoder(std::vector<int> y) const { return ScDecoder(model_, prior_, event_.end, std::move(y), code_.n); }

  int frozen_bit(std::size_t i, const std::array<double, 2>& p) const {
    const auto it = code_.frozen.find(i + 1);
    return it != code_.frozen.end() ? it->second : (p[1] > p[0] ? 1 : 0);
  }

  // ZERO_EVIDENCE when the message forces a word outside A_N.
  std::vector<int> encode(const std::vector<int>& message, std::uint64_t shaping_seed) const {
    if (message.size() != code_.message_length()) {
      throw Error(ErrorCode::kBadArgument, "message has " + std::to_string(message.size()) + " bits, code expects " +
                                               std::to_string(code_.message_length()));
    }
    auto rng = make_stream(shaping_seed, 0);
    auto dec = decoder({});
    std::size_t m = 0;
    for (std::size_t i = 0; i < code_.n; ++i) {
      const auto p = dec.conditional();
      int bit = 0;
      switch (code_.roles[i]) {
        case 'I': bit = message[m++]; break;
        case 'F': bit = frozen_bit(i, p); break;
        default: bit = shaped_bit(p, rng); break;
      }
      if (bit != 0 && bit != 1) throw Error(ErrorCode::kBadArgument, "message entries must be bits");
      if (p[static_cast<std::size_t>(bit)] <= 0.0) {
        throw Error(ErrorCode::kZeroEvidence, "index " + std::to_string(i + 1) + " value is impossible under A_N");
      }
      dec.commit(bit);
    }
    return dec.x();
  }

  // Lockstep passes with and without Y; message bits use the Y pass.
  std::vector<int> decode(const std::vector<int>& y, std::uint64_t shaping_seed = 0) const {
    if (y.size() != code_.n) throw Error(ErrorCode::kBadLength, "observation length differs from N");
    auto rng = make_stream(shaping_seed, 0);
    auto with_y = decoder(y);
    auto no_y = decoder({});
    std::vector<int> message;
    message.reserve(code_.message_length());
    for (std::size_t i = 0; i < code_.n; ++i) {
      const auto py = with_y.conditional();
      int bit = 0;
      if (code_.roles[i] == 'I') {
        bit = py[1] > py[0] ? 1 : 0;
        message.push_back(bit);
      } else if (code_.roles[i] == 'F') {
        bit = frozen_bit(i, no_y.conditional());
      } else if (code_.shaping == ShapingMode::kBlind) {
        bit = py[1] > py[0] ? 1 : 0;
      } else {
        bit = shaped_bit(no_y.conditional(), rng);
      }
      with_y.commit(bit);
      no_y.commit(bit);
    }
    return message;
  }

 private:
  int shaped_bit(const std::array<double, 2>& p, Rng& rng) const {
    if (code_.shaping == ShapingMode::kDeterministic) return p[1] > p[0] ? 1 : 0;
    return uniform01(rng) < p[0] ? 0 : 1;
  }

  const FimProcess* proc_;
  CodeSpec code_;
  TrellisModel model_;
  StationaryDistribution pi_;
  StateEvent event_;
  std::vector<double> prior_;
};

inline std::vector<int> encode(const FimProcess& proc, const CodeSpec& code, const std::vector<int>& message,
                               std::uint64_t shaping_seed) {
  return CodeRuntime(proc, code).encode(message, shaping_seed);
}

inline std::vector<int> decode(const FimProcess& proc, const CodeSpec& code, const std::vector<int>& y,
                               std::uint64_t shaping_seed = 0) {
  return CodeRuntime(proc, code).decode(y, shaping_seed);
}

// ---------------------------------------------------------------------------
// Simulation

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct FerResult {
  std::size_t trials = 0;
  std::size_t frame_errors = 0;
  std::size_t bit_errors = 0;
  std::size_t message_bits = 0;
  std::size_t encode_failures = 0;
  std::size_t decode_failures = 0;  // ZERO_EVIDENCE at the decoder
  std::size_t frames_checked = 0;
  double fer = 0.0;
  double ber = 0.0;
  Interval fer_ci;
  Interval ber_ci;
};

struct SimulationOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  unsigned threads = default_threads();
  std::optional<WeightConstraint> constraint;
};

inline std::vector<int> transmit(const Channel& ch, const std::vector<int>& x, Rng& rng) {
  std::vector<int> y(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    const auto& row = ch.w[static_cast<std::size_t>(x[t])];
    const double r = uniform01(rng);
    double acc = 0.0;
    int out = static_cast<int>(row.size()) - 1;
    for (std::size_t k = 0; k < row.size(); ++k) {
      acc += row[k];
      if (r < acc) {
        out = static_cast<int>(k);
        break;
      }
    }
    y[t] = out;
  }
  return y;
}

// proc is the source with the channel attached. Trial t draws its message,
// shaping seed and noise from stream t. An encoded word outside A_N or
// violating the constraint raises VIOLATION. A failed encoding counts as a
// frame error with every message bit wrong.
inline FerResult simulate_fer(const FimProcess& proc, const CodeSpec& code, const Channel& channel,
                              const SimulationOptions& opt) {
  if (opt.trials < 1) throw Error(ErrorCode::kBadArgument, "trials must be positive");
  if (channel.num_outputs() != proc.num_obs()) {
    throw Error(ErrorCode::kBadChannel, "channel alphabet differs from the process observations");
  }
  const CodeRuntime rt(proc, code);
  const std::size_t k = code.message_length();
  const auto pi = stationary_distribution(proc);
  constexpr std::size_t kChunk = 32;
  const std::size_t chunks = (opt.trials + kChunk - 1) / kChunk;
  struct Acc {
    std::size_t fe = 0, be = 0, enc = 0, dec = 0, checked = 0;
  };
  std::vector<Acc> acc(chunks);
  parallel_chunks(chunks, opt.threads, [&](std::size_t c) {
    auto& a = acc[c];
    for (std::size_t t = c * kChunk; t < std::min(opt.trials, (c + 1) * kChunk); ++t) {
      auto rng = make_stream(opt.seed, t);
      std::vector<int> msg(k);
      for (auto& b : msg) b = static_cast<int>(rng() >> 63);
      const std::uint64_t shaping_seed = rng();
      std::vector<int> x;
      try {
        x = rt.encode(msg, shaping_seed);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kZeroEvidence) throw;
        ++a.enc;
        ++a.fe;
        a.be += k;
        continue;
      }
      if (opt.constraint && !opt.constraint->satisfied(hamming_weight(x), static_cast<std::int64_t>(x.size()))) {
        throw Error(ErrorCode::kViolation, "encoded frame of weight " + std::to_string(hamming_weight(x)) +
                                               " breaks '" + opt.constraint->describe() + "'");
      }
      if (!std::isfinite(sequence_log2_probability(proc, pi, rt.event(), x, {}))) {
        throw Error(ErrorCode::kViolation, "encoded frame lies outside A_N");
      }
      ++a.checked;
      const auto y = transmit(channel, x, rng);
      std::vector<int> got;
      try {
        got = rt.decode(y, shaping_seed);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kZeroEvidence) throw;
        ++a.dec;
        ++a.fe;
        a.be += k;
        continue;
      }
      std::size_t errs = 0;
      for (std::size_t j = 0; j < k; ++j) errs += got[j] != msg[j] ? 1 : 0;
      a.be += errs;
      a.fe += errs ? 1 : 0;
    }
  });
  FerResult r;
  r.trials = opt.trials;
  r.message_bits = k * opt.trials;
  for (const auto& a : acc) {
    r.frame_errors += a.fe;
    r.bit_errors += a.be;
    r.encode_failures += a.enc;
    r.decode_failures += a.dec;
    r.frames_checked += a.checked;
  }
  r.fer = static_cast<double>(r.frame_errors) / static_cast<double>(r.trials);
  r.ber = r.message_bits ? static_cast<double>(r.bit_errors) / static_cast<double>(r.message_bits) : 0.0;
  r.fer_ci = wilson_interval(r.frame_errors, r.trials);
  r.ber_ci = wilson_interval(r.bit_errors, r.message_bits);
  return r;
}

// ---------------------------------------------------------------------------
// Text form
//
//   cwcode 1
//   N 8
//   states 13
//   psi0 0
//   psin 0
//   delta_z 0.001
//   delta_k 0.001
//   shaping genie
//   roles FSSISIII
//   frozen 1 0
//   meta chain half4

inline void write_code(std::ostream& out, const CodeSpec& c) {
  auto list = [&](const char* key, const std::vector<int>& v) {
    out << key;
    for (int s : v) out << ' ' << s;
    out << '\n';
  };
  out << "cwcode 1\n";
  out << "N " << c.n << '\n';
  out << "states " << c.num_states << '\n';
  list("psi0", c.boundary.psi0);
  list("psin", c.boundary.psin);
  out << "delta_z " << fmt_double(c.delta_z) << '\n';
  out << "delta_k " << fmt_double(c.delta_k) << '\n';
  out << "shaping " << shaping_name(c.shaping) << '\n';
  out << "roles " << c.roles << '\n';
  for (const auto& [i, v] : c.frozen) out << "frozen " << i << ' ' << v << '\n';
  for (const auto& [k, v] : c.meta) out << "meta " << k << ' ' << v << '\n';
}

inline std::string code_to_string(const CodeSpec& c) {
  std::ostringstream os;
  write_code(os, c);
  return os.str();
}

inline CodeSpec read_code(std::istream& in) {
  CodeSpec c;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::kParseError, "code line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (!header) {
      int version = 0;
      if (key != "cwcode" || !(ls >> version) || version != 1) fail("expected 'cwcode 1'");
      header = true;
      continue;
    }
    if (key == "N") {
      if (!(ls >> c.n)) fail("bad N");
    } else if (key == "states") {
      if (!(ls >> c.num_states)) fail("bad state count");
    } else if (key == "psi0" || key == "psin") {
      auto& v = key == "psi0" ? c.boundary.psi0 : c.boundary.psin;
      for (int s; ls >> s;) v.push_back(s);
    } else if (key == "delta_z") {
      if (!(ls >> c.delta_z)) fail("bad delta_z");
    } else if (key == "delta_k") {
      if (!(ls >> c.delta_k)) fail("bad delta_k");
    } else if (key == "shaping") {
      std::string s;
      ls >> s;
      c.shaping = parse_shaping(s);
    } else if (key == "roles") {
      ls >> c.roles;
    } else if (key == "frozen") {
      std::size_t i = 0;
      int v = 0;
      if (!(ls >> i >> v) || (v != 0 && v != 1)) fail("bad frozen entry");
      c.frozen[i] = v;
    } else if (key == "meta") {
      std::string k, v;
      ls >> k;
      std::getline(ls >> std::ws, v);
      c.meta[k] = v;
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (!header) throw Error(ErrorCode::kParseError, "empty code file");
  if (c.roles.size() != c.n) throw Error(ErrorCode::kParseError, "role string length differs from N");
  if (c.roles.find_first_not_of("IFS") != std::string::npos) throw Error(ErrorCode::kParseError, "roles use I, F, S");
  for (const auto& [i, v] : c.frozen) {
    if (i < 1 || i > c.n || c.roles[i - 1] != 'F') throw Error(ErrorCode::kParseError, "frozen entry on a non-F index");
  }
  c.boundary.block_len = c.n;
  return c;
}

}  // namespace cwpolar
