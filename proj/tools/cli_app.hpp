#pragma once

// Subcommand front end. Exit codes: 0 success, 1 domain error, 2 usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cwpolar/cwpolar.hpp"

namespace cwpolar::cli {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

inline int to_int(const std::string& s) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParseError, "expected an integer, got '" + s + "'");
  }
}

struct Source {
  std::string spec;
  std::string channel_spec;
  FimProcess source;  // native chain
  FimProcess chain;   // with the channel attached
  std::optional<WeightConstraint> constraint;
  std::optional<Channel> channel;
};

// half4 | half4c | prefix:B:A | condensed:B:A | mod:B[:A] | window:B:P/Q:P/Q | path
inline Source resolve_source(const std::string& spec, const std::string& channel) {
  Source src;
  src.spec = spec;
  src.channel_spec = channel.empty() ? "native" : channel;
  const auto parts = split(spec, ':');
  const std::string kind = parts.empty() ? "" : parts[0];
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (parts.size() < lo || parts.size() > hi) throw Error(ErrorCode::kParseError, "malformed chain spec '" + spec + "'");
  };
  if (spec == "half4") {
    src.source = build_prefix_chain(4, 2);
  } else if (spec == "half4c") {
    src.source = build_condensed_chain(4, 2);
  } else if (kind == "prefix") {
    need(3, 3);
    src.source = build_prefix_chain(to_int(parts[1]), to_int(parts[2]));
  } else if (kind == "condensed") {
    need(3, 3);
    src.source = build_condensed_chain(to_int(parts[1]), to_int(parts[2]));
  } else if (kind == "mod") {
    need(2, 3);
    src.source = build_mod_chain(to_int(parts[1]));
    src.constraint = natural_constraint(src.source, parts.size() == 3 ? to_int(parts[2]) : 0);
  } else if (kind == "window") {
    need(4, 4);
    src.source = build_window_chain(to_int(parts[1]), Fraction::parse(parts[2]), Fraction::parse(parts[3]));
  } else {
    if (!std::filesystem::exists(spec)) throw Error(ErrorCode::kParseError, "no chain builder or file '" + spec + "'");
    src.source = load_chain(spec);
  }
  require_valid(src.source);
  if (!src.constraint && src.source.meta().kind != ChainKind::kCustom) src.constraint = natural_constraint(src.source);
  if (channel.empty()) {
    src.chain = src.source;
  } else {
    src.channel = Channel::parse(channel);
    src.channel->validate();
    src.chain = attach_channel(src.source, *src.channel);
  }
  return src;
}

inline std::vector<int> state_list(const FimProcess& proc, const std::vector<std::string>& names) {
  std::vector<int> out;
  for (const auto& n : names) out.push_back(proc.state_index(n));
  return out;
}

// Builder chains start at state 0 and end in the states meeting their weight
// constraint; custom chains end anywhere in the matching phase.
inline BoundarySpec default_boundary(const Source& src, std::size_t n, const std::vector<std::string>& psi0,
                                     const std::vector<std::string>& psin) {
  BoundarySpec b;
  b.block_len = n;
  const auto ps = detect_phases(src.chain);
  b.psi0 = psi0.empty() ? std::vector<int>{0} : state_list(src.chain, psi0);
  if (!psin.empty()) {
    b.psin = state_list(src.chain, psin);
  } else if (src.constraint) {
    b.psin = final_state_set(src.source, *src.constraint, static_cast<std::int64_t>(n));
  } else {
    const int target = static_cast<int>((ps.phase_of(b.psi0.front()) + n) % static_cast<std::size_t>(ps.period));
    for (std::size_t s = 0; s < src.chain.num_states(); ++s) {
      if (ps.phase[s] == target) b.psin.push_back(static_cast<int>(s));
    }
  }
  check_boundary(src.chain, ps, b);
  return b;
}

// Writes to <out>/<name>, or stdout when no directory was given.
class Sink {
 public:
  explicit Sink(const std::string& dir) : dir_(dir) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }
  std::ostream& open(const std::string& name) {
    if (dir_.empty()) return std::cout;
    file_ = std::make_unique<std::ofstream>(std::filesystem::path(dir_) / name);
    if (!*file_) throw Error(ErrorCode::kBadArgument, "cannot write " + name);
    return *file_;
  }

 private:
  std::string dir_;
  std::unique_ptr<std::ofstream> file_;
};

inline std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::string state_names(const FimProcess& p, const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + p.state_name(v[i]);
  return s;
}

inline std::vector<int> parse_symbols(const FimProcess& proc, const std::string& text, bool binary) {
  std::vector<int> out;
  for (char ch : text) {
    if (ch == ' ' || ch == ',') continue;
    if (binary) {
      if (ch != '0' && ch != '1') throw Error(ErrorCode::kParseError, "expected a bit string");
      out.push_back(ch - '0');
    } else {
      out.push_back(proc.obs_index(std::string(1, ch)));
    }
  }
  return out;
}

inline std::string bits_string(const std::vector<int>& v) {
  std::string s;
  for (int b : v) s += static_cast<char>('0' + b);
  return s;
}

struct App {
  // globals
  std::optional<std::uint64_t> seed;
  unsigned threads = default_threads();
  std::string out_dir;
  // shared
  std::string chain = "half4";
  std::string channel;
  std::vector<std::string> psi0, psin;
  std::vector<std::size_t> ns;
  std::size_t n = 8;
  double beta = 0.1;
  std::size_t trials = 1000;
  std::string estimator = "auto";
  std::string event = "boundary";
  std::vector<std::string> conditioning{"y", "noy"};
  std::optional<int> delta;
  int levels = 3;
  int log_n = 2;
  bool path = false;
  double delta_z = 1e-3;
  double delta_k = 1e-3;
  std::optional<double> rate;
  std::string shaping = "genie";
  std::string code_file;
  std::string message;
  std::string y_text;
  std::optional<std::uint64_t> shaping_seed;
  bool no_y = false;
  std::size_t exact_max = 16;
  std::string kind;
  int b = 4, a = 2;
  std::string alpha = "1/4", beta_w = "3/4";

  std::uint64_t need_seed(const std::string& why) const {
    if (!seed) throw UsageError("--seed is required for " + why);
    return *seed;
  }

  ConfigHeader header(const std::string& command, const Source& src) const {
    ConfigHeader h{{"tool", "cwpolar"}, {"command", command}, {"chain", src.spec}, {"channel", src.channel_spec}};
    if (seed) h.emplace_back("seed", std::to_string(*seed));
    return h;
  }

  bool use_exact(std::size_t len) const {
    if (estimator == "exact") return true;
    if (estimator == "mc") return false;
    if (estimator != "auto") throw UsageError("--estimator must be auto, exact or mc");
    return len <= 16;
  }

  StateEvent make_event(const Source& src, std::size_t len, std::string* label) const {
    if (event == "boundary") {
      *label = "A_N";
      return default_boundary(src, len, psi0, psin).event(src.chain.num_states());
    }
    if (event == "all") {
      *label = "";
      return StateEvent::all(src.chain.num_states());
    }
    if (event.rfind("delta:", 0) == 0) {
      const int dl = to_int(event.substr(6));
      auto ev = StateEvent::phase_class_event(detect_phases(src.chain), dl);
      *label = ev.label;
      return ev;
    }
    throw UsageError("--event must be boundary, all or delta:K");
  }

  IndexProfile profile(const Source& src, const StateEvent& ev, std::size_t len, Conditioning cond,
                       std::uint64_t stream) const {
    if (use_exact(len)) return exact_profile(src.chain, ev, len, cond);
    McOptions opt{trials, need_seed("Monte Carlo profiles") + stream, threads};
    return mc_profile(src.chain, ev, len, cond, opt);
  }

  // --------------------------------------------------------------------------

  int build_chain() {
    FimProcess proc;
    if (kind == "prefix") {
      proc = build_prefix_chain(b, a);
    } else if (kind == "condensed") {
      proc = build_condensed_chain(b, a);
    } else if (kind == "mod") {
      proc = build_mod_chain(b);
    } else if (kind == "window") {
      proc = build_window_chain(b, Fraction::parse(alpha), Fraction::parse(beta_w));
    } else {
      throw UsageError("--kind must be prefix, condensed, mod or window");
    }
    require_valid(proc);
    Sink sink(out_dir);
    write_chain(sink.open("chain.txt"), proc);
    return 0;
  }

  int validate() {
    const auto src = resolve_source(chain, channel);
    const auto ps = detect_phases(src.chain);
    const auto pi = stationary_distribution(src.chain);
    Sink sink(out_dir);
    auto& os = sink.open("validate.txt");
    os << "states " << src.chain.num_states() << "\n";
    os << "observations " << src.chain.num_obs() << "\n";
    os << "period " << ps.period << " d " << ps.d << " q " << ps.q << "\n";
    for (std::size_t s = 0; s < src.chain.num_states(); ++s) {
      os << "pi " << src.chain.state_name(static_cast<int>(s)) << ' ' << fmt_double(pi[static_cast<int>(s)])
         << " phase " << ps.phase[s] << "\n";
    }
    for (int dl = 0; dl < ps.d; ++dl) os << "M(" << dl << ") " << fmt_double(mixing_constant(pi, ps, dl)) << "\n";
    if (src.constraint) os << "constraint " << src.constraint->describe() << "\n";
    os << "ok\n";
    return 0;
  }

  int analyze() {
    const auto src = resolve_source(chain, channel);
    if (ns.empty()) ns = {n};
    Sink sink(out_dir);
    std::vector<std::string> frac_rows;
    std::uint64_t stream = 0;
    for (std::size_t len : ns) {
      std::string label;
      const auto ev = make_event(src, len, &label);
      for (const auto& cname : conditioning) {
        Conditioning cond;
        cond.event_label = label;
        if (cname == "y") {
          cond.with_y = true;
        } else if (cname == "noy") {
          cond.with_y = false;
        } else if (cname == "y-states") {
          cond = {true, StateContext::kBoundary, label};
        } else if (cname == "noy-states") {
          cond = {false, StateContext::kBoundary, label};
        } else {
          throw UsageError("--conditioning entries are y, noy, y-states, noy-states");
        }
        const auto prof = profile(src, ev, len, cond, stream++);
        auto h = header("analyze", src);
        h.emplace_back("N", std::to_string(len));
        h.emplace_back("event", event);
        if (!prof.exact()) h.emplace_back("trials", std::to_string(trials));
        write_profile_csv(sink.open("profile_" + cname + "_N" + std::to_string(len) + ".csv"), prof, h);
        const auto fr = polarization_fractions(prof, beta);
        frac_rows.push_back(std::to_string(len) + ",\"" + prof.conditioning.notation() + "\"," +
                            fmt_double(fr.threshold) + ',' + fmt_double(fr.frac_good_z) + ',' +
                            fmt_double(fr.frac_good_k) + ',' + fmt_double(prof.mean_h()) + ',' + prof.estimator);
      }
    }
    auto& os = sink.open("fractions.csv");
    auto h = header("analyze", src);
    h.emplace_back("N", join_sizes(ns));
    h.emplace_back("beta", fmt_double(beta));
    h.emplace_back("threshold", "2^{-N^beta}");
    write_config_header(os, h);
    os << "N,conditioning,threshold,frac_good_z,frac_good_k,mean_h,estimator\n";
    for (const auto& r : frac_rows) os << r << '\n';
    return 0;
  }

  std::vector<int> deltas(const Source& src) const {
    const auto ps = detect_phases(src.chain);
    if (delta) {
      if (*delta < 0 || *delta >= ps.d) throw Error(ErrorCode::kBadArgument, "delta must lie in [0, d)");
      return {*delta};
    }
    std::vector<int> all;
    for (int dl = 0; dl < ps.d; ++dl) all.push_back(dl);
    return all;
  }

  int martingale() {
    const auto src = resolve_source(chain, channel);
    Sink sink(out_dir);
    auto h = header("martingale", src);
    h.emplace_back("levels", std::to_string(levels));
    h.emplace_back("hat", "H(U_i|U_1^{i-1},Y_1^N,S_0,S_N,D(delta))");
    h.emplace_back("bar", "H(U_i|U_1^{i-1},Y_1^N,D(delta))");
    std::ostringstream body;
    double worst = INFINITY;
    for (int dl : deltas(src)) {
      const auto rep = martingale_check(src.chain, dl, levels);
      worst = std::min(worst, rep.worst_slack());
      for (const auto& r : rep.rows) {
        body << dl << ',' << r.level << ',' << r.index << ',' << fmt_double(r.hat_parent) << ','
             << fmt_double(r.hat_child_mean) << ',' << fmt_double(r.hat_slack) << ',' << fmt_double(r.bar_parent)
             << ',' << fmt_double(r.bar_child_mean) << ',' << fmt_double(r.bar_slack) << ',' << r.hypothesis << '\n';
      }
    }
    auto& os = sink.open("martingale.csv");
    write_config_header(os, h);
    os << "delta,level,i,hat_parent,hat_child_mean,hat_slack,bar_parent,bar_child_mean,bar_slack,hypothesis\n";
    os << body.str();
    if (path) {
      auto rng = make_stream(need_seed("--path"), 0);
      const auto dl = delta.value_or(0);
      const auto mp = martingale_path(src.chain, dl, levels, rng);
      auto& ps = sink.open("martingale_path.csv");
      write_config_header(ps, h);
      ps << "level,J,hat,bar,z\n";
      for (const auto& p : mp.points) {
        ps << p.level << ',' << p.index << ',' << fmt_double(p.hat) << ',' << fmt_double(p.bar) << ','
           << fmt_double(p.z) << '\n';
      }
    }
    std::cerr << "worst slack " << fmt_double(worst) << (worst >= -kCheckTolerance ? " PASS" : " FAIL") << '\n';
    return worst >= -kCheckTolerance ? 0 : report_violation("martingale");
  }

  static int report_violation(const std::string& what) {
    std::cerr << error_name(ErrorCode::kViolation) << ": " << what << " check failed\n";
    return 1;
  }

  int inequalities() {
    const auto src = resolve_source(chain, channel);
    const std::size_t len = std::size_t{1} << log_n;
    const auto ps = detect_phases(src.chain);
    Sink sink(out_dir);
    std::ostringstream body;
    std::vector<std::pair<std::string, bool>> summary;
    auto row = [&](const std::string& check, int dl, std::size_t idx, const std::string& qty, double slack) {
      body << check << ',' << dl << ',' << len << ',' << idx << ',' << qty << ',' << fmt_double(slack) << '\n';
    };
    for (int dl : deltas(src)) {
      const auto tr = transform_inequality_check(src.chain, dl, log_n);
      for (const auto& r : tr.rows) {
        row("transform", dl, r.index, "2M*Z-Z^-", r.slack_z_minus);
        row("transform", dl, r.index, "M*Z^2-Z^+", r.slack_z_plus);
        row("transform", dl, r.index, "2K-K^+", r.slack_k_plus);
        row("transform", dl, r.index, "dM*K^2-K^-", r.slack_k_minus);
      }
      summary.emplace_back("transform delta=" + std::to_string(dl), tr.ok());
      if (static_cast<int>(len) < ps.d) continue;
      const auto ab = alpha_beta_check(src.chain, dl, len);
      for (const auto& r : ab.rows) {
        row("alpha_beta", dl, r.index, "Hhat^- - sum P*alpha", r.hat_minus - r.alpha_bound);
        row("alpha_beta", dl, r.index, "-|Hhat - sum P*beta|", -std::abs(r.hat - r.beta_sum));
        row("alpha_beta", dl, r.index, "min(alpha-beta)", r.min_alpha_minus_beta);
      }
      summary.emplace_back("alpha_beta delta=" + std::to_string(dl), ab.ok());
      const auto mx = mixing_check(src.chain, dl, len);
      row("mixing", dl, 0, "min(M*P(a)P(b)-P(a,b))", mx.worst_slack);
      summary.emplace_back("mixing delta=" + std::to_string(dl), mx.ok());
    }
    if (static_cast<int>(len) >= ps.d) {
      const auto bb = boundary_bound_check(src.chain, default_boundary(src, len, psi0, psin));
      for (const auto& r : bb.rows) {
        row("boundary", bb.delta, r.index, "xi*Z(D)-Z(A)", r.slack_z);
        row("boundary", bb.delta, r.index, "xi*Khat(D)-K(A)", r.slack_k);
      }
      summary.emplace_back("boundary xi=" + fmt_double(bb.xi), bb.ok());
    }
    auto h = header("inequalities", src);
    h.emplace_back("N", std::to_string(len));
    auto& os = sink.open("inequalities.csv");
    write_config_header(os, h);
    os << "check,delta,N,index,quantity,slack\n" << body.str();
    bool all = true;
    for (const auto& [name, ok] : summary) {
      std::cerr << (ok ? "PASS " : "FAIL ") << name << '\n';
      all = all && ok;
    }
    return all ? 0 : report_violation("inequality");
  }

  CodeSpec build_code(const Source& src, std::size_t len) const {
    const auto boundary = default_boundary(src, len, psi0, psin);
    const auto ev = boundary.event(src.chain.num_states());
    const auto py = profile(src, ev, len, {true, StateContext::kNone, "A_N"}, 0);
    const auto pn = profile(src, ev, len, {false, StateContext::kNone, "A_N"}, 1);
    auto code = rate ? construct_code_for_rate(src.chain, boundary, py, pn, *rate, delta_k, delta_z)
                     : construct_code(src.chain, boundary, py, pn, delta_z, delta_k);
    code.shaping = parse_shaping(shaping);
    code.meta["chain"] = src.spec;
    code.meta["channel"] = src.channel_spec;
    code.meta["estimator"] = py.exact() ? "exact" : "monte_carlo(" + std::to_string(trials) + ")";
    if (!py.exact()) code.meta["profile_seed"] = std::to_string(*seed);
    return code;
  }

  int construct() {
    const auto src = resolve_source(chain, channel);
    const auto code = build_code(src, n);
    Sink sink(out_dir);
    write_code(sink.open("code.txt"), code);
    std::cerr << "rate " << fmt_double(code.rate()) << " |I|=" << code.message_length() << '\n';
    return 0;
  }

  CodeSpec load_code() const {
    std::ifstream in(code_file);
    if (!in) throw Error(ErrorCode::kParseError, "cannot open code file '" + code_file + "'");
    return read_code(in);
  }

  int encode_cmd() {
    const auto src = resolve_source(chain, channel);
    const auto code = load_code();
    const std::uint64_t ss = shaping_seed ? *shaping_seed : need_seed("encoding");
    const auto x = CodeRuntime(src.chain, code).encode(parse_symbols(src.chain, message, true), ss);
    std::cout << bits_string(x) << '\n';
    std::cerr << "weight " << hamming_weight(x) << '\n';
    return 0;
  }

  int decode_cmd() {
    const auto src = resolve_source(chain, channel);
    auto code = load_code();
    const std::uint64_t ss = shaping_seed ? *shaping_seed : seed.value_or(0);
    if (code.shaping != ShapingMode::kBlind && !shaping_seed && !seed) {
      throw UsageError("--shaping-seed is required unless the code uses blind shaping");
    }
    const auto m = CodeRuntime(src.chain, code).decode(parse_symbols(src.chain, y_text, false), ss);
    std::cout << bits_string(m) << '\n';
    return 0;
  }

  int simulate() {
    const auto src = resolve_source(chain, channel);
    const std::uint64_t s = need_seed("simulation");
    if (!src.channel) throw UsageError("--channel is required for simulation");
    const auto code = code_file.empty() ? build_code(src, n) : load_code();
    SimulationOptions opt;
    opt.trials = trials;
    opt.seed = s;
    opt.threads = threads;
    opt.constraint = src.constraint;
    const auto r = simulate_fer(src.chain, code, *src.channel, opt);
    Sink sink(out_dir);
    auto h = header("simulate", src);
    h.emplace_back("N", std::to_string(code.n));
    h.emplace_back("trials", std::to_string(trials));
    h.emplace_back("shaping", shaping_name(code.shaping));
    h.emplace_back("z", "Z(U_i|U_1^{i-1},Y_1^N,A_N)");
    h.emplace_back("k", "K(U_i|U_1^{i-1},A_N)");
    auto& os = sink.open("fer.csv");
    write_config_header(os, h);
    os << "N,rate,info_bits,trials,frame_errors,fer,fer_lo,fer_hi,bit_errors,ber,ber_lo,ber_hi,encode_failures,"
          "decode_failures,frames_checked\n";
    os << code.n << ',' << fmt_double(code.rate()) << ',' << code.message_length() << ',' << r.trials << ','
       << r.frame_errors << ',' << fmt_double(r.fer) << ',' << fmt_double(r.fer_ci.lo) << ','
       << fmt_double(r.fer_ci.hi) << ',' << r.bit_errors << ',' << fmt_double(r.ber) << ','
       << fmt_double(r.ber_ci.lo) << ',' << fmt_double(r.ber_ci.hi) << ',' << r.encode_failures << ','
       << r.decode_failures << ',' << r.frames_checked << '\n';
    if (!out_dir.empty()) write_code(sink.open("code.txt"), code);
    return 0;
  }

  int entropy_rate() {
    const auto src = resolve_source(chain, channel);
    if (ns.empty()) ns = {4, 8};
    EntropyRateOptions opt;
    opt.with_y = !no_y;
    opt.exact_max = estimator == "mc" ? 0 : exact_max;
    opt.allow_mc = estimator != "exact";
    std::vector<EntropyRatePoint> pts;
    for (std::size_t len : ns) {
      std::string label;
      const auto ev = make_event(src, len, &label);
      if (len > opt.exact_max && opt.allow_mc) opt.mc = {trials, need_seed("Monte Carlo entropy rates"), threads};
      pts.push_back(entropy_rate_point(src.chain, ev, len, opt));
    }
    Sink sink(out_dir);
    auto h = header("entropy-rate", src);
    h.emplace_back("event", event);
    h.emplace_back("quantity", no_y ? "(1/N)H(X_1^N|event)" : "(1/N)H(X_1^N|Y_1^N,event)");
    auto& os = sink.open("entropy_rate.csv");
    write_config_header(os, h);
    os << "N,rate,stderr,estimator\n";
    for (const auto& p : pts) {
      os << p.n << ',' << fmt_double(p.rate) << ',' << fmt_double(p.stderr_rate) << ',' << p.estimator << '\n';
    }
    return 0;
  }
};

inline void add_source_options(CLI::App* sub, App& a) {
  sub->add_option("--chain", a.chain, "half4, half4c, prefix:B:A, condensed:B:A, mod:B[:A], window:B:P/Q:P/Q or a file")
      ->capture_default_str();
  sub->add_option("--channel", a.channel, "noiseless, none, bsc:P or bec:P (default: chain as built)");
  sub->add_option("--psi0", a.psi0, "initial state names");
  sub->add_option("--psin", a.psin, "final state names");
}

inline int run(int argc, char** argv) {
  App a;
  CLI::App app{"Constant-weight polar codes on periodic finite-state processes"};
  app.require_subcommand(1);
  app.add_option("--seed", a.seed, "seed for stochastic runs");
  app.add_option("--threads", a.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", a.out_dir, "output directory (stdout when absent)");

  std::function<int()> action;
  auto sub = [&](const char* name, const char* help, std::function<int()> fn) {
    auto* s = app.add_subcommand(name, help);
    s->fallthrough();
    s->callback([&action, fn] { action = fn; });
    return s;
  };

  auto* bc = sub("build-chain", "write a builder chain file", [&] { return a.build_chain(); });
  bc->add_option("--kind", a.kind, "prefix, condensed, mod or window")->required();
  bc->add_option("--b", a.b, "period length")->capture_default_str();
  bc->add_option("--a", a.a, "ones per period")->capture_default_str();
  bc->add_option("--alpha", a.alpha, "window lower fraction")->capture_default_str();
  bc->add_option("--beta", a.beta_w, "window upper fraction")->capture_default_str();

  auto* va = sub("validate", "check a chain and print its phase structure", [&] { return a.validate(); });
  add_source_options(va, a);

  auto* an = sub("analyze", "H, Z, K profiles and polarized fractions", [&] { return a.analyze(); });
  add_source_options(an, a);
  an->add_option("--N", a.ns, "block lengths")->delimiter(',');
  an->add_option("--beta", a.beta, "fraction exponent")->capture_default_str();
  an->add_option("--trials", a.trials, "Monte Carlo samples")->capture_default_str();
  an->add_option("--estimator", a.estimator, "auto, exact or mc")->capture_default_str();
  an->add_option("--event", a.event, "boundary, all or delta:K")->capture_default_str();
  an->add_option("--conditioning", a.conditioning, "y, noy, y-states, noy-states")->delimiter(',');

  auto* ma = sub("martingale", "exact sub/super-martingale steps", [&] { return a.martingale(); });
  add_source_options(ma, a);
  ma->add_option("--delta", a.delta, "phase class (default: all)");
  ma->add_option("--levels", a.levels, "largest level n (blocks up to 2^n)")->capture_default_str();
  ma->add_flag("--path", a.path, "also follow one random index path");

  auto* in = sub("inequalities", "one-step transform, mixing and boundary bounds", [&] { return a.inequalities(); });
  add_source_options(in, a);
  in->add_option("--delta", a.delta, "phase class (default: all)");
  in->add_option("--n", a.log_n, "parent level, N = 2^n")->capture_default_str();

  auto code_opts = [&](CLI::App* s) {
    s->add_option("--N", a.n, "block length")->capture_default_str();
    s->add_option("--delta-z", a.delta_z, "Z threshold")->capture_default_str();
    s->add_option("--delta-k", a.delta_k, "K threshold")->capture_default_str();
    s->add_option("--rate", a.rate, "target rate (picks the smallest Z)");
    s->add_option("--trials", a.trials, "Monte Carlo samples")->capture_default_str();
    s->add_option("--estimator", a.estimator, "auto, exact or mc")->capture_default_str();
    s->add_option("--shaping", a.shaping, "genie, blind or deterministic")->capture_default_str();
  };
  auto* co = sub("construct", "choose index classes and write a code file", [&] { return a.construct(); });
  add_source_options(co, a);
  code_opts(co);

  auto* en = sub("encode", "encode a message", [&] { return a.encode_cmd(); });
  add_source_options(en, a);
  en->add_option("--code", a.code_file, "code file")->required();
  en->add_option("--message", a.message, "message bits")->required();
  en->add_option("--shaping-seed", a.shaping_seed, "shared shaping seed (default: --seed)");

  auto* de = sub("decode", "decode observations", [&] { return a.decode_cmd(); });
  add_source_options(de, a);
  de->add_option("--code", a.code_file, "code file")->required();
  de->add_option("--y", a.y_text, "observation symbols")->required();
  de->add_option("--shaping-seed", a.shaping_seed, "shared shaping seed (default: --seed)");

  auto* si = sub("simulate", "frame error rate over a channel", [&] { return a.simulate(); });
  add_source_options(si, a);
  code_opts(si);
  si->add_option("--code", a.code_file, "use an existing code file");

  auto* er = sub("entropy-rate", "(1/N) H(X|Y) at the given lengths", [&] { return a.entropy_rate(); });
  add_source_options(er, a);
  er->add_option("--N", a.ns, "block lengths")->delimiter(',');
  er->add_option("--event", a.event, "boundary, all or delta:K")->capture_default_str();
  er->add_flag("--no-y", a.no_y, "drop the observations");
  er->add_option("--trials", a.trials, "Monte Carlo samples")->capture_default_str();
  er->add_option("--estimator", a.estimator, "auto, exact or mc")->capture_default_str();
  er->add_option("--exact-max", a.exact_max, "largest N computed exactly")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    default_threads() = a.threads;
    return action();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
}

}  // namespace cwpolar::cli
