// Weight-N/2 code over a BSC: build the condensed chain, estimate index
// profiles, pick the code, send one frame and then a short FER run.

#include <cstdio>

#include "cwpolar/cwpolar.hpp"

using namespace cwpolar;

int main() {
  const std::size_t n = 256;
  const auto source = build_condensed_chain(4, 2);
  const auto ch = Channel::bsc("0.03");
  const auto proc = attach_channel(source, ch);
  const auto ps = detect_phases(proc);
  std::printf("condensed (4,2) chain: %zu states, period %d (d %d, q %d)\n", source.num_states(), ps.period, ps.d,
              ps.q);

  const BoundarySpec boundary{{0}, final_state_set(source, natural_constraint(source), n), n};
  const auto ev = boundary.event(proc.num_states());
  const auto with_y = mc_profile(proc, ev, n, {true, StateContext::kNone, "A_N"}, {2000, 1, default_threads()});
  const auto no_y = mc_profile(proc, ev, n, {false, StateContext::kNone, "A_N"}, {4000, 2, default_threads()});
  const auto code = construct_code(proc, boundary, with_y, no_y, 1e-3, 1e-3);
  std::printf("N %zu: %zu message bits (rate %.3f), %zu determined, %zu shaped\n", n, code.message_length(),
              code.rate(), code.frozen_set().size(), code.shaped_set().size());

  const CodeRuntime rt(proc, code);
  auto rng = make_stream(7, 0);
  std::vector<int> msg(code.message_length());
  for (auto& b : msg) b = static_cast<int>(rng() >> 63);
  const auto x = rt.encode(msg, 11);
  const auto y = transmit(ch, x, rng);
  std::size_t flips = 0;
  for (std::size_t i = 0; i < n; ++i) flips += x[i] != y[i];
  const auto got = rt.decode(y, 11);
  std::printf("one frame: weight %lld of %zu, %zu channel flips, message %s\n",
              static_cast<long long>(hamming_weight(x)), n, flips, got == msg ? "recovered" : "lost");

  SimulationOptions opt;
  opt.trials = 500;
  opt.seed = 3;
  opt.constraint = natural_constraint(source);
  const auto r = simulate_fer(proc, code, ch, opt);
  std::printf("%zu frames: fer %.4f [%.4f, %.4f], ber %.5f\n", r.trials, r.fer, r.fer_ci.lo, r.fer_ci.hi, r.ber);
}
