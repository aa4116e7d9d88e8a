#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "oracle_checks.hpp"

using namespace cwpolar;

TEST(Transform, TwoByTwo) {
  EXPECT_EQ(polar_transform(std::vector<int>{1, 0}), (std::vector<int>{1, 0}));
  EXPECT_EQ(polar_transform(std::vector<int>{0, 1}), (std::vector<int>{1, 1}));
  EXPECT_EQ(polar_transform(std::vector<int>{0, 0, 0, 0}), (std::vector<int>{0, 0, 0, 0}));
}

TEST(Transform, MatchesGeneratorMatrix) {
  for (std::size_t n : {1U, 2U, 4U, 8U}) {
    for (std::uint64_t v = 0; v < (1ULL << n); ++v) {
      const auto x = fixtures::bits_of(v, n);
      EXPECT_EQ(polar_transform(x), oracle::g_matrix_transform(x)) << n << ' ' << v;
    }
  }
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const auto x = fixtures::bits_of(rng(), 32);
    EXPECT_EQ(polar_transform(x), oracle::g_matrix_transform(x));
  }
}

TEST(Transform, InvolutionExhaustive) {
  for (int log_n = 0; log_n <= 4; ++log_n) {
    const std::size_t n = std::size_t{1} << log_n;
    for (std::uint32_t v = 0; v < (1U << n); ++v) {
      EXPECT_EQ(polar_transform_bits(polar_transform_bits(v, log_n), log_n), v);
      const auto x = fixtures::bits_of(v, n);
      const auto u = polar_transform(x);
      std::uint32_t packed = 0;
      for (std::size_t t = 0; t < n; ++t) packed |= static_cast<std::uint32_t>(u[t]) << t;
      ASSERT_EQ(packed, polar_transform_bits(v, log_n));
    }
  }
}

TEST(Transform, BadLength) { EXPECT_THROW(polar_transform(std::vector<int>{1, 0, 1}), Error); }

TEST(Leaf, OneStateUniform) {
  const auto m = leaf_evidence(fixtures::one_state_uniform(), 0, std::nullopt);
  EXPECT_DOUBLE_EQ(m(0, 0), 0.5);
}

TEST(Leaf, ModChainNoObservation) {
  const auto c = attach_channel(build_mod_chain(2), Channel::constant());
  const auto m = leaf_evidence(c, std::nullopt, std::nullopt);
  for (int s = 0; s < 2; ++s) {
    for (int t = 0; t < 2; ++t) EXPECT_DOUBLE_EQ(m(s, t), 0.5);
  }
}

TEST(Leaf, Half4Hypothesis) {
  const auto c = build_prefix_chain(4, 2);
  const auto m = leaf_evidence(c, std::nullopt, 1);
  const int s = c.state_index("0");
  EXPECT_NEAR(m(s, c.state_index("01")), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(m(s, c.state_index("00")), 0.0);
}

TEST(Combine, OneStateIsMemorylessSc) {
  const auto c = fixtures::one_state_uniform();
  const TrellisModel model(c);
  // Leaves with y = 1 on a one-state chain: W(1|0) = 0, W(1|1) = 1/2.
  EvidencePair l{EvidenceMatrix(1), EvidenceMatrix(1)}, r = l;
  l[0](0, 0) = 0.3;
  l[1](0, 0) = 0.7;
  r[0](0, 0) = 0.4;
  r[1](0, 0) = 0.6;
  const auto mn = combine_minus(l, r);
  EXPECT_NEAR(mn[0](0, 0) / mn[1](0, 0), (0.3 * 0.4 + 0.7 * 0.6) / (0.7 * 0.4 + 0.3 * 0.6), 1e-15);
  const auto pl = combine_plus(l, r, 1);
  EXPECT_NEAR(pl[0](0, 0) / pl[1](0, 0), (0.7 * 0.4) / (0.3 * 0.6), 1e-15);
  (void)model;
}

TEST(Combine, ZeroRightGivesZero) {
  const auto c = build_prefix_chain(4, 2);
  const EvidencePair l{leaf_evidence(c, std::nullopt, 0), leaf_evidence(c, std::nullopt, 1)};
  const EvidencePair z{EvidenceMatrix(c.num_states()), EvidenceMatrix(c.num_states())};
  for (const auto& out : {combine_minus(l, z), combine_plus(l, z, 0)}) {
    EXPECT_EQ(out[0].sum(), 0.0);
    EXPECT_EQ(out[1].sum(), 0.0);
  }
  const EvidencePair small{EvidenceMatrix(2), EvidenceMatrix(2)};
  EXPECT_THROW(combine_minus(l, small), Error);
}

TEST(ScConditional, NoiselessRevealsU) {
  const auto c = build_prefix_chain(4, 2);
  const std::vector<int> x{0, 1, 1, 0};
  const auto u = polar_transform(x);
  const std::vector<int> z{0};
  const auto ev = StateEvent::from_sets(c.num_states(), z, z);
  const auto p = sc_conditional(c, ev, x, {}, 4);
  EXPECT_NEAR(p[static_cast<std::size_t>(u[0])], 1.0, 1e-15);
}

TEST(ScConditional, ModChainConstantY) {
  const auto c = attach_channel(build_mod_chain(2), Channel::constant());
  const std::vector<int> z{0};
  const auto ev = StateEvent::from_sets(2, z, z);
  const std::vector<int> y{0, 0};
  auto p = sc_conditional(c, ev, y, {}, 2);
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  EXPECT_NEAR(p[1], 0.0, 1e-15);
  p = sc_conditional(c, ev, y, std::vector<int>{0}, 2);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.5, 1e-15);
}

TEST(ScConditional, OracleEquivalence) {
  struct Case {
    std::string name;
    FimProcess proc;
  };
  std::vector<Case> cases{
      {"condensed-4-2+bsc", attach_channel(build_condensed_chain(4, 2), Channel::bsc("0.11"))},
      {"mod-3+bsc", attach_channel(build_mod_chain(3), Channel::bsc("0.2"))},
      {"random-3", fixtures::random_chain(3, 17)},
      {"hmm-2", fixtures::two_state_hmm()},
      {"half4+bec", attach_channel(build_prefix_chain(4, 2), Channel::bec("0.3"))},
  };
  for (const auto& cs : cases) {
    const auto ps = detect_phases(cs.proc);
    for (std::size_t n : {2U, 4U, 8U}) {
      if (cs.name == "hmm-2" && n == 8) continue;
      std::vector<StateEvent> events{StateEvent::all(cs.proc.num_states())};
      if (static_cast<int>(n) >= ps.d) events.push_back(StateEvent::phase_class_event(ps, 0));
      for (const auto& ev : events) {
        for (bool with_y : {true, false}) {
          const auto r = oracle::compare_sc(cs.proc, ev, n, with_y);
          EXPECT_LT(r.max_gap, 1e-10) << cs.name << " N=" << n;
          EXPECT_EQ(r.zero_mismatches, 0U) << cs.name;
          EXPECT_GT(r.comparisons, 0U);
        }
      }
    }
  }
}

TEST(ScConditional, ImpossibleObservationIsZeroEvidence) {
  const auto c = build_prefix_chain(4, 2);
  const std::vector<int> z{0};
  const auto ev = StateEvent::from_sets(c.num_states(), z, z);
  try {
    sc_conditional(c, ev, std::vector<int>{1, 1, 1, 1}, {}, 4);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroEvidence);
  }
}

TEST(ScDecode, NoiselessInformationRecoversX) {
  const auto c = build_condensed_chain(4, 2);
  const std::vector<int> z{0};
  const auto ev = StateEvent::from_sets(c.num_states(), z, z);
  const std::vector<int> x{1, 0, 0, 1, 0, 1, 1, 0};
  const std::vector<Decision> dec(8, Decision::information());
  const auto r = sc_decode(c, ev, x, dec, [] { return 0.0; });
  EXPECT_EQ(r.x, x);
  EXPECT_EQ(r.u, polar_transform(x));
}

TEST(ScDecode, FrozenContradictionIsZeroEvidence) {
  const auto c = attach_channel(build_mod_chain(2), Channel::constant());
  const std::vector<int> z{0};
  const auto ev = StateEvent::from_sets(2, z, z);
  std::vector<Decision> dec{Decision::frozen(1), Decision::shaped()};
  try {
    sc_decode(c, ev, {}, dec, [] { return 0.5; });
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroEvidence);
  }
}

TEST(ScDecode, AllShapedMatchesLaw) {
  const auto c = build_prefix_chain(4, 2);
  const std::vector<int> z{0};
  const auto ev = StateEvent::from_sets(c.num_states(), z, z);
  const auto law = enumerate_support(c, ev, 4);
  auto rng = make_stream(21, 0);
  const std::vector<Decision> dec(4, Decision::shaped());
  std::map<std::string, int> counts;
  const int trials = 100000;
  for (int k = 0; k < trials; ++k) {
    const auto r = sc_decode(c, ev, {}, dec, [&] { return uniform01(rng); });
    ++counts[fixtures::word(r.x)];
  }
  double chi2 = 0.0;
  for (const auto& [w, p] : law) {
    const double e = p * trials;
    const double o = counts.count(w) ? counts[w] : 0;
    chi2 += (o - e) * (o - e) / e;
  }
  EXPECT_EQ(counts.size(), law.size());
  // 5 degrees of freedom; 20.5 is the 0.001 upper quantile.
  EXPECT_LT(chi2, 20.5);
}

TEST(SequenceProbability, Half4) {
  const auto c = build_prefix_chain(4, 2);
  const std::vector<int> z{0};
  const auto ev = StateEvent::from_sets(c.num_states(), z, z);
  const std::vector<int> x{0, 1, 1, 0};
  EXPECT_NEAR(sequence_probability(c, ev, x, x), 1.0 / 6, 1e-15);
  EXPECT_EQ(sequence_probability(c, ev, {1, 1, 1, 1}, {}), 0.0);
}

TEST(SequenceProbability, SumsToEventMass) {
  const auto c = attach_channel(build_mod_chain(3), Channel::bsc("0.1"));
  const std::vector<int> s0{0}, s2{2};
  const auto ev = StateEvent::from_sets(3, s0, s2);
  const auto pi = stationary_distribution(c);
  double total = 0.0;
  for (std::uint32_t xv = 0; xv < 16; ++xv) {
    for (std::uint32_t yv = 0; yv < 16; ++yv) {
      total += std::exp2(sequence_log2_probability(c, pi, ev, fixtures::bits_of(xv, 4), fixtures::bits_of(yv, 4)));
    }
  }
  const auto joint = ExactJoint::enumerate(c, pi, ev, 4);
  EXPECT_NEAR(total, joint.event_mass(), 1e-12);
}

TEST(ScDecoder, LongBlockStaysFinite) {
  const auto c = attach_channel(build_condensed_chain(4, 2), Channel::bsc("0.05"));
  const auto pi = stationary_distribution(c);
  const std::vector<int> z{0};
  const auto ev = StateEvent::from_sets(c.num_states(), z, z);
  auto rng = make_stream(2, 0);
  const auto path = PathSampler(c, pi, ev, 4096).sample(rng);
  const TrellisModel model(c);
  auto dec = make_decoder(model, pi, ev, path.y, 4096);
  const auto u = polar_transform(path.x);
  for (std::size_t i = 0; i < 4096; ++i) {
    const auto p = dec.conditional();
    ASSERT_TRUE(std::isfinite(p[0]));
    ASSERT_GT(p[static_cast<std::size_t>(u[i])], 0.0);
    dec.commit(u[i]);
  }
  EXPECT_EQ(dec.x(), path.x);
}
