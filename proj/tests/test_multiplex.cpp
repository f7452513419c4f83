#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

#include "spinwave/multiplex.hpp"

using namespace spinwave;

TEST(HeraldedSingle, Values) {
  EXPECT_NEAR(g2_heralded_single(0.05), 0.18594104308390022, 1e-15);
  EXPECT_EQ(g2_heralded_single(0.0), 0.0);
  EXPECT_NEAR(g2_heralded_single(1.0), 1.5, 1e-15);
  // low gain: 4p
  EXPECT_NEAR(g2_heralded_single(1e-6) / 4e-6, 1.0, 1e-5);
  EXPECT_THROW(g2_heralded_single(-0.1), DomainError);
}

TEST(BinomialTail, IncompleteBetaMatchesLogSum) {
  for (long M : {100L, 4000L})
    for (double q : {1e-4, 0.002, 0.01, 0.05})
      for (long l = 0; l <= 10; ++l) {
        const SourceParams s{q, 1.0, 1.0, M, 1.0};
        EXPECT_NEAR(p_at_least_l(s, l), binomial_tail_logsum(M, l, q), 1e-10) << M << " " << q << " " << l;
        if (l > 0) {
          EXPECT_NEAR(ibeta(double(l), double(M - l + 1), q), boost::math::ibeta(double(l), double(M - l + 1), q),
                      1e-10);
        }
      }
}

TEST(BinomialTail, FrozenValues) {
  const SourceParams s{1e-2, 0.2, 1.0, 4000, 1.0};
  EXPECT_NEAR(p_at_least_l(s, 1), 1 - std::pow(0.998, 4000), 1e-12);
  EXPECT_NEAR(p_at_least_l(s, 1), 0.99966721, 1e-8);
  EXPECT_NEAR(p_at_least_l(s, 3), 0.98631, 1e-5);
}

TEST(BinomialTail, Boundaries) {
  const SourceParams s{0.5, 0.5, 1.0, 20, 1.0};
  EXPECT_EQ(p_at_least_l(s, 0), 1.0);
  EXPECT_NEAR(p_at_least_l(s, 20), std::pow(0.25, 20), 1e-25);
  EXPECT_THROW(p_at_least_l(s, 21), DomainError);
  EXPECT_THROW(p_at_least_l(s, -1), DomainError);
  EXPECT_EQ(p_at_least_l({0.0, 0.5, 1.0, 20, 1.0}, 3), 0.0);
  EXPECT_EQ(ibeta(2, 3, 0.0), 0.0);
  EXPECT_EQ(ibeta(2, 3, 1.0), 1.0);
  EXPECT_THROW(ibeta(0, 3, 0.5), DomainError);
  EXPECT_THROW(ibeta(2, 3, 1.5), DomainError);
  EXPECT_EQ(binomial_tail_logsum(10, 11, 0.5), 0.0);
  EXPECT_THROW(p_at_least_l({0.1, 0.5, 1.0, 0, 1.0}, 0), DomainError);
}

TEST(BinomialTail, PmfSumsToOne) {
  const SourceParams s{0.3, 0.4, 1.0, 100, 1.0};
  double sum = 0.0;
  for (long l = 0; l <= s.M; ++l) sum += p_exactly_l(s, l);
  EXPECT_NEAR(sum, 1.0, 1e-12);
  // tail difference is the pmf
  for (long l = 0; l < 10; ++l) EXPECT_NEAR(p_at_least_l(s, l) - p_at_least_l(s, l + 1), p_exactly_l(s, l), 1e-12);
}

TEST(ModeGuideline, ValuesAndTailProperty) {
  EXPECT_EQ(mode_guideline(1, 0.01, 0.2), 2000);
  EXPECT_EQ(mode_guideline(4, 0.01, 0.2), 5000);
  for (long l = 1; l <= 10; ++l)
    for (double p : {0.005, 0.01, 0.05})
      for (double eta : {0.05, 0.2, 0.5}) {
        const long m = mode_guideline(l, p, eta);
        EXPECT_GT(p_at_least_l({p, eta, 1.0, m, 1.0}, l), 0.98) << l << " " << p << " " << eta;
      }
  EXPECT_THROW(mode_guideline(0, 0.01, 0.2), DomainError);
  EXPECT_THROW(mode_guideline(1, 0.0, 0.2), DomainError);
}

TEST(Rates, MultiplexedBeatsUnsynchronized) {
  for (char set : {'a', 'b'}) {
    const auto sc = rate_parameters(set);
    for (long l = 1; l <= 10; ++l)
      for (bool sw : {false, true}) {
        const Rates r = rates(sc.us, sc.qm, l, sw);
        EXPECT_GE(r.P_qm, r.P_us) << set << " " << l;
        if (l >= 3) {
          EXPECT_GT(r.R_qm / r.R_us, 10.0) << set << " " << l;
        }
      }
  }
  EXPECT_THROW(rate_parameters('c'), DomainError);
}

TEST(Rates, UnsynchronizedIsProductOfSingles) {
  const SourceParams us{0.01, 0.9, 0.9, 1, 2.0};
  const SourceParams qm;
  const Rates r = rates(us, qm, 3);
  EXPECT_NEAR(r.P_us, std::pow(0.01 * 0.81, 3), 1e-18);
  EXPECT_NEAR(r.R_us, 2 * r.P_us, 1e-18);
  EXPECT_NEAR(rates(us, qm, 3, true).P_us, r.P_us / 27, 1e-18);
  EXPECT_NEAR(r.P_qm, p_at_least_l(qm, 3) * std::pow(qm.eta_r, 3), 1e-15);
  EXPECT_EQ(rates(us, qm, 0).P_us, 1.0);
  EXPECT_THROW(rates(us, qm, -1), DomainError);
  EXPECT_THROW(rates(us, 3), DomainError);
}

TEST(Enc, LosslessFidelityIsOneOnEveryPattern) {
  for (double phi : {0.0, 0.7, 2.2}) {
    const auto out = enc_outcomes(phi, 1.3 * phi);
    ASSERT_EQ(out.size(), 4u);
    for (const auto& o : out) {
      EXPECT_NEAR(o.fidelity, 1.0, 1e-12) << pattern_name(o.pattern);
      EXPECT_NEAR(o.probability, 1.0 / 32, 1e-12);
    }
  }
}

TEST(Enc, CircuitIsUnitary) {
  const CMatrix u = enc_circuit();
  EXPECT_LT((u * u.adjoint() - CMatrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Purification, SuccessProbability) { EXPECT_NEAR(purification_success_probability(), 0.5, 1e-12); }

TEST(Repeater, MonteCarloMatchesAnalytic) {
  const RepeaterParams rp;
  const auto r = repeater_monte_carlo(rp, 100000, 1);
  EXPECT_EQ(r.eng.trials, 100000u);
  EXPECT_NEAR(r.eng.probability(), r.eng_analytic, 3 * r.eng.sigma());
  EXPECT_NEAR(r.enc.probability(), r.enc_analytic, 3 * r.enc.sigma());
  EXPECT_NEAR(r.purify.probability(), r.purify_analytic, 3 * r.purify.sigma());
  EXPECT_NEAR(r.enc_analytic, 0.125, 1e-12);
  EXPECT_NEAR(r.enc_fidelity, 1.0, 1e-12);
  EXPECT_EQ(std::accumulate(r.pair_gap_histogram.begin(), r.pair_gap_histogram.end(), std::uint64_t{0}),
            r.eng.successes);
  EXPECT_NEAR(rp.eta_w(), std::exp(-25.0 / 22.0) * 0.5, 1e-15);
}

TEST(Repeater, ThreadCountDoesNotChangeResult) {
  const RepeaterParams rp;
  const auto a = repeater_monte_carlo(rp, 35000, 9, 1), b = repeater_monte_carlo(rp, 35000, 9, 4);
  EXPECT_EQ(a.eng.successes, b.eng.successes);
  EXPECT_EQ(a.enc.successes, b.enc.successes);
  EXPECT_EQ(a.purify.successes, b.purify.successes);
  EXPECT_EQ(a.pair_gap_histogram, b.pair_gap_histogram);
}

TEST(Repeater, RejectsBadParameters) {
  RepeaterParams rp;
  rp.M = 1;
  EXPECT_THROW(repeater_monte_carlo(rp, 10, 1), DomainError);
  rp = {};
  rp.eta_cam = 1.5;
  EXPECT_THROW(repeater_monte_carlo(rp, 10, 1), DomainError);
  EXPECT_THROW(repeater_monte_carlo(RepeaterParams{}, 0, 1), DomainError);
}
