#include <gtest/gtest.h>

#include <cmath>

#include "spinwave/atomphys.hpp"

using namespace spinwave;

TEST(Stark, DefaultShiftAndPhase) {
  const StarkParams s;
  const double khz = units::hz_from_angular(differential_shift(s)) / 1e3;
  EXPECT_NEAR(khz, -38.4112, 1e-3);
  EXPECT_NEAR(khz / -36.0, 1.0, 0.15);
  EXPECT_NEAR(stark_phase(s), -0.48269, 1e-4);
  EXPECT_NEAR(std::abs(stark_phase(s)) / 0.45, 1.0, 0.15);
}

TEST(Stark, PrefactorFromFieldAmplitude) {
  StarkParams s;
  // 35 mW/cm^2 = 350 W/m^2
  const double e = std::sqrt(350.0 / (8.8541878128e-12 * 299792458.0));
  const double omega = e * 3.58e-29 / 1.054571817e-34;
  EXPECT_NEAR(stark_prefactor(s) / (omega * omega / 4), 1.0, 1e-12);
  s.field = FieldConvention::Peak;
  EXPECT_NEAR(stark_prefactor(s) / (omega * omega / 2), 1.0, 1e-12);
}

TEST(Stark, LinearInIntensityAndTime) {
  StarkParams a, b;
  b.intensity = 3 * a.intensity;
  EXPECT_NEAR(differential_shift(b) / differential_shift(a), 3.0, 1e-12);
  b = a;
  b.field = FieldConvention::Peak;
  EXPECT_NEAR(differential_shift(b) / differential_shift(a), 2.0, 1e-12);
  b = a;
  b.T = 0.0;
  EXPECT_EQ(stark_phase(b), 0.0);
  b.T = 5e-6;
  EXPECT_NEAR(stark_phase(b) / stark_phase(a), 2.5, 1e-12);
}

TEST(Stark, SignFlipsAcrossPole) {
  StarkParams s;
  const double pole = stark_terms_h(s)[0].offset;
  s.delta_s = pole - kTwoPi * 5e6;
  const double below = differential_shift(s);
  s.delta_s = pole + kTwoPi * 5e6;
  const double above = differential_shift(s);
  EXPECT_LT(below, 0.0);
  EXPECT_GT(above, 0.0);
}

TEST(Stark, PoleGuard) {
  StarkParams s;
  for (const auto& t : stark_terms_g(s)) {
    s.delta_s = t.offset + kTwoPi * 0.5e6;
    EXPECT_THROW(differential_shift(s), PoleProximityError);
  }
  s.delta_s = stark_terms_h(s)[2].offset;
  EXPECT_THROW(stark_shift_h(s), PoleProximityError);
  EXPECT_NO_THROW(stark_shift_g(s));
}

TEST(Stark, FarDetunedShiftFallsAsInverseSquare) {
  // the coefficient sums of both levels are 1/3, so the 1/delta term cancels
  StarkParams s;
  const double c = stark_prefactor(s) * (2.0 / 3 * s.A0 - 59.0 / 48 * s.A1);
  for (double d : {1e14, -1e14}) {
    s.delta_s = d;
    EXPECT_NEAR(differential_shift(s) * d * d / c, 1.0, 1e-3);
  }
}

TEST(Stark, RejectsBadParameters) {
  StarkParams s;
  s.intensity = -1;
  EXPECT_THROW(differential_shift(s), DomainError);
  s = {};
  s.T = -1;
  EXPECT_THROW(stark_phase(s), DomainError);
  s = {};
  s.delta_s = std::nan("");
  EXPECT_THROW(differential_shift(s), DomainError);
}

TEST(PhaseMatch, UnitAtZeroAndEven) {
  const EnsembleGeometry g;
  EXPECT_EQ(phasematch_efficiency(0.0, g), 1.0);
  for (double k : {5.0, 44.0, 120.0}) EXPECT_EQ(phasematch_efficiency(k, g), phasematch_efficiency(-k, g));
  EXPECT_NEAR(phasematch_efficiency(44.0, g), 0.8867924534262152, 1e-13);
}

TEST(PhaseMatch, MonotoneInTransverseWavevector) {
  const EnsembleGeometry g;
  double last = 1.0;
  for (double k = 1.0; k < 300.0; k += 1.0) {
    const double e = phasematch_efficiency(k, g);
    EXPECT_LT(e, last);
    last = e;
  }
}

TEST(PhaseMatch, ClosedFormMatchesQuadrature) {
  const EnsembleGeometry g;
  for (double k : {0.0, 10.0, 44.0, 88.0, 150.0, 250.0})
    EXPECT_NEAR(phasematch_efficiency_quadrature(k, g), phasematch_efficiency(k, g), 1e-8) << k;
}

TEST(PhaseMatch, ParaxialLimit) {
  const EnsembleGeometry g;
  for (double k : {10.0, 44.0, 150.0}) {
    EXPECT_NEAR(phase_mismatch_paraxial(k, g) / phase_mismatch(k, g), 1.0, 1e-4);
    // exact mismatch: sqrt(k_r^2 - K^2) - k_r
    EXPECT_NEAR(phase_mismatch(k, g), std::sqrt(g.k_r * g.k_r - k * k) - g.k_r, 1e-9);
  }
  EXPECT_THROW(phase_mismatch(g.k_r, g), DomainError);
  EXPECT_THROW(phase_mismatch(1.0, EnsembleGeometry{-1.0}), DomainError);
}

TEST(PhaseMatch, MapBandSitsAtZeroReadWavevector) {
  const EnsembleGeometry g;
  const auto spec = decompose(sine_pattern(balanced_chi(), 0, 44));
  const int n = 61;
  const auto map = phasematch_map(g, spec, 44, -150, 150, n);
  ASSERT_EQ(map.size(), std::size_t(n * n));
  // column sums over k_w as a function of k_r
  std::vector<double> col(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) col[j] += map[i * n + j].value;
  const int mid = n / 2;
  EXPECT_NEAR(map[mid].k_r, 0.0, 1e-12);
  for (int j = 0; j < n; ++j)
    if (j != mid) {
      EXPECT_LT(col[j], col[mid]);
    }
  for (const auto& pt : map) {
    EXPECT_GE(pt.value, 0.0);
    EXPECT_LE(pt.value, 1.0 + 1e-12);
  }
  EXPECT_THROW(phasematch_map(g, spec, 44, -1, 1, 1), DomainError);
}

TEST(Noise, ModeCountAndPerModeProbability) {
  const EnsembleGeometry g;
  const auto n = noise_mode_estimate(g, 1e8, kGammaNoise, 2e-6);
  // 4 mm x (0.3 mm)^2 / (795 nm)^3
  EXPECT_NEAR(n.modes, 4.0 * 0.09 / std::pow(795e-6, 3), 1e-6 * n.modes);
  EXPECT_NEAR(n.modes / 7e8, 1.0, 0.05);
  EXPECT_LT(n.per_mode_probability, 3e-10);
  EXPECT_NEAR(n.per_mode_probability, 1e8 * 1e-3 * 2e-6 / n.modes, 1e-22);
  EXPECT_THROW(noise_mode_estimate(g, 0.0, 1e-3, 1e-6), DomainError);
}
