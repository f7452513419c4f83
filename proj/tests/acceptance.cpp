// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spinwave/spinwave.hpp"

using namespace spinwave;

namespace {

struct Check {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << " [failed: " << what << "]";
    }
  }
};

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<void(Check&)> body;
};

using PM = PairModes;

double hom_g2(double p, double tau, double d, MomentEngine e, int cutoff = kDefaultCutoff) {
  const auto v = network_moments(hom_network(p, tau), heralded_lists({PM::wa, PM::wb}, PM::rc, PM::rd), e, cutoff);
  return g2_assemble({v[0], v[1], v[2], v[3]}, d)->value;
}

void c1(Check& c) {
  const double closed = g2_hom_closed(0.05, 1.0, 0.017).value;
  const double oracle = hom_g2(0.05, 1.0, 0.017, MomentEngine::PairOracle);
  c.note << "closed " << closed << ", oracle " << oracle << ", rel " << std::abs(oracle / closed - 1);
  c.require(std::abs(closed - 0.172) <= 0.001, "0.172 +- 0.001");
  c.require(std::abs(oracle / closed - 1) <= 1e-6, "closed vs oracle 1e-6");
  c.require(std::abs(closed - 0.20) <= 0.06, "inside 0.20 +- 0.06");
}

void c2(Check& c) {
  double worst = 1.0;
  for (int i = 0; i <= 20; ++i) {
    const double tau = 0.8 + 0.01 * i;
    worst = std::min(worst, visibility(g2_hom_closed(0.05, tau, 0.017)).value);
  }
  c.note << "min visibility over tau in [0.8, 1]: " << worst;
  c.require(worst > 0.5, "V > 0.5");
}

void c3(Check& c) {
  const auto h = hbt_correlations(0.05, 0.1, 0.017, MomentEngine::PairOracle);
  c.note << "cross " << h.cross.value << ", auto rc " << h.auto_rc.value << ", auto rd " << h.auto_rd.value;
  c.require(h.cross.value >= 0.31 && h.cross.value <= 0.37, "cross in [0.31, 0.37]");
  c.require(h.auto_rc.value < 1.0, "auto rc < 1");
  c.require(h.auto_rd.value > 1.0 && h.auto_rd.value < 2.0, "1 < auto rd < 2");
}

void c4(Check& c) {
  const auto g = g2_phase_averaged(classical_hom_network(0.1, 0.1), ClassicalModes::rc, ClassicalModes::rd);
  c.note << "phase-averaged g2 " << g.value;
  c.require(std::abs(g.value - 0.5) <= 0.005, "0.500 +- 0.005");
}

void c5(Check& c) {
  // vb ra rb va plus the two idlers; one photon counted on each idler
  const int n = 6;
  const double theta = 0.4;
  Network net{n, {}, InputSpec::vacuum(n)};
  net.stages.push_back(squeezer_from_pair_probability(0.05, 4, 1, n));
  net.stages.push_back(squeezer_from_pair_probability(0.05, 5, 2, n));
  net.stages.push_back(threeway_splitter(theta, {0, 1, 2, 3}, n));
  const auto h = heralded_state(prepare(physical(net), 8),
                                HeraldPattern{{{5, Herald::ExactlyOne}, {4, Herald::ExactlyOne}}}, {2, 1});
  if (!h.state) {
    c.require(false, "herald fired");
    return;
  }
  const auto& d = *h.state;
  const double w00 = d.probability({0, 0}), w01 = d.probability({0, 1}), w10 = d.probability({1, 0});
  const double a = d.probability({2, 0}), b = d.probability({0, 2});
  const cd x = d.element({2, 0}, {0, 2});
  c.note << "weights " << w00 << " " << w01 << " " << w10 << " " << a + b << ", |rho(20,02)| " << std::abs(x);
  c.require(std::abs(w00 - 1.0 / 9) < 1e-9 && std::abs(w01 - 2.0 / 9) < 1e-9 && std::abs(w10 - 2.0 / 9) < 1e-9,
            "1/9, 2/9, 2/9");
  c.require(std::abs(a + b - 4.0 / 9) < 1e-9, "4/9");
  c.require(std::abs(a - b) < 1e-9 && std::abs(std::norm(x) - a * b) < 1e-9, "bunched block pure and balanced");
  c.require(std::abs(d.probability({1, 1})) < 1e-9, "no (1,1) term");
  // relative phase of the two bunched terms fixed by the splitter phase
  const double ph = std::remainder(std::arg(x) - (std::numbers::pi - 2 * theta), kTwoPi);
  c.require(std::abs(ph) < 1e-9, "relative phase");
}

void c6(Check& c) {
  double worst = 0.0;
  for (double chi : {0.3, 1.0, 1.4346956508195629, 2.4, 3.7})
    for (double th : {0.0, 0.9}) {
      const auto p = sine_pattern(chi, th, 44.0);
      const auto ja = decompose(p, 10), nu = decompose_numeric(p, 10);
      for (int m = -10; m <= 10; ++m) worst = std::max(worst, std::abs(ja.at(m) - nu.at(m)));
    }
  const double chi = balanced_chi();
  const double r = rms(sine_pattern(chi, 0.0, 44.0));
  c.note << "max |JA - numeric| " << worst << ", chi* " << chi << ", RMS " << r;
  c.require(worst < 1e-10, "Jacobi-Anger 1e-10");
  c.require(std::abs(std::cyl_bessel_j(0.0, chi) - std::cyl_bessel_j(1.0, chi)) < 1e-12, "J0 = J1");
  c.require(std::abs(r - chi / std::numbers::sqrt2) < 1e-15 && r >= 0.99 && r <= 1.04, "RMS in [0.99, 1.04]");
}

void c7(Check& c) {
  const FitForm f;
  const auto [s0, s1] = g2_fit_forms(f, 0.0);
  bool decaying = true;
  for (double x = 0.0; x < 4.0; x += 0.05)
    decaying = decaying && f.alpha * std::exp(-f.gamma * (x + 0.05)) < f.alpha * std::exp(-f.gamma * x);
  const double chi = balanced_chi();
  const auto [a, b] = g2_fit_forms(f, chi);
  // the two curves change order at chi*
  const auto [lo0, lo1] = g2_fit_forms(f, chi - 0.05);
  const auto [hi0, hi1] = g2_fit_forms(f, chi + 0.05);
  c.note << "g2(0) " << s0 << ", curves at chi* " << a << " / " << b;
  c.require(std::abs(s0 - 24.1) < 1e-12, "g2(0) = 24.1");
  c.require(decaying, "decaying envelope");
  c.require(std::abs(a - b) < 1e-9 && lo0 > lo1 && hi0 < hi1, "crossing at chi*");
}

void c8(Check& c) {
  const CoincidenceGrid g;
  const CountingModel cm{0.5, 1e-4};
  const auto bal = coincidence_map(g, decompose(sine_pattern(balanced_chi(), 0, g.k_g)), 0.01, cm, 1000000, 1);
  const auto p0 = bal.at(0, 0), pp = bal.at(0, g.cells_per_order), pm = bal.at(0, g.cells - g.cells_per_order);
  const auto bg = bal.at(0, g.cells_per_order / 2);
  const double s1 = std::hypot(p0.sigma, pp.sigma), s2 = std::hypot(p0.sigma, pm.sigma), s3 = std::hypot(pp.sigma, pm.sigma);
  c.note << "peaks " << pm.g2 << " / " << p0.g2 << " / " << pp.g2 << " (sigma " << p0.sigma << "), background " << bg.g2;
  c.require(p0.g2 > 10 && pp.g2 > 10 && pm.g2 > 10 && std::abs(bg.g2 - 1) < 0.1, "three peaks");
  c.require(std::abs(p0.g2 - pp.g2) < 3 * s1 && std::abs(p0.g2 - pm.g2) < 3 * s2 && std::abs(pp.g2 - pm.g2) < 3 * s3,
            "equal heights within 3 sigma");
  const auto none = coincidence_map(g, decompose(sine_pattern(0.0, 0, g.k_g)), 0.01, cm, 1000000, 2);
  const auto n0 = none.at(0, 0), np = none.at(0, g.cells_per_order), nm = none.at(0, g.cells - g.cells_per_order);
  c.note << "; unmodulated " << n0.g2 << " with side cells " << np.g2 << " / " << nm.g2;
  c.require(n0.g2 > 10 && std::abs(np.g2 - 1) < 0.1 && std::abs(nm.g2 - 1) < 0.1, "single peak without modulation");
}

void c9(Check& c) {
  const StarkParams s;
  const double khz = units::hz_from_angular(differential_shift(s)) / 1e3;
  const double phi = stark_phase(s);
  c.note << "shift/2pi " << khz << " kHz, phase " << phi << " rad";
  c.require(std::abs(khz / -36.0 - 1) <= 0.15, "-36 kHz within 15%");
  c.require(std::abs(std::abs(phi) / 0.45 - 1) <= 0.15, "|phase| about 0.45 rad");
}

void c10(Check& c) {
  const EnsembleGeometry g;
  double worst = 0.0;
  for (double k = -250.0; k <= 250.0; k += 12.5)
    worst = std::max(worst, std::abs(phasematch_efficiency(k, g) - phasematch_efficiency_quadrature(k, g)));
  const int n = 61;
  const auto map = phasematch_map(g, decompose(sine_pattern(balanced_chi(), 0, 44)), 44, -150, 150, n);
  std::vector<double> col(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) col[j] += map[static_cast<std::size_t>(i * n + j)].value;
  int best = 0;
  for (int j = 1; j < n; ++j)
    if (col[j] > col[best]) best = j;
  const double k_band = map[static_cast<std::size_t>(best)].k_r;
  c.note << "eff(0) " << phasematch_efficiency(0, g) << ", max |closed - quadrature| " << worst << ", band at k_r "
         << k_band;
  c.require(phasematch_efficiency(0, g) == 1.0, "eff(0) = 1");
  c.require(worst < 1e-8, "quadrature 1e-8");
  c.require(std::abs(k_band) < 1e-9, "band at k_r = 0");
}

void c11(Check& c) {
  double worst = 0.0;
  for (long M : {100L, 4000L})
    for (double q : {1e-3, 0.002, 0.01})
      for (long l = 0; l <= 10; ++l)
        worst = std::max(worst, std::abs(p_at_least_l({q, 1.0, 1.0, M, 1.0}, l) - binomial_tail_logsum(M, l, q)));
  double min_tail = 1.0;
  for (long l = 1; l <= 10; ++l)
    for (double p : {0.005, 0.01, 0.02, 0.05})
      for (double eta : {0.05, 0.1, 0.2, 0.5})
        min_tail = std::min(min_tail, p_at_least_l({p, eta, 1.0, mode_guideline(l, p, eta), 1.0}, l));
  bool ordered = true;
  double min_ratio = 1e300;
  for (char set : {'a', 'b'}) {
    const auto sc = rate_parameters(set);
    for (long l = 0; l <= 10; ++l)
      for (bool sw : {false, true}) {
        const Rates r = rates(sc.us, sc.qm, l, sw);
        ordered = ordered && r.P_qm >= r.P_us;
        if (l >= 3) min_ratio = std::min(min_ratio, r.R_qm / r.R_us);
      }
  }
  c.note << "max |ibeta - logsum| " << worst << ", min tail at M* " << min_tail << ", min R_qm/R_us (l>=3) "
         << min_ratio;
  c.require(worst <= 1e-10, "ibeta vs logsum 1e-10");
  c.require(min_tail > 0.98, "guideline tail > 0.98");
  c.require(ordered, "P_qm >= P_us");
  c.require(min_ratio > 10, "ratio > 10");
}

void c12(Check& c) {
  const auto n = noise_mode_estimate(EnsembleGeometry{}, 1e8, kGammaNoise, 2e-6);
  c.note << "modes " << n.modes << ", per-mode probability " << n.per_mode_probability;
  c.require(std::abs(n.modes / 7e8 - 1) < 0.05, "about 7e8 modes");
  c.require(n.per_mode_probability < 3e-10, "< 3e-10");
}

void c13(Check& c) {
  double fid = 1.0;
  for (double phi : {0.0, 0.6, 1.9})
    for (const auto& o : enc_outcomes(phi, phi)) fid = std::min(fid, o.fidelity);
  const auto r = repeater_monte_carlo(RepeaterParams{}, 100000, 1);
  const double z = std::abs(r.eng.probability() - r.eng_analytic) / r.eng.sigma();
  c.note << "min ENC fidelity " << fid << ", ENG " << r.eng.probability() << " vs " << r.eng_analytic << " (" << z
         << " sigma)";
  c.require(std::abs(fid - 1) < 1e-12, "fidelity 1");
  c.require(z < 3, "ENG within 3 sigma");
}

void c14(Check& c) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  double worst_wick = 0.0, worst_oracle = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double p = 0.1 * u(rng), tau = u(rng), d = 0.05 * u(rng);
    const double closed = g2_hom_closed(p, tau, d).value;
    const double wick = hom_g2(p, tau, d, MomentEngine::Wick);
    const double orc = hom_g2(p, tau, d, MomentEngine::PairOracle, 12);
    worst_wick = std::max(worst_wick, std::abs(wick / closed - 1));
    worst_oracle = std::max(worst_oracle, std::abs(orc / closed - 1));
  }
  c.note << "max rel closed-vs-Wick " << worst_wick << ", closed-vs-oracle " << worst_oracle;
  c.require(worst_wick <= 1e-6 && worst_oracle <= 1e-6, "relative 1e-6");
}

}  // namespace

int main() {
  const std::vector<Criterion> all{
      {1, "HOM dip value", 1, c1},          {2, "HOM visibility", 1, c2},
      {3, "HBT configuration", 10, c3},     {4, "classical HOM", 5, c4},
      {5, "heralded state weights", 5, c5}, {6, "diffraction benchmarks", 1, c6},
      {7, "fit-form curves", 1, c7},        {8, "coincidence map", 60, c8},
      {9, "Stark numbers", 1, c9},          {10, "phase matching", 5, c10},
      {11, "multiplex rates", 5, c11},      {12, "noise estimates", 1, c12},
      {13, "repeater", 30, c13},            {14, "oracle suite", 60, c14},
  };
  int failed = 0;
  for (const auto& cr : all) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (dt > cr.budget_s) {
      std::ostringstream w;
      w << "runtime over " << cr.budget_s << " s";
      c.require(false, w.str());
    }
    if (!c.pass) ++failed;
    std::printf("%s criterion %d (%s): %s (%.2f s)\n", c.pass ? "PASS" : "FAIL", cr.id, cr.title, c.note.str().c_str(),
                dt);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
