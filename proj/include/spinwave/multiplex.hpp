#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "spinwave/errors.hpp"
#include "spinwave/fockoracle.hpp"
#include "spinwave/gaussnet.hpp"

namespace spinwave {

// g2 of the heralded single photon for pair probability p.
inline double g2_heralded_single(double p) {
  if (!(p >= 0.0) || p > 1.0) throw DomainError("pair probability must lie in [0, 1]");
  return 2.0 * p * (2.0 + p) / ((1.0 + p) * (1.0 + p));
}

struct SourceParams {
  double p = 1e-2;
  double eta_w = 0.2;
  double eta_r = 0.72;
  long M = 4000;
  double rep_rate = 1.0;  // Hz

  void validate() const {
    for (double v : {p, eta_w, eta_r})
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("probabilities and efficiencies must lie in [0, 1]");
    if (M < 1) throw DomainError("mode count must be at least 1");
    if (!(rep_rate >= 0.0)) throw DomainError("repetition rate must be non-negative");
  }
  double herald() const { return p * eta_w; }
};

namespace detail {
// Continued fraction for I_x(a, b), modified Lentz.
inline double betacf(double a, double b, double x) {
  constexpr double tiny = 1e-300, eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 100000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw NumericalFailure("incomplete Beta continued fraction did not converge");
}
}  // namespace detail

// Regularized incomplete Beta I_x(a, b), with the symmetry
// I_x(a, b) = 1 - I_{1-x}(b, a) keeping the fraction in its fast regime.
inline double ibeta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("ibeta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("ibeta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(lbt) * detail::betacf(a, b, x) / a;
  return 1.0 - std::exp(lbt) * detail::betacf(b, a, 1.0 - x) / b;
}

inline double log_binomial_pmf(long n, long k, double q) {
  if (q == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (q == 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  const auto nd = static_cast<double>(n), kd = static_cast<double>(k);
  return std::lgamma(nd + 1) - std::lgamma(kd + 1) - std::lgamma(nd - kd + 1) + kd * std::log(q) +
         (nd - kd) * std::log1p(-q);
}

// P(X >= l), X ~ Bin(n, q), by log-sum-exp over the tail terms.
inline double binomial_tail_logsum(long n, long l, double q) {
  if (l <= 0) return 1.0;
  if (l > n) return 0.0;
  double top = -std::numeric_limits<double>::infinity();
  for (long k = l; k <= n; ++k) top = std::max(top, log_binomial_pmf(n, k, q));
  if (!std::isfinite(top)) return 0.0;
  double s = 0.0;
  for (long k = l; k <= n; ++k) s += std::exp(log_binomial_pmf(n, k, q) - top);
  return std::min(1.0, std::exp(top) * s);
}

inline double p_exactly_l(const SourceParams& s, long l) {
  s.validate();
  if (l < 0 || l > s.M) throw DomainError("l must lie in [0, M]");
  return std::exp(log_binomial_pmf(s.M, l, s.herald()));
}

inline double p_at_least_l(const SourceParams& s, long l) {
  s.validate();
  if (l < 0 || l > s.M) throw DomainError("l must lie in [0, M]");
  if (l == 0) return 1.0;
  const double q = s.herald();
  if (q == 0.0) return 0.0;
  return ibeta(static_cast<double>(l), static_cast<double>(s.M - l + 1), q);
}

struct Rates {
  double P_us = 0.0;
  double P_qm = 0.0;
  double R_us = 0.0;  // Hz
  double R_qm = 0.0;  // Hz
};

// Unsynchronized sources (us) against the multiplexed memory (qm). With
// `splitter_switch` each unsynchronized photon is routed by a passive
// splitter, costing l^-l overall.
inline Rates rates(const SourceParams& us, const SourceParams& qm, long l, bool splitter_switch = false) {
  us.validate();
  if (l < 0) throw DomainError("l must be non-negative");
  const auto ld = static_cast<double>(l);
  Rates r;
  r.P_us = std::pow(us.p * us.eta_w * us.eta_r, ld);
  if (splitter_switch && l > 0) r.P_us *= std::pow(ld, -ld);
  r.P_qm = p_at_least_l(qm, l) * std::pow(qm.eta_r, ld);
  r.R_us = r.P_us * us.rep_rate;
  r.R_qm = r.P_qm * qm.rep_rate;
  return r;
}

inline Rates rates(const SourceParams& s, long l, bool splitter_switch = false) {
  return rates(s, s, l, splitter_switch);
}

// Parameter sets: (a) bright detection, (b) lossy detection.
struct RateScenario {
  SourceParams us;
  SourceParams qm;
};

inline RateScenario rate_parameters(char set) {
  SourceParams qm{1e-2, 0.2, 0.72, 4000, 1.0};
  if (set == 'a') return {{1e-2, 0.9, 0.9, 1, 1.0}, qm};
  if (set == 'b') return {{1e-2, 0.5, 0.5, 1, 1.0}, {1e-2, 0.2, 0.12, 4000, 1.0}};
  throw DomainError("parameter set must be 'a' or 'b'");
}

// M* = ceil(l (1 + 3/sqrt(l)) / (p eta_w))
inline long mode_guideline(long l, double p, double eta_w) {
  if (l < 1) throw DomainError("l must be at least 1");
  if (!(p > 0.0 && eta_w > 0.0)) throw DomainError("p and eta_w must be positive");
  const auto ld = static_cast<double>(l);
  const double x = ld * (1.0 + 3.0 / std::sqrt(ld)) / (p * eta_w);
  return static_cast<long>(std::ceil(x * (1.0 - 1e-12)));
}

// ---------------------------------------------------------------------------
// Repeater protocol on wavevector-encoded qubits.

// Mode order of the connection circuit: A1 A2 | B1 B2 | B'1 B'2 | C1 C2
// (K1, K2 rails of each memory).
struct EncModes {
  static constexpr int A1 = 0, A2 = 1, B1 = 2, B2 = 3, Bp1 = 4, Bp2 = 5, C1 = 6, C2 = 7, count = 8;
};

namespace detail {
// One ENG link on rails (x1, x2) of the first node and (y1, y2) of the second:
// (e^{i phi}(|K1>|K2> + |K2>|K1>) + |K1 K2>|0> + e^{2 i phi}|0>|K1 K2>) / 2
inline std::vector<std::pair<std::array<int, 4>, cd>> eng_terms(double phi) {
  const cd e1 = std::polar(0.5, phi), e2 = std::polar(0.5, 2.0 * phi);
  return {{{1, 0, 0, 1}, e1}, {{0, 1, 1, 0}, e1}, {{1, 1, 0, 0}, 0.5}, {{0, 0, 1, 1}, e2}};
}
}  // namespace detail

// Two independent ENG links A-B and B'-C.
inline FockState eng_pair_state(double phi_ab, double phi_bc) {
  using M = EncModes;
  std::vector<std::pair<std::vector<int>, cd>> terms;
  for (const auto& [a, ca] : detail::eng_terms(phi_ab))
    for (const auto& [b, cb] : detail::eng_terms(phi_bc))
      terms.push_back({{a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3]}, ca * cb});
  return FockState::from_terms(M::count, 4, terms);
}

// Connection optics: ACS 50:50 on (K1, K2) inside B and inside B', then the
// physical splitters BS_a(B1, B'1) -> D1/D4 and BS_b(B2, B'2) -> D2/D3.
inline CMatrix enc_circuit() {
  using M = EncModes;
  const double t = std::numbers::sqrt2 / 2.0;
  BogoliubovTransform u = beamsplitter(t, M::B1, M::B2, M::count);
  u = beamsplitter(t, M::Bp1, M::Bp2, M::count) * u;
  u = beamsplitter(t, M::B1, M::Bp1, M::count) * u;
  u = beamsplitter(t, M::B2, M::Bp2, M::count) * u;
  return u.passive_block();
}

enum class EncPattern { D1D2, D1D3, D4D2, D4D3 };
inline constexpr std::array<EncPattern, 4> kEncPatterns{EncPattern::D1D2, EncPattern::D1D3, EncPattern::D4D2,
                                                        EncPattern::D4D3};

inline const char* pattern_name(EncPattern p) {
  static const char* n[] = {"D1D2", "D1D3", "D4D2", "D4D3"};
  return n[static_cast<int>(p)];
}

// D1 = B1 out, D4 = B'1 out, D2 = B2 out, D3 = B'2 out; fired detectors see
// exactly one count, the other two none.
inline HeraldPattern enc_herald(EncPattern p) {
  using M = EncModes;
  const bool d1 = p == EncPattern::D1D2 || p == EncPattern::D1D3;
  const bool d2 = p == EncPattern::D1D2 || p == EncPattern::D4D2;
  return {{{M::B1, d1 ? Herald::ExactlyOne : Herald::Zero},
           {M::Bp1, d1 ? Herald::Zero : Herald::ExactlyOne},
           {M::B2, d2 ? Herald::ExactlyOne : Herald::Zero},
           {M::Bp2, d2 ? Herald::Zero : Herald::ExactlyOne}}};
}

// Fidelity with (|K1>_A|K2>_C + |K2>_A|K1>_C)/sqrt(2), maximized over local
// phases and the Pauli-X frame of C: (rho_aa + rho_bb)/2 + |rho_ab|.
inline double enc_fidelity(const DensityMatrix& rho) {
  double best = 0.0;
  const std::array<std::array<std::vector<int>, 2>, 2> frames{
      {{std::vector<int>{1, 0, 0, 1}, std::vector<int>{0, 1, 1, 0}},
       {std::vector<int>{1, 0, 1, 0}, std::vector<int>{0, 1, 0, 1}}}};
  for (const auto& f : frames) {
    const double v = 0.5 * (rho.element(f[0], f[0]).real() + rho.element(f[1], f[1]).real()) +
                     std::abs(rho.element(f[0], f[1]));
    best = std::max(best, v);
  }
  return best;
}

struct EncOutcome {
  EncPattern pattern;
  double probability = 0.0;
  double fidelity = 0.0;
};

inline std::vector<EncOutcome> enc_outcomes(double phi_ab = 0.0, double phi_bc = 0.0) {
  using M = EncModes;
  FockState s = eng_pair_state(phi_ab, phi_bc);
  s.apply_passive(enc_circuit());
  FockMixture mix{{1.0}, {s}, 0.0};
  std::vector<EncOutcome> out;
  for (EncPattern p : kEncPatterns) {
    const HeraldOutcome h = heralded_state(mix, enc_herald(p), {M::A1, M::A2, M::C1, M::C2});
    out.push_back({p, h.probability, h.state ? enc_fidelity(*h.state) : 0.0});
  }
  return out;
}

// Purification of two connected pairs {K1,K2} and {K3,K4} between A and C:
// BS(K1, K4) at each site, K1 and K4 counted, one count per site heralds.
struct PurifyModes {
  static constexpr int A1 = 0, A2 = 1, A3 = 2, A4 = 3, C1 = 4, C2 = 5, C3 = 6, C4 = 7, count = 8;
};

inline double purification_success_probability() {
  using M = PurifyModes;
  const double r = std::numbers::sqrt2 / 2.0;
  // (|K1>_A|K2>_C + |K2>_A|K1>_C)/sqrt(2) on both pairs
  std::vector<std::pair<std::vector<int>, cd>> terms;
  const std::array<std::array<int, 4>, 2> pair{{{1, 0, 0, 1}, {0, 1, 1, 0}}};  // A_a A_b C_a C_b
  for (const auto& x : pair)
    for (const auto& y : pair)
      terms.push_back({{x[0], x[1], y[0], y[1], x[2], x[3], y[2], y[3]}, r * r});
  FockState s = FockState::from_terms(M::count, 4, terms);
  BogoliubovTransform u = beamsplitter(r, M::A1, M::A4, M::count);
  u = beamsplitter(r, M::C1, M::C4, M::count) * u;
  s.apply_passive(u.passive_block());
  FockMixture mix{{1.0}, {s}, 0.0};
  double total = 0.0;
  for (auto [a, c] : std::array<std::pair<int, int>, 4>{{{M::A1, M::C1}, {M::A1, M::C4}, {M::A4, M::C1}, {M::A4, M::C4}}}) {
    const int a_other = a == M::A1 ? M::A4 : M::A1, c_other = c == M::C1 ? M::C4 : M::C1;
    HeraldPattern h{{{a, Herald::ExactlyOne}, {a_other, Herald::Zero}, {c, Herald::ExactlyOne}, {c_other, Herald::Zero}}};
    total += heralded_state(mix, h, {M::A2, M::A3, M::C2, M::C3}).probability;
  }
  return total;
}

struct RepeaterParams {
  double L0 = 25.0;      // km
  double L_att = 22.0;   // km
  double eta_cam = 0.5;
  long M = 4000;
  double p = 1e-2;
  double eta_readout = 1.0;
  double phi = 0.0;      // ENG channel phase, rad

  void validate() const {
    if (!(L0 > 0.0 && L_att > 0.0)) throw DomainError("lengths must be positive");
    if (!(eta_cam >= 0.0 && eta_cam <= 1.0 && eta_readout >= 0.0 && eta_readout <= 1.0))
      throw DomainError("efficiencies must lie in [0, 1]");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0, 1]");
    if (M < 2) throw DomainError("need at least two modes");
  }
  double eta_w() const { return std::exp(-L0 / L_att) * eta_cam; }
};

struct StageStat {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  double probability() const { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0; }
  double sigma() const {
    if (!trials) return 0.0;
    const double q = probability();
    return std::sqrt(q * (1.0 - q) / static_cast<double>(trials));
  }
};

struct RepeaterReport {
  StageStat eng;   // >= 2 fired modes
  StageStat enc;   // heralded connection, given ENG
  StageStat purify;
  double eng_analytic = 0.0;
  double enc_analytic = 0.0;
  double purify_analytic = 0.0;
  double enc_fidelity = 0.0;  // minimum over the four patterns
  std::vector<std::uint64_t> pair_gap_histogram;  // |i - j| of the chosen modes, 16 bins
};

inline constexpr std::uint64_t kRepeaterShard = 10000;

inline RepeaterReport repeater_monte_carlo(const RepeaterParams& r, std::uint64_t trials, std::uint64_t seed,
                                           unsigned threads = 0) {
  r.validate();
  if (trials < 1) throw DomainError("trials must be at least 1");
  RepeaterReport rep;
  const double q = r.p * r.eta_w();
  rep.eng_analytic = p_at_least_l({r.p, r.eta_w(), 1.0, r.M, 1.0}, 2);
  double fid = 1.0, p_enc = 0.0;
  for (const auto& o : enc_outcomes(r.phi, r.phi)) {
    p_enc += o.probability;
    fid = std::min(fid, o.fidelity);
  }
  rep.enc_fidelity = fid;
  rep.enc_analytic = p_enc * r.eta_readout * r.eta_readout;
  rep.purify_analytic = purification_success_probability() * std::pow(r.eta_readout, 4);

  const std::uint64_t shards = (trials + kRepeaterShard - 1) / kRepeaterShard;
  struct Part {
    StageStat eng, enc, pur;
    std::vector<std::uint64_t> gaps = std::vector<std::uint64_t>(16);
  };
  std::vector<Part> parts(shards);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, shards));
  auto work = [&](unsigned t) {
    for (std::uint64_t k = t; k < shards; k += threads) {
      Part& part = parts[k];
      std::mt19937_64 rng(seed ^ k);
      std::binomial_distribution<long> fired(r.M, q);
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      const std::uint64_t n = std::min(kRepeaterShard, trials - k * kRepeaterShard);
      for (std::uint64_t i = 0; i < n; ++i) {
        ++part.eng.trials;
        const long f = fired(rng);
        if (f < 2) continue;
        ++part.eng.successes;
        // two distinct fired modes, uniformly
        std::uniform_int_distribution<long> pick(0, f - 1);
        const long a = pick(rng);
        long b = std::uniform_int_distribution<long>(0, f - 2)(rng);
        if (b >= a) ++b;
        ++part.gaps[static_cast<std::size_t>(std::min<long>(15, std::abs(a - b) - 1))];
        ++part.enc.trials;
        if (uni(rng) >= rep.enc_analytic) continue;
        ++part.enc.successes;
        ++part.pur.trials;
        if (uni(rng) < rep.purify_analytic) ++part.pur.successes;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();
  rep.pair_gap_histogram.assign(16, 0);
  for (const auto& p : parts) {
    rep.eng.trials += p.eng.trials;
    rep.eng.successes += p.eng.successes;
    rep.enc.trials += p.enc.trials;
    rep.enc.successes += p.enc.successes;
    rep.purify.trials += p.pur.trials;
    rep.purify.successes += p.pur.successes;
    for (std::size_t i = 0; i < 16; ++i) rep.pair_gap_histogram[i] += p.gaps[i];
  }
  return rep;
}

}  // namespace spinwave
