#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include "spinwave/errors.hpp"
#include "spinwave/fockoracle.hpp"
#include "spinwave/gaussnet.hpp"
#include "spinwave/grating.hpp"
#include "spinwave/wavespace.hpp"

namespace spinwave {

inline constexpr double kModeSigma = 10.3;  // rad/mm
inline constexpr double kDefaultPairProbability = 0.05;
inline constexpr double kDefaultDarkRatio = 0.017;

struct CountingModel {
  double eta = 1.0;     // net detection efficiency
  double p_dark = 0.0;  // dark-count probability per gate

  void validate() const {
    if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
    if (!(p_dark >= 0.0)) throw DomainError("p_dark must be non-negative");
  }
  double d() const {
    validate();
    return p_dark / eta;
  }
  static CountingModel from_ratio(double d) { return {1.0, d}; }
};

struct G2Result {
  double value = 0.0;
  double sigma = 0.0;  // statistical error, zero for exact results

  bool nonclassical_cross() const { return value > 2.0; }
  bool sub_poissonian() const { return value < 1.0; }
};

// Overlap of read-out modes displaced by dk_x; beamsplitter transmission.
inline double overlap_tau(double dk_x, double sigma = kModeSigma) {
  return overlap(GaussianMode{{0.0, 0.0}, sigma}, GaussianMode{{dk_x, 0.0}, sigma}).real();
}

// Mode layout of the 8-pair model: read modes vb, rb, ra, va and their
// orthogonal partners, then the write partner of each read mode.
struct PairModes {
  static constexpr int vb = 0, rb = 1, ra = 2, va = 3;
  static constexpr int vb_perp = 4, rb_perp = 5, ra_perp = 6, va_perp = 7;
  static constexpr int count = 16;
  static constexpr int write_of(int r) { return 8 + r; }
  static constexpr int wa = 8 + ra, wb = 8 + rb;
  // counted outputs
  static constexpr int rc = ra, rd = rb;
};

struct HomOptions {
  double theta = 0.0;          // splitter phase, rad
  double tau_misalign = 1.0;   // extra wa-rc mode overlap (1 = aligned)
  double thermal_rb = -1.0;    // >= 0 replaces rb's squeezer by a thermal input
};

// Eight squeezed pairs, basis change Bs(rb, rb_perp, tau), the three-way
// splitter on both mode families, and the inverse basis change.
inline Network hom_network(double p, double tau, const HomOptions& opt = {}) {
  if (!(p >= 0.0) || p >= 1.0) throw DomainError("pair probability must lie in [0, 1)");
  using M = PairModes;
  Network net{M::count, {}, InputSpec::vacuum(M::count)};
  for (int r = 0; r < 8; ++r) {
    if (r == M::rb && opt.thermal_rb >= 0.0) {
      net.inputs.set(M::rb, Thermal{opt.thermal_rb});
      continue;
    }
    net.stages.push_back(squeezer_from_pair_probability(p, M::write_of(r), r, M::count));
  }
  const BogoliubovTransform bs = beamsplitter(tau, M::rb, M::rb_perp, M::count);
  net.stages.push_back(bs);
  net.stages.push_back(threeway_splitter(opt.theta, {M::vb, M::rb, M::ra, M::va}, M::count));
  net.stages.push_back(threeway_splitter(opt.theta, {M::vb_perp, M::rb_perp, M::ra_perp, M::va_perp}, M::count));
  net.stages.push_back(transposed(bs));
  if (opt.tau_misalign < 1.0) net.stages.push_back(beamsplitter(opt.tau_misalign, M::ra, M::ra_perp, M::count));
  return net;
}

// rb in a thermal state instead of a squeezed pair; only wa is heralded.
inline Network hbt_network(double p, double nbar, double tau) {
  if (!(nbar >= 0.0)) throw DomainError("thermal occupation must be non-negative");
  HomOptions o;
  o.thermal_rb = nbar;
  return hom_network(p, tau, o);
}

// Coherent inputs sqrt(nbar) in rb and ra through the ideal splitter, with
// the same basis change as the quantum network for displaced modes.
struct ClassicalModes {
  static constexpr int vb = 0, rb = 1, ra = 2, va = 3;
  static constexpr int vb_perp = 4, rb_perp = 5, ra_perp = 6, va_perp = 7, count = 8;
  static constexpr int rc = ra, rd = rb;
};

inline Network classical_hom_network(double nbar_a, double nbar_b, double tau = 1.0, double theta = 0.0) {
  if (!(nbar_a >= 0.0) || !(nbar_b >= 0.0)) throw DomainError("mean photon numbers must be non-negative");
  using M = ClassicalModes;
  Network net{M::count, {}, InputSpec::vacuum(M::count)};
  net.inputs.set(M::ra, Coherent{std::sqrt(nbar_a)});
  net.inputs.set(M::rb, Coherent{std::sqrt(nbar_b)});
  const BogoliubovTransform bs = beamsplitter(tau, M::rb, M::rb_perp, M::count);
  net.stages.push_back(bs);
  net.stages.push_back(threeway_splitter(theta, {M::vb, M::rb, M::ra, M::va}, M::count));
  net.stages.push_back(threeway_splitter(theta, {M::vb_perp, M::rb_perp, M::ra_perp, M::va_perp}, M::count));
  net.stages.push_back(transposed(bs));
  return net;
}

// g2_{rc,rd|wa,wb} of the 8-pair model in closed form; depends on (eta,
// p_dark) only through their ratio.
inline G2Result g2_hom_closed(double p, double tau, const CountingModel& cm) {
  if (!(p >= 0.0) || p >= 1.0) throw DomainError("pair probability must lie in [0, 1)");
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("tau must lie in [0, 1]");
  cm.validate();
  const double eta = cm.eta, pd = cm.p_dark, t2 = tau * tau;
  const double num = eta * eta * (9 * p * p + 6 * p * (t2 + 1) + (t2 - 1) * (t2 - 1)) -
                     6 * eta * pd * (3 * p * p + p * (t2 - 2) - t2 - 1) + 9 * (p - 1) * (p - 1) * pd * pd;
  const double den = eta * (3 * p + t2 + 1) - 3 * (p - 1) * pd;
  return {num / (den * den), 0.0};
}

inline G2Result g2_hom_closed(double p, double tau, double d) {
  if (!(d >= 0.0)) throw DomainError("dark-count ratio must be non-negative");
  return g2_hom_closed(p, tau, CountingModel::from_ratio(d));
}

enum class MomentEngine { Wick, PairOracle, FockState };

// Normal-ordered moments <:prod n:> of the listed output modes.
inline std::vector<double> network_moments(const Network& net, const std::vector<std::vector<int>>& lists,
                                           MomentEngine engine, int cutoff = kDefaultCutoff) {
  switch (engine) {
    case MomentEngine::Wick: {
      WickEvaluator w(net.total(), net.inputs);
      std::vector<double> out;
      for (const auto& l : lists) out.push_back(w.normal_moment(l));
      return out;
    }
    case MomentEngine::PairOracle: {
      PairNetworkOracle::Options o;
      o.cutoff = cutoff;
      return PairNetworkOracle(physical(net), o).normal_moments(lists);
    }
    case MomentEngine::FockState: {
      const FockMixture mix = prepare(physical(net), cutoff);
      std::vector<double> out;
      for (const auto& l : lists) out.push_back(normal_moment(mix, l));
      return out;
    }
  }
  throw DomainError("unknown moment engine");
}

struct HeraldedMoments {
  double h = 0.0;  // <:prod n_herald:>
  double c = 0.0;  // <:n_x prod n_herald:>
  double e = 0.0;  // <:n_y prod n_herald:>
  double q = 0.0;  // <:n_x n_y prod n_herald:>
};

inline std::vector<std::vector<int>> heralded_lists(const std::vector<int>& herald, int x, int y) {
  auto with = [&](std::initializer_list<int> s) {
    std::vector<int> l(s);
    l.insert(l.end(), herald.begin(), herald.end());
    return l;
  };
  return {herald, with({x}), with({y}), with({x, y})};
}

// Dark counts add d to each read-out flux, with d^2 for the accidental pair.
inline std::optional<G2Result> g2_assemble(const HeraldedMoments& m, double d) {
  const double den = (m.c + d * m.h) * (m.e + d * m.h);
  if (!(m.h > 0.0) || !(den > 0.0)) return std::nullopt;
  return G2Result{(m.q + d * m.c + d * m.e + d * d * m.h) * m.h / den, 0.0};
}

// g2_{x,y|herald}; x == y gives the conditional auto-correlation.
inline std::optional<G2Result> g2_from_moments(const Network& net, const CountingModel& cm,
                                               const std::vector<int>& herald, int x, int y,
                                               MomentEngine engine = MomentEngine::Wick) {
  const double d = cm.d();
  const auto v = network_moments(net, heralded_lists(herald, x, y), engine);
  return g2_assemble({v[0], v[1], v[2], v[3]}, d);
}

struct HbtResult {
  G2Result cross;    // g2_{rc,rd|wa} at the HOM overlap
  G2Result auto_rc;  // g2_{rc,rc|wa}, decoupled modes
  G2Result auto_rd;  // g2_{rd,rd|wa}, decoupled modes
};

inline HbtResult hbt_correlations(double p, double nbar, double d, MomentEngine engine = MomentEngine::PairOracle,
                                  double tau_cross = 1.0, double tau_auto = 0.0) {
  using M = PairModes;
  const CountingModel cm = CountingModel::from_ratio(d);
  auto need = [](std::optional<G2Result> r) {
    if (!r) throw NumericalFailure("HBT herald flux vanished");
    return *r;
  };
  const Network cross = hbt_network(p, nbar, tau_cross);
  const Network decoupled = hbt_network(p, nbar, tau_auto);
  return {need(g2_from_moments(cross, cm, {M::wa}, M::rc, M::rd, engine)),
          need(g2_from_moments(decoupled, cm, {M::wa}, M::rc, M::rc, engine)),
          need(g2_from_moments(decoupled, cm, {M::wa}, M::rd, M::rd, engine))};
}

namespace detail {
inline std::vector<int> coherent_modes(const Network& net) {
  std::vector<int> m;
  for (int i = 0; i < net.modes; ++i)
    if (std::abs(net.inputs.mean(i)) > 0.0) m.push_back(i);
  return m;
}

inline Network with_phases(const Network& net, const std::vector<int>& modes, const std::vector<double>& phi) {
  Network out = net;
  for (std::size_t k = 0; k < modes.size(); ++k)
    out.inputs.set(modes[k], Coherent{net.inputs.mean(modes[k]) * std::polar(1.0, phi[k])});
  return out;
}
}  // namespace detail

// Phase-averaged unheralded g2_{x,y}: every coherent input gets an
// independent uniform phase; numerator and fluxes are averaged separately.
// The moments are trigonometric polynomials of degree <= 2 in each phase, so
// 5 equispaced nodes per input integrate them exactly.
inline G2Result g2_phase_averaged(const Network& net, int x, int y) {
  const auto modes = detail::coherent_modes(net);
  constexpr int nodes = 5;
  std::size_t total = 1;
  for (std::size_t i = 0; i < modes.size(); ++i) total *= nodes;
  if (modes.size() > 6) throw DomainError("too many coherent inputs for exact phase averaging");
  double q = 0.0, c = 0.0, e = 0.0;
  std::vector<double> phi(modes.size());
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t r = idx;
    for (auto& v : phi) {
      v = kTwoPi * static_cast<double>(r % nodes) / nodes;
      r /= nodes;
    }
    const auto m = network_moments(detail::with_phases(net, modes, phi), {{x}, {y}, {x, y}}, MomentEngine::Wick);
    c += m[0];
    e += m[1];
    q += m[2];
  }
  if (!(c > 0.0 && e > 0.0)) throw NumericalFailure("vanishing flux in phase-averaged g2");
  const double n = static_cast<double>(total);
  return {(q / n) / ((c / n) * (e / n)), 0.0};
}

// Monte Carlo phase sampling of the same quantity (cross-check).
inline G2Result g2_phase_sampled(const Network& net, int x, int y, int samples, std::uint64_t seed) {
  if (samples < 2) throw DomainError("need at least two phase samples");
  const auto modes = detail::coherent_modes(net);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, kTwoPi);
  std::vector<double> qs, cs, es;
  std::vector<double> phi(modes.size());
  for (int s = 0; s < samples; ++s) {
    for (auto& v : phi) v = uni(rng);
    const auto m = network_moments(detail::with_phases(net, modes, phi), {{x}, {y}, {x, y}}, MomentEngine::Wick);
    cs.push_back(m[0]);
    es.push_back(m[1]);
    qs.push_back(m[2]);
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double a : v) s += a;
    return s / static_cast<double>(v.size());
  };
  const double mq = mean(qs), mc = mean(cs), me = mean(es);
  const double g = mq / (mc * me);
  // delta-method error of the ratio of means
  double var = 0.0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const double dv = qs[i] / mq - cs[i] / mc - es[i] / me;
    var += dv * dv;
  }
  var /= static_cast<double>(qs.size() - 1);
  return {g, std::abs(g) * std::sqrt(var / static_cast<double>(qs.size()))};
}

struct FitForm {
  double alpha = 23.1;
  double gamma = 0.27;  // 1/rad
};

inline std::pair<double, double> g2_fit_forms(const FitForm& f, double chi) {
  if (chi < 0.0) throw DomainError("chi must be non-negative");
  if (f.alpha < 0.0 || f.gamma < 0.0) throw DomainError("fit parameters must be non-negative");
  const double env = f.alpha * std::exp(-f.gamma * chi);
  const double j0 = std::cyl_bessel_j(0.0, chi), j1 = std::cyl_bessel_j(1.0, chi);
  return {1.0 + env * j0 * j0, 1.0 + env * j1 * j1};
}

struct Visibility {
  double value = 0.0;
  bool nonclassical = false;  // strictly above 1/2
};

inline Visibility visibility(const G2Result& dip) {
  const double v = 1.0 - dip.value;
  return {v, v > 0.5};
}

inline bool cauchy_schwarz_violated(double g_rw, double g_rr, double g_ww) {
  if (g_rw < 0.0 || g_rr < 0.0 || g_ww < 0.0) throw DomainError("g2 values must be non-negative");
  return g_rw * g_rw > g_rr * g_ww;
}

// ---------------------------------------------------------------------------
// Coincidence map Monte Carlo

// Periodic G x G grid of transverse wavevector cells shared by both cameras;
// k_g spans `cells_per_order` cells along y. Order m lands on sum index
// 8m mod 48 by default, so only |m| >= 5 can alias onto the three peaks.
struct CoincidenceGrid {
  int cells = 48;
  int cells_per_order = 8;
  double k_g = 44.0;  // rad/mm

  double dk() const { return k_g / cells_per_order; }
  void validate() const {
    if (cells < 4 || cells > 512) throw DomainError("grid cells must lie in 4..512");
    if (cells_per_order <= 4) throw DomainError("grid resolution must be finer than k_g/4");
    if (!(k_g > 0.0)) throw DomainError("k_g must be positive");
  }
  // signed sum wavevector of a wrapped index
  double sum_k(int idx) const {
    int s = idx > cells / 2 ? idx - cells : idx;
    return s * dk();
  }
};

struct CoincidenceMap {
  CoincidenceGrid grid;
  std::uint64_t shots = 0;
  std::vector<std::uint64_t> coincidences;  // [sx * G + sy]
  std::vector<std::uint64_t> write_clicks;  // per cell
  std::vector<std::uint64_t> read_clicks;

  struct Cell {
    bool present = false;  // false when the accidental expectation is zero
    double g2 = 0.0;
    double sigma = 0.0;
  };

  // Coincidences at sum s over the product of marginal click rates; the
  // error is binomial over the shots x G^2 cell pairs feeding the bin.
  Cell at(int sx, int sy) const {
    const int g = grid.cells;
    const auto n = static_cast<double>(shots);
    double acc = 0.0;
    for (int ix = 0; ix < g; ++ix)
      for (int iy = 0; iy < g; ++iy) {
        const int jx = ((sx - ix) % g + g) % g, jy = ((sy - iy) % g + g) % g;
        acc += static_cast<double>(write_clicks[static_cast<std::size_t>(ix * g + iy)]) / n *
               static_cast<double>(read_clicks[static_cast<std::size_t>(jx * g + jy)]) / n;
      }
    if (!(acc > 0.0)) return {};
    const double c = static_cast<double>(coincidences[static_cast<std::size_t>(sx * g + sy)]);
    const double trials = n * static_cast<double>(g) * g;
    const double se = std::sqrt(c * (1.0 - c / trials));
    return {true, c / (n * acc), se / (n * acc)};
  }

  // Every sum cell, index sx * G + sy.
  std::vector<Cell> cells() const {
    std::vector<Cell> out;
    out.reserve(coincidences.size());
    for (int sx = 0; sx < grid.cells; ++sx)
      for (int sy = 0; sy < grid.cells; ++sy) out.push_back(at(sx, sy));
    return out;
  }

  void merge(const CoincidenceMap& o) {
    shots += o.shots;
    for (std::size_t i = 0; i < coincidences.size(); ++i) coincidences[i] += o.coincidences[i];
    for (std::size_t i = 0; i < write_clicks.size(); ++i) write_clicks[i] += o.write_clicks[i];
    for (std::size_t i = 0; i < read_clicks.size(); ++i) read_clicks[i] += o.read_clicks[i];
  }
};

inline constexpr std::uint64_t kShardShots = 20000;

namespace detail {
inline CoincidenceMap empty_map(const CoincidenceGrid& g) {
  const auto cells = static_cast<std::size_t>(g.cells) * static_cast<std::size_t>(g.cells);
  return {g, 0, std::vector<std::uint64_t>(cells), std::vector<std::uint64_t>(cells), std::vector<std::uint64_t>(cells)};
}

// Indices of Bernoulli(prob) successes among n trials by geometric skipping.
template <class Rng, class F>
void bernoulli_skip(Rng& rng, std::size_t n, double prob, F&& hit) {
  if (!(prob > 0.0)) return;
  if (prob >= 1.0) {
    for (std::size_t i = 0; i < n; ++i) hit(i);
    return;
  }
  std::geometric_distribution<std::size_t> skip(prob);
  for (std::size_t i = skip(rng); i < n; i += 1 + skip(rng)) hit(i);
}

inline void run_shard(CoincidenceMap& out, const std::vector<double>& order_cdf, int n_max, double x,
                      const CountingModel& cm, std::uint64_t shots, std::uint64_t seed) {
  const CoincidenceGrid& gr = out.grid;
  const int g = gr.cells;
  const auto cells = static_cast<std::size_t>(g) * static_cast<std::size_t>(g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<char> wmark(cells), rmark(cells);
  std::vector<std::size_t> wl, rl;
  auto wrap = [g](int v) { return ((v % g) + g) % g; };
  for (std::uint64_t s = 0; s < shots; ++s) {
    wl.clear();
    rl.clear();
    auto click_w = [&](std::size_t c) {
      if (!wmark[c]) {
        wmark[c] = 1;
        wl.push_back(c);
      }
    };
    auto click_r = [&](std::size_t c) {
      if (!rmark[c]) {
        rmark[c] = 1;
        rl.push_back(c);
      }
    };
    // modes with at least one pair, then the remaining geometric count
    bernoulli_skip(rng, cells, x, [&](std::size_t c) {
      int n = 1;
      while (uni(rng) < x) ++n;
      const int ix = static_cast<int>(c) / g, iy = static_cast<int>(c) % g;
      bool w_fired = false;
      for (int k = 0; k < n; ++k) {
        if (uni(rng) < cm.eta) w_fired = true;
        // read photon at -K_w, displaced by one diffraction order
        const double u = uni(rng);
        const auto it = std::upper_bound(order_cdf.begin(), order_cdf.end(), u);
        if (it == order_cdf.end()) continue;  // lost to truncated orders
        const int m = static_cast<int>(it - order_cdf.begin()) - n_max;
        if (uni(rng) >= cm.eta) continue;
        click_r(static_cast<std::size_t>(wrap(-ix) * g + wrap(-iy + m * gr.cells_per_order)));
      }
      if (w_fired) click_w(c);
    });
    bernoulli_skip(rng, cells, cm.p_dark, click_w);
    bernoulli_skip(rng, cells, cm.p_dark, click_r);
    for (std::size_t a : wl) ++out.write_clicks[a];
    for (std::size_t b : rl) ++out.read_clicks[b];
    for (std::size_t a : wl)
      for (std::size_t b : rl) {
        const int sx = wrap(static_cast<int>(a) / g + static_cast<int>(b) / g);
        const int sy = wrap(static_cast<int>(a) % g + static_cast<int>(b) % g);
        ++out.coincidences[static_cast<std::size_t>(sx * g + sy)];
      }
    for (std::size_t a : wl) wmark[a] = 0;
    for (std::size_t b : rl) rmark[b] = 0;
    ++out.shots;
  }
}
}  // namespace detail

// Independent squeezed pairs (pair probability p) on every grid cell; each
// read photon is displaced by order m with probability |c_m|^2, photons are
// detected with eta, detectors click (no number resolution) and dark counts
// fire independently. Shards of fixed size are seeded with seed ^ index, so
// the result does not depend on the thread count.
inline CoincidenceMap coincidence_map(const CoincidenceGrid& grid, const DiffractionSpectrum& spec, double p,
                                      const CountingModel& cm, std::uint64_t shots, std::uint64_t seed,
                                      unsigned threads = 0) {
  grid.validate();
  cm.validate();
  if (shots < 1) throw DomainError("shots must be at least 1");
  if (!(p >= 0.0) || p >= 1.0) throw DomainError("pair probability must lie in [0, 1)");
  std::vector<double> cdf;
  double acc = 0.0;
  for (int m = -spec.n_max; m <= spec.n_max; ++m) {
    acc += spec.power(m);
    cdf.push_back(std::min(acc, 1.0));
  }
  const std::uint64_t shards = (shots + kShardShots - 1) / kShardShots;
  std::vector<CoincidenceMap> parts(shards, detail::empty_map(grid));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, shards));
  auto work = [&](unsigned t) {
    for (std::uint64_t k = t; k < shards; k += threads) {
      const std::uint64_t n = std::min(kShardShots, shots - k * kShardShots);
      detail::run_shard(parts[k], cdf, spec.n_max, p, cm, n, seed ^ k);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();
  CoincidenceMap out = detail::empty_map(grid);
  for (const auto& part : parts) out.merge(part);
  return out;
}

}  // namespace spinwave
