#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "spinwave/errors.hpp"
#include "spinwave/gaussnet.hpp"

namespace spinwave {

inline constexpr int kMaxFockModes = 16;
inline constexpr int kMaxCutoff = 15;
inline constexpr int kDefaultCutoff = 8;

// Occupation numbers packed 4 bits per mode.
using Occupation = std::uint64_t;

inline int occ(Occupation o, int m) { return static_cast<int>((o >> (4 * m)) & 0xFu); }
inline Occupation with_occ(Occupation o, int m, int n) {
  const Occupation mask = Occupation{0xF} << (4 * m);
  return (o & ~mask) | (static_cast<Occupation>(n) << (4 * m));
}
inline Occupation pack(const std::vector<int>& n) {
  Occupation o = 0;
  for (std::size_t m = 0; m < n.size(); ++m) o = with_occ(o, static_cast<int>(m), n[m]);
  return o;
}

namespace detail {
inline double factorial(int n) {
  static const std::array<double, 64> table = [] {
    std::array<double, 64> t{};
    t[0] = 1.0;
    for (int i = 1; i < 64; ++i) t[static_cast<std::size_t>(i)] = t[static_cast<std::size_t>(i - 1)] * i;
    return t;
  }();
  return table[static_cast<std::size_t>(n)];
}
inline double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }
inline double falling(int n, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= n - i;
  return r;
}
}  // namespace detail

// Pure state on the truncated Fock space, sparse over occupations.
class FockState {
 public:
  FockState(int modes, int cutoff = kDefaultCutoff) : n_(modes), cutoff_(cutoff) {
    if (modes < 1 || modes > kMaxFockModes) throw DomainError("Fock state supports 1..16 modes");
    if (cutoff < 1 || cutoff > kMaxCutoff) throw DomainError("cutoff must lie in 1..15");
    amps_[0] = 1.0;
  }

  static FockState from_terms(int modes, int cutoff, const std::vector<std::pair<std::vector<int>, cd>>& terms) {
    FockState s(modes, cutoff);
    s.amps_.clear();
    for (const auto& [n, a] : terms) {
      if (static_cast<int>(n.size()) != modes) throw DomainError("occupation length mismatch");
      for (int v : n)
        if (v < 0 || v > cutoff) throw DomainError("occupation exceeds cutoff");
      s.amps_[pack(n)] += a;
    }
    return s;
  }

  int modes() const { return n_; }
  int cutoff() const { return cutoff_; }
  const std::map<Occupation, cd>& amplitudes() const { return amps_; }

  double norm2() const {
    double s = 0.0;
    for (const auto& [o, a] : amps_) s += std::norm(a);
    return s;
  }
  double deficit() const { return std::max(0.0, 1.0 - norm2()); }

  cd amplitude(const std::vector<int>& n) const {
    auto it = amps_.find(pack(n));
    return it == amps_.end() ? cd{} : it->second;
  }

  // Replace a vacuum mode by the given single-mode amplitudes (tensor product).
  void load_mode(int m, const std::vector<cd>& psi) {
    check(m);
    std::map<Occupation, cd> out;
    for (const auto& [o, a] : amps_) {
      if (occ(o, m) != 0) throw DomainError("load_mode expects the mode in vacuum");
      for (std::size_t k = 0; k < psi.size() && static_cast<int>(k) <= cutoff_; ++k)
        if (psi[k] != 0.0) out[with_occ(o, m, static_cast<int>(k))] += a * psi[k];
    }
    amps_.swap(out);
  }

  void apply_phase(int m, cd phase) {
    check(m);
    for (auto& [o, a] : amps_) a *= std::pow(phase, occ(o, m));
  }

  // a_j^dag -> sum_k g(k, j) a_k^dag on the pair (p, q); index 0 is p.
  void apply_two_mode(int p, int q, const Eigen::Matrix2cd& g) {
    check(p);
    check(q);
    std::map<Occupation, cd> out;
    for (const auto& [o, a] : amps_) {
      const int np = occ(o, p), nq = occ(o, q), tot = np + nq;
      const double norm_in = std::sqrt(detail::factorial(np) * detail::factorial(nq));
      std::vector<cd> coef(static_cast<std::size_t>(tot) + 1, 0.0);
      for (int i = 0; i <= np; ++i) {
        const cd ci = detail::binomial(np, i) * std::pow(g(0, 0), i) * std::pow(g(1, 0), np - i);
        if (ci == 0.0) continue;
        for (int j = 0; j <= nq; ++j) {
          const cd cj = detail::binomial(nq, j) * std::pow(g(0, 1), j) * std::pow(g(1, 1), nq - j);
          coef[static_cast<std::size_t>(i + j)] += ci * cj;
        }
      }
      for (int k = 0; k <= tot; ++k) {
        if (k > cutoff_ || tot - k > cutoff_) continue;
        const cd c = coef[static_cast<std::size_t>(k)];
        if (c == 0.0) continue;
        const double norm_out = std::sqrt(detail::factorial(k) * detail::factorial(tot - k));
        out[with_occ(with_occ(o, p, k), q, tot - k)] += a * c * norm_out / norm_in;
      }
    }
    prune(out);
    amps_.swap(out);
  }

  // Passive unitary on all modes, a_j^dag -> sum_k U(k, j) a_k^dag, applied as
  // a sequence of two-mode rotations and single-mode phases.
  void apply_passive(const CMatrix& u) {
    if (u.rows() != n_ || u.cols() != n_) throw DomainError("passive unitary has wrong size");
    if ((u * u.adjoint() - CMatrix::Identity(n_, n_)).cwiseAbs().maxCoeff() > 1e-10)
      throw UnsupportedElement("Fock oracle needs a unitary passive map");
    CMatrix w = u;
    struct Rot {
      int p;
      Eigen::Matrix2cd g;
    };
    std::vector<Rot> rots;
    for (int c = 0; c < n_ - 1; ++c)
      for (int r = n_ - 1; r > c; --r) {
        const cd a = w(r - 1, c), b = w(r, c);
        const double rho = std::hypot(std::abs(a), std::abs(b));
        if (std::abs(b) < 1e-300) continue;
        Eigen::Matrix2cd g;
        g << std::conj(a) / rho, std::conj(b) / rho, -b / rho, a / rho;
        const Eigen::MatrixXcd rows = w.middleRows(r - 1, 2);
        w.middleRows(r - 1, 2) = g * rows;
        rots.push_back({r - 1, g});
      }
    // u = G_1^dag ... G_K^dag D: apply D first, then G_K^dag, ..., G_1^dag.
    for (int m = 0; m < n_; ++m)
      if (std::abs(w(m, m) - 1.0) > 1e-15) apply_phase(m, w(m, m));
    for (auto it = rots.rbegin(); it != rots.rend(); ++it) apply_two_mode(it->p, it->p + 1, it->g.adjoint());
  }

  // exp(xi (a_r^dag a_w^dag - a_r a_w)) with lambda = tanh(xi), via
  // exp(t a^dag b^dag) cosh^-(n_a + n_b + 1) exp(-t a b).
  void apply_two_mode_squeeze(double lambda, int w, int r) {
    check(w);
    check(r);
    if (!(lambda >= 0.0) || lambda >= 1.0) throw DomainError("squeezer amplitude must lie in [0, 1)");
    const double t = lambda;
    const double sech = std::sqrt(1.0 - t * t);
    std::map<Occupation, cd> lowered;
    for (const auto& [o, a] : amps_) {
      const int nw = occ(o, w), nr = occ(o, r);
      for (int k = 0; k <= std::min(nw, nr); ++k) {
        const double c = std::pow(-t, k) / detail::factorial(k) *
                         std::sqrt(detail::falling(nw, k) * detail::falling(nr, k));
        lowered[with_occ(with_occ(o, w, nw - k), r, nr - k)] += a * c;
      }
    }
    std::map<Occupation, cd> out;
    for (const auto& [o, a] : lowered) {
      const int nw = occ(o, w), nr = occ(o, r);
      const cd base = a * std::pow(sech, nw + nr + 1);
      for (int k = 0; nw + k <= cutoff_ && nr + k <= cutoff_; ++k) {
        const double c = std::pow(t, k) / detail::factorial(k) *
                         std::sqrt(detail::falling(nw + k, k) * detail::falling(nr + k, k));
        out[with_occ(with_occ(o, w, nw + k), r, nr + k)] += base * c;
      }
    }
    prune(out);
    amps_.swap(out);
  }

 private:
  void check(int m) const {
    if (m < 0 || m >= n_) throw DomainError("mode index out of range");
  }
  static void prune(std::map<Occupation, cd>& m) {
    for (auto it = m.begin(); it != m.end();)
      it = std::norm(it->second) < 1e-40 ? m.erase(it) : std::next(it);
  }

  int n_;
  int cutoff_;
  std::map<Occupation, cd> amps_;
};

// Weighted ensemble of pure states (thermal inputs are unravelled here).
struct FockMixture {
  std::vector<double> weights;
  std::vector<FockState> states;
  double branch_deficit = 0.0;  // thermal mass beyond the cutoff

  int modes() const { return states.front().modes(); }
  double deficit() const {
    double d = branch_deficit;
    for (std::size_t i = 0; i < states.size(); ++i) d += weights[i] * states[i].deficit();
    return d;
  }
};

namespace detail {
inline std::vector<cd> coherent_amplitudes(cd alpha, int cutoff) {
  std::vector<cd> psi(static_cast<std::size_t>(cutoff) + 1);
  const double pre = std::exp(-0.5 * std::norm(alpha));
  cd pw = 1.0;
  for (int n = 0; n <= cutoff; ++n) {
    psi[static_cast<std::size_t>(n)] = pre * pw / std::sqrt(factorial(n));
    pw *= alpha;
  }
  return psi;
}

inline void apply_stage(FockState& s, const BogoliubovTransform& st) {
  if (st.truncated()) throw UnsupportedElement("truncated transform: complete it before simulation");
  if (const auto& tag = st.squeeze_tag()) {
    s.apply_two_mode_squeeze(tag->amplitude, tag->w, tag->r);
  } else if (st.is_passive(1e-12)) {
    s.apply_passive(st.passive_block());
  } else {
    throw UnsupportedElement("active element without a squeezer kernel");
  }
}
}  // namespace detail

// Run a physical network on its inputs in the truncated Fock space.
inline FockMixture prepare(const Network& net, int cutoff = kDefaultCutoff) {
  if (net.truncated()) throw UnsupportedElement("truncated transform: complete it before simulation");
  if (net.inputs.size() != net.modes) throw DomainError("input spec size does not match network");
  std::vector<int> thermal;
  for (int m = 0; m < net.modes; ++m)
    if (std::holds_alternative<Thermal>(net.inputs.modes[static_cast<std::size_t>(m)])) thermal.push_back(m);

  FockMixture mix;
  double kept = 0.0;
  std::vector<int> n(thermal.size(), 0);
  std::function<void(std::size_t, double)> branch = [&](std::size_t i, double w) {
    if (i == thermal.size()) {
      FockState s(net.modes, cutoff);
      for (int m = 0; m < net.modes; ++m) {
        const auto& in = net.inputs.modes[static_cast<std::size_t>(m)];
        if (auto* c = std::get_if<Coherent>(&in)) s.load_mode(m, detail::coherent_amplitudes(c->alpha, cutoff));
      }
      for (std::size_t k = 0; k < thermal.size(); ++k) {
        std::vector<cd> psi(static_cast<std::size_t>(n[k]) + 1, 0.0);
        psi.back() = 1.0;
        if (n[k] > 0) s.load_mode(thermal[k], psi);
      }
      for (const auto& st : net.stages) detail::apply_stage(s, st.embedded(net.modes));
      mix.weights.push_back(w);
      mix.states.push_back(std::move(s));
      kept += w;
      return;
    }
    const double nb = net.inputs.nbar(thermal[i]);
    const double x = nb / (1.0 + nb);
    double wk = 1.0 / (1.0 + nb);
    for (int k = 0; k <= cutoff; ++k, wk *= x) {
      if (w * wk < 1e-16) break;
      n[i] = k;
      branch(i + 1, w * wk);
    }
    n[i] = 0;
  };
  branch(0, 1.0);
  mix.branch_deficit = std::max(0.0, 1.0 - kept);
  return mix;
}

namespace detail {
template <class F>
double occupation_average(const FockMixture& mix, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < mix.states.size(); ++i) {
    double si = 0.0;
    for (const auto& [o, a] : mix.states[i].amplitudes()) si += std::norm(a) * f(o);
    s += mix.weights[i] * si;
  }
  return s;
}

inline void check_order(const std::vector<int>& modes) {
  if (modes.size() > 4) throw UnsupportedOrder("moments above order 4 are not supported");
}
}  // namespace detail

// <prod n_i>, raw products (repeats allowed).
inline double moment(const FockMixture& mix, const std::vector<int>& modes) {
  detail::check_order(modes);
  return detail::occupation_average(mix, [&](Occupation o) {
    double v = 1.0;
    for (int m : modes) v *= occ(o, m);
    return v;
  });
}

// <:prod n_i:>, falling factorials for repeated modes.
inline double normal_moment(const FockMixture& mix, const std::vector<int>& modes) {
  detail::check_order(modes);
  return detail::occupation_average(mix, [&](Occupation o) {
    std::map<int, int> mult;
    for (int m : modes) ++mult[m];
    double v = 1.0;
    for (auto [m, k] : mult) v *= detail::falling(occ(o, m), k);
    return v;
  });
}

enum class Herald { Unconditioned, ExactlyOne, AtLeastOne, Zero };

struct HeraldPattern {
  std::vector<std::pair<int, Herald>> conditions;

  bool accepts(Occupation o) const {
    for (auto [m, h] : conditions) {
      const int n = occ(o, m);
      if (h == Herald::ExactlyOne && n != 1) return false;
      if (h == Herald::AtLeastOne && n < 1) return false;
      if (h == Herald::Zero && n != 0) return false;
    }
    return true;
  }
  bool conditions_mode(int m) const {
    return std::any_of(conditions.begin(), conditions.end(),
                       [&](auto& c) { return c.first == m && c.second != Herald::Unconditioned; });
  }
};

// Density operator over a subset of modes, on the occupations that occur.
struct DensityMatrix {
  std::vector<int> modes;
  std::vector<std::vector<int>> basis;
  CMatrix rho;

  int index_of(const std::vector<int>& n) const {
    for (std::size_t i = 0; i < basis.size(); ++i)
      if (basis[i] == n) return static_cast<int>(i);
    return -1;
  }
  double probability(const std::vector<int>& n) const {
    const int i = index_of(n);
    return i < 0 ? 0.0 : rho(i, i).real();
  }
  cd element(const std::vector<int>& a, const std::vector<int>& b) const {
    const int i = index_of(a), j = index_of(b);
    return (i < 0 || j < 0) ? cd{} : rho(i, j);
  }
  double purity() const { return (rho * rho).trace().real(); }
};

struct HeraldOutcome {
  std::optional<DensityMatrix> state;  // empty when the herald never fires
  double probability = 0.0;
};

inline HeraldOutcome heralded_state(const FockMixture& mix, const HeraldPattern& pattern, const std::vector<int>& keep) {
  for (int k : keep)
    if (pattern.conditions_mode(k)) throw DomainError("kept modes must not be heralded");
  const int n = mix.modes();
  auto kept_part = [&](Occupation o) {
    std::vector<int> v;
    for (int k : keep) v.push_back(occ(o, k));
    return v;
  };
  auto env_part = [&](Occupation o) {
    for (int k : keep) o = with_occ(o, k, 0);
    return o;
  };
  (void)n;
  std::map<std::vector<int>, int> index;
  std::vector<std::vector<int>> basis;
  for (const auto& s : mix.states)
    for (const auto& [o, a] : s.amplitudes())
      if (pattern.accepts(o)) {
        auto kp = kept_part(o);
        if (index.emplace(kp, 0).second) basis.push_back(kp);
      }
  std::sort(basis.begin(), basis.end());
  for (std::size_t i = 0; i < basis.size(); ++i) index[basis[i]] = static_cast<int>(i);

  const auto dim = static_cast<Eigen::Index>(basis.size());
  CMatrix rho = CMatrix::Zero(dim, dim);
  for (std::size_t i = 0; i < mix.states.size(); ++i) {
    std::map<Occupation, std::vector<std::pair<int, cd>>> env;
    for (const auto& [o, a] : mix.states[i].amplitudes())
      if (pattern.accepts(o)) env[env_part(o)].emplace_back(index[kept_part(o)], a);
    for (const auto& [e, vec] : env)
      for (const auto& [ka, aa] : vec)
        for (const auto& [kb, ab] : vec) rho(ka, kb) += mix.weights[i] * aa * std::conj(ab);
  }
  const double p = rho.trace().real();
  HeraldOutcome out;
  out.probability = p;
  if (p <= 1e-300) return out;
  out.state = DensityMatrix{keep, basis, rho / p};
  return out;
}

inline double moment(const DensityMatrix& d, const std::vector<int>& modes) {
  detail::check_order(modes);
  double s = 0.0;
  for (std::size_t i = 0; i < d.basis.size(); ++i) {
    double v = 1.0;
    for (int m : modes) {
      auto it = std::find(d.modes.begin(), d.modes.end(), m);
      if (it == d.modes.end()) throw DomainError("mode not kept in density matrix");
      v *= d.basis[i][static_cast<std::size_t>(it - d.modes.begin())];
    }
    s += d.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real() * v;
  }
  return s;
}

// Oracle for networks made of squeezed pairs (and thermal/vacuum singles)
// followed by a passive map. A pair whose partner mode is untouched by the
// passive map and only counted is equivalent to the mixture of |n,n> with
// geometric weights (Schmidt form), so the moment becomes an explicit sum
// over Fock configurations; each term applies the output annihilators
// b_o = sum_j U(o, j) a_j to the Fock configuration.
class PairNetworkOracle {
 public:
  struct Options {
    int cutoff = kDefaultCutoff;
    double weight_floor = 1e-18;
  };

  explicit PairNetworkOracle(const Network& net) : PairNetworkOracle(net, Options{}) {}
  PairNetworkOracle(const Network& net, Options opt) : opt_(opt), n_(net.modes) {
    if (net.truncated()) throw UnsupportedElement("truncated transform: complete it before simulation");
    u_ = CMatrix::Identity(n_, n_);
    bool passive_seen = false;
    std::vector<SqueezeTag> pairs;
    for (const auto& raw : net.stages) {
      const BogoliubovTransform st = raw.embedded(n_);
      if (const auto& tag = st.squeeze_tag()) {
        if (passive_seen) throw UnsupportedElement("squeezers must precede the passive block");
        pairs.push_back(*tag);
      } else if (st.is_passive(1e-12)) {
        passive_seen = true;
        u_ = st.passive_block() * u_;
      } else {
        throw UnsupportedElement("active element without a squeezer kernel");
      }
    }
    std::vector<bool> used(static_cast<std::size_t>(n_), false);
    for (const auto& t : pairs) {
      for (int m : {t.w, t.r}) {
        if (used[static_cast<std::size_t>(m)]) throw UnsupportedElement("mode squeezed twice");
        if (!std::holds_alternative<Vacuum>(net.inputs.modes[static_cast<std::size_t>(m)]))
          throw UnsupportedElement("squeezed modes must start in vacuum");
        used[static_cast<std::size_t>(m)] = true;
      }
      if (!untouched(t.w) && !untouched(t.r))
        throw UnsupportedElement("both modes of a squeezed pair are mixed; use the Fock state engine");
      sources_.push_back({{t.w, t.r}, t.amplitude * t.amplitude});
    }
    for (int m = 0; m < n_; ++m) {
      const auto& in = net.inputs.modes[static_cast<std::size_t>(m)];
      if (std::holds_alternative<Coherent>(in)) throw UnsupportedElement("coherent inputs need the Fock state engine");
      if (auto* th = std::get_if<Thermal>(&in); th && th->nbar > 0.0)
        sources_.push_back({{m}, th->nbar / (1.0 + th->nbar)});
    }
  }

  const CMatrix& passive() const { return u_; }
  double truncation_deficit() const { return deficit_; }

  // <:prod n:> for each list of output modes.
  std::vector<double> normal_moments(const std::vector<std::vector<int>>& lists) const {
    for (const auto& l : lists) {
      detail::check_order(l);
      for (int m : l)
        if (m < 0 || m >= n_) throw DomainError("mode index out of range");
    }
    // sources that feed any requested row
    std::vector<const Source*> live;
    for (const auto& s : sources_) {
      bool feeds = false;
      for (const auto& l : lists)
        for (int o : l)
          for (int j : s.modes)
            if (std::abs(u_(o, j)) > 0.0) feeds = true;
      if (feeds) live.push_back(&s);
    }
    // Outputs whose row is a unit vector act as plain a_j: their factor is a
    // falling factorial and they leave the enumeration.
    struct Split {
      std::vector<std::pair<int, int>> direct;  // (input mode, multiplicity)
      std::vector<int> rest;
    };
    std::vector<Split> split(lists.size());
    for (std::size_t k = 0; k < lists.size(); ++k)
      for (int o : lists[k]) {
        const int j = unit_row(o);
        if (j < 0) {
          split[k].rest.push_back(o);
          continue;
        }
        auto& d = split[k].direct;
        auto it = std::find_if(d.begin(), d.end(), [&](auto& e) { return e.first == j; });
        if (it == d.end())
          d.emplace_back(j, 1);
        else
          ++it->second;
      }
    std::vector<double> acc(lists.size(), 0.0);
    std::vector<int> config(static_cast<std::size_t>(n_), 0);
    double enumerated = 0.0;
    std::function<void(std::size_t, double)> walk = [&](std::size_t i, double w) {
      if (i == live.size()) {
        enumerated += w;
        for (std::size_t k = 0; k < lists.size(); ++k) {
          double f = 1.0;
          for (auto [j, m] : split[k].direct) f *= detail::falling(config[static_cast<std::size_t>(j)], m);
          if (f == 0.0) continue;
          for (auto [j, m] : split[k].direct) config[static_cast<std::size_t>(j)] -= m;
          acc[k] += w * f * annihilated_norm2(config, split[k].rest);
          for (auto [j, m] : split[k].direct) config[static_cast<std::size_t>(j)] += m;
        }
        return;
      }
      const Source& s = *live[i];
      double wk = 1.0 - s.ratio;
      for (int k = 0; k <= opt_.cutoff; ++k, wk *= s.ratio) {
        if (k > 0 && w * wk < opt_.weight_floor) break;
        for (int m : s.modes) config[static_cast<std::size_t>(m)] = k;
        walk(i + 1, w * wk);
      }
      for (int m : s.modes) config[static_cast<std::size_t>(m)] = 0;
    };
    walk(0, 1.0);
    deficit_ = std::max(0.0, 1.0 - enumerated);
    return acc;
  }

  double normal_moment(const std::vector<int>& l) const { return normal_moments({l})[0]; }

  double moment(const std::vector<int>& l) const {
    return detail::raw_from_normal(l, [&](const std::vector<int>& x) { return normal_moment(x); });
  }

 private:
  struct Source {
    std::vector<int> modes;
    double ratio;  // geometric ratio of the occupation distribution
  };

  bool untouched(int m) const {
    for (int k = 0; k < n_; ++k) {
      const cd want = k == m ? 1.0 : 0.0;
      if (std::abs(u_(m, k) - want) > 1e-14 || std::abs(u_(k, m) - want) > 1e-14) return false;
    }
    return true;
  }

  // j when row o is e_j (up to a unimodular factor), else -1
  int unit_row(int o) const {
    int hit = -1;
    for (int j = 0; j < n_; ++j) {
      const double a = std::abs(u_(o, j));
      if (a == 0.0) continue;
      if (hit >= 0 || std::abs(a - 1.0) > 1e-14) return -1;
      hit = j;
    }
    return hit;
  }

  // || prod_{o in list} b_o |config> ||^2
  double annihilated_norm2(const std::vector<int>& config, const std::vector<int>& list) const {
    std::vector<int> occupied;
    for (int j = 0; j < n_; ++j)
      if (config[static_cast<std::size_t>(j)] > 0) occupied.push_back(j);
    if (occupied.empty()) return list.empty() ? 1.0 : 0.0;
    // removed-multiset key -> amplitude (without the sqrt factorial factor)
    std::vector<std::pair<std::uint32_t, cd>> terms;
    std::array<int, 4> removed{};
    std::vector<int> left = config;
    std::function<void(std::size_t, cd)> rec = [&](std::size_t i, cd amp) {
      if (i == list.size()) {
        std::array<int, 4> key = removed;
        std::sort(key.begin(), key.begin() + static_cast<long>(list.size()));
        std::uint32_t k = 0;
        for (std::size_t r = 0; r < list.size(); ++r) k = (k << 8) | static_cast<std::uint32_t>(key[r]);
        for (auto& t : terms)
          if (t.first == k) {
            t.second += amp;
            return;
          }
        terms.emplace_back(k, amp);
        return;
      }
      const int o = list[i];
      for (int j : occupied) {
        if (left[static_cast<std::size_t>(j)] == 0) continue;
        const cd c = u_(o, j);
        if (c == 0.0) continue;
        --left[static_cast<std::size_t>(j)];
        removed[i] = j;
        rec(i + 1, amp * c);
        ++left[static_cast<std::size_t>(j)];
      }
    };
    rec(0, 1.0);
    double s = 0.0;
    for (const auto& [k, a] : terms) {
      // sqrt(n!/(n-r)!) per mode, squared
      double f = 1.0;
      std::uint32_t kk = k;
      std::array<int, 4> cnt_mode{};
      std::array<int, 4> cnt{};
      int distinct = 0;
      for (std::size_t r = 0; r < list.size(); ++r) {
        const int j = static_cast<int>(kk & 0xFFu);
        kk >>= 8;
        int pos = 0;
        while (pos < distinct && cnt_mode[static_cast<std::size_t>(pos)] != j) ++pos;
        if (pos == distinct) cnt_mode[static_cast<std::size_t>(distinct++)] = j;
        ++cnt[static_cast<std::size_t>(pos)];
      }
      for (int d = 0; d < distinct; ++d)
        f *= detail::falling(config[static_cast<std::size_t>(cnt_mode[static_cast<std::size_t>(d)])],
                             cnt[static_cast<std::size_t>(d)]);
      s += std::norm(a) * f;
    }
    return s;
  }

  Options opt_;
  int n_;
  CMatrix u_;
  std::vector<Source> sources_;
  mutable double deficit_ = 0.0;
};

}  // namespace spinwave
