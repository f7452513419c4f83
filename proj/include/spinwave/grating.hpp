#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "spinwave/errors.hpp"

namespace spinwave {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Sine {
  double chi = 0.0;    // rad
  double theta = 0.0;  // rad
};

struct TwoTone {
  double chi1 = 0.0, theta1 = 0.0;
  double chi2 = 0.0, theta2 = 0.0;
};

// Linear ramp of slope alpha (rad/mm) wrapped modulo `wrap`.
struct BlazedRamp {
  double alpha = 0.0;
  double wrap = kTwoPi;
};

// One period of samples, linearly interpolated (periodic).
struct Sampled {
  std::vector<double> values;
};

using PatternKind = std::variant<Sine, TwoTone, BlazedRamp, Sampled>;

struct PhasePattern {
  PatternKind kind = Sine{};
  double k_g = 1.0;   // rad/mm
  double phi0 = 0.0;  // rad

  double period() const { return kTwoPi / k_g; }

  void validate() const {
    if (!(k_g > 0.0) || !std::isfinite(k_g)) throw DomainError("grating wavevector must be positive");
    if (auto* s = std::get_if<Sampled>(&kind); s && s->values.size() < 16)
      throw DomainError("sampled pattern needs at least 16 points per period");
    if (auto* b = std::get_if<BlazedRamp>(&kind); b && !(b->wrap > 0.0))
      throw DomainError("blazed wrap must be positive");
  }

  // phi_S(y) without the constant offset
  double modulation(double y) const {
    const double x = k_g * y;  // phase within the fundamental period
    return std::visit(
        [&](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Sine>) {
            return k.chi * std::sin(x + k.theta);
          } else if constexpr (std::is_same_v<T, TwoTone>) {
            return k.chi1 * std::sin(x + k.theta1) + k.chi2 * std::sin(2.0 * x + k.theta2);
          } else if constexpr (std::is_same_v<T, BlazedRamp>) {
            double u = std::fmod(k.alpha * y, k.wrap);
            return u < 0.0 ? u + k.wrap : u;
          } else {
            const auto n = static_cast<double>(k.values.size());
            double u = std::fmod(x / kTwoPi, 1.0);
            if (u < 0.0) u += 1.0;
            const double pos = u * n;
            const auto i0 = static_cast<std::size_t>(pos) % k.values.size();
            const std::size_t i1 = (i0 + 1) % k.values.size();
            const double f = pos - std::floor(pos);
            return (1.0 - f) * k.values[i0] + f * k.values[i1];
          }
        },
        kind);
  }

  double phase(double y) const { return modulation(y) + phi0; }
};

inline PhasePattern sine_pattern(double chi, double theta, double k_g, double phi0 = 0.0) {
  return {Sine{chi, theta}, k_g, phi0};
}

// Ramp with period 2*pi/k_g when wrap = 2*pi.
inline PhasePattern blazed_pattern(double k_g, double wrap = kTwoPi, double phi0 = 0.0) {
  return {BlazedRamp{k_g * wrap / kTwoPi, wrap}, k_g, phi0};
}

inline const char* kind_name(const PhasePattern& p) {
  static const char* names[] = {"sine", "two_tone", "blazed", "sampled"};
  return names[p.kind.index()];
}

struct DiffractionSpectrum {
  int n_max = 0;
  std::vector<std::complex<double>> c;  // c[m + n_max]

  std::complex<double> at(int m) const {
    if (m < -n_max || m > n_max) return 0.0;
    return c[static_cast<std::size_t>(m + n_max)];
  }
  double power(int m) const { return std::norm(at(m)); }
  double total_power() const {
    double s = 0.0;
    for (auto& v : c) s += std::norm(v);
    return s;
  }
};

inline constexpr int kDefaultOrders = 10;
inline constexpr int kFourierSamples = 4096;

// Trapezoidal Fourier coefficients of exp(i phi_S) over one period.
inline DiffractionSpectrum decompose_numeric(const PhasePattern& p, int n_max = kDefaultOrders,
                                             int samples = kFourierSamples) {
  p.validate();
  if (n_max < 1) throw DomainError("n_max must be at least 1");
  std::vector<std::complex<double>> f(static_cast<std::size_t>(samples));
  const double step = p.period() / samples;
  for (int j = 0; j < samples; ++j) f[static_cast<std::size_t>(j)] = std::polar(1.0, p.phase(j * step));
  DiffractionSpectrum s{n_max, std::vector<std::complex<double>>(2 * static_cast<std::size_t>(n_max) + 1)};
  for (int m = -n_max; m <= n_max; ++m) {
    std::complex<double> acc = 0.0;
    for (int j = 0; j < samples; ++j)
      acc += f[static_cast<std::size_t>(j)] * std::polar(1.0, -kTwoPi * m * j / samples);
    s.c[static_cast<std::size_t>(m + n_max)] = acc / static_cast<double>(samples);
  }
  return s;
}

// Jacobi-Anger for sine patterns, numerical Fourier series otherwise.
inline DiffractionSpectrum decompose(const PhasePattern& p, int n_max = kDefaultOrders) {
  p.validate();
  if (n_max < 1) throw DomainError("n_max must be at least 1");
  if (auto* s = std::get_if<Sine>(&p.kind)) {
    DiffractionSpectrum out{n_max, std::vector<std::complex<double>>(2 * static_cast<std::size_t>(n_max) + 1)};
    for (int m = -n_max; m <= n_max; ++m) {
      // J_{-m}(x) = (-1)^m J_m(x); J_m(-x) = (-1)^m J_m(x)
      const int am = std::abs(m);
      double j = std::cyl_bessel_j(static_cast<double>(am), std::abs(s->chi));
      if ((m < 0 && am % 2) != (s->chi < 0 && am % 2)) j = -j;
      out.c[static_cast<std::size_t>(m + n_max)] = j * std::polar(1.0, m * s->theta + p.phi0);
    }
    return out;
  }
  return decompose_numeric(p, n_max);
}

inline double rms_numeric(const PhasePattern& p, int samples = kFourierSamples) {
  p.validate();
  const double step = p.period() / samples;
  double mean = 0.0, sq = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double v = p.modulation(j * step);
    mean += v;
    sq += v * v;
  }
  mean /= samples;
  return std::sqrt(std::max(0.0, sq / samples - mean * mean));
}

inline double rms(const PhasePattern& p) {
  if (auto* s = std::get_if<Sine>(&p.kind)) return std::abs(s->chi) / std::numbers::sqrt2;
  if (auto* t = std::get_if<TwoTone>(&p.kind)) return std::sqrt(0.5 * (t->chi1 * t->chi1 + t->chi2 * t->chi2));
  return rms_numeric(p);
}

// Smallest positive root of J0(chi) = J1(chi): the balanced three-way point.
inline double balanced_chi() {
  auto f = [](double x) { return std::cyl_bessel_j(0.0, x) - std::cyl_bessel_j(1.0, x); };
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t iters = 100;
  auto r = boost::math::tools::toms748_solve(f, 1.0, 2.0, tol, iters);
  return 0.5 * (r.first + r.second);
}

// Two-tone pattern with chi1/chi2 = ratio. Only theta2 - 2 theta1 is
// translation invariant; theta1 = pi puts dtheta = 0 into the m > 0 orders.
inline PhasePattern design_asymmetric(double ratio, double dtheta, double total_rms, double k_g) {
  if (!(ratio > 0.0)) throw DomainError("amplitude ratio must be positive");
  const double chi2 = total_rms * std::numbers::sqrt2 / std::sqrt(ratio * ratio + 1.0);
  const double theta1 = std::numbers::pi;
  return {TwoTone{ratio * chi2, theta1, chi2, theta1 - dtheta}, k_g, 0.0};
}

struct EfficiencyModel {
  double gamma = 0.0;  // 1/rad
  double var_z = 0.0;  // rad^2
};

inline double retrieval_penalty(const EfficiencyModel& e, double chi) {
  if (chi < 0.0) throw DomainError("chi must be non-negative");
  if (e.gamma < 0.0 || e.var_z < 0.0) throw DomainError("efficiency model parameters must be non-negative");
  return std::exp(-e.gamma * chi) * std::exp(-0.5 * e.var_z);
}

struct BlazedEfficiency {
  double ideal = 0.0;      // |c_1|^2
  double penalized = 0.0;  // with relative intensity noise
};

// Relative intensity noise sigma_i scales the whole phase profile, so the
// phase variance is sigma_i^2 <phi^2> with <phi^2> = wrap^2 / 3 for a ramp.
inline BlazedEfficiency blazed_efficiency(const PhasePattern& p, double rel_intensity_noise) {
  auto* b = std::get_if<BlazedRamp>(&p.kind);
  if (!b) throw DomainError("blazed_efficiency expects a blazed ramp");
  if (rel_intensity_noise < 0.0) throw DomainError("noise must be non-negative");
  const double ideal = decompose(p).power(1);
  const double var = rel_intensity_noise * rel_intensity_noise * b->wrap * b->wrap / 3.0;
  return {ideal, ideal * std::exp(-0.5 * var)};
}

}  // namespace spinwave
