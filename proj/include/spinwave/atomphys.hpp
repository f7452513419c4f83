#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spinwave/errors.hpp"
#include "spinwave/grating.hpp"

namespace spinwave {

namespace units {
inline constexpr double hbar = 1.054571817e-34;    // J s
inline constexpr double epsilon0 = 8.8541878128e-12;  // F/m
inline constexpr double c = 299792458.0;           // m/s

inline constexpr double angular_from_hz(double hz) { return kTwoPi * hz; }
inline constexpr double hz_from_angular(double w) { return w / kTwoPi; }
inline constexpr double w_per_m2_from_mw_per_cm2(double i) { return i * 10.0; }
inline constexpr double mm_from_nm(double nm) { return nm * 1e-6; }
}  // namespace units

struct PoleProximityError : DomainError {
  using DomainError::DomainError;
};

// Amplitude from intensity: Rms uses E = sqrt(I/(eps0 c)), Peak uses
// E = sqrt(2I/(eps0 c)).
enum class FieldConvention { Rms, Peak };

struct StarkParams {
  double delta_s = units::angular_from_hz(1.43e9);  // rad/s, from the F=2 -> 5P3/2 centroid
  double intensity = 35.0;                          // mW/cm^2
  double T = 2e-6;                                  // s
  double dipole = 3.58e-29;                         // C m
  double A0 = units::angular_from_hz(3.42e9);       // rad/s, 5S1/2
  double A1 = units::angular_from_hz(85e6);         // rad/s, 5P3/2
  FieldConvention field = FieldConvention::Rms;

  void validate() const {
    if (!(intensity >= 0.0)) throw DomainError("intensity must be non-negative");
    if (!(T >= 0.0)) throw DomainError("interaction time must be non-negative");
    if (!std::isfinite(delta_s)) throw DomainError("detuning must be finite");
  }
};

inline constexpr double kPoleGuard = kTwoPi * 1e6;  // rad/s

// Coefficient and detuning offset (rad/s) of each transition term.
struct StarkTerm {
  double coef;
  double offset;
};

inline std::array<StarkTerm, 3> stark_terms_h(const StarkParams& s) {
  return {{{1.0 / 40, 0.75 * s.A0 + 0.25 * s.A1},
           {1.0 / 24, 0.75 * s.A0 + 0.75 * s.A1},
           {4.0 / 15, 0.75 * s.A0 - 2.25 * s.A1}}};
}

inline std::array<StarkTerm, 2> stark_terms_g(const StarkParams& s) {
  return {{{5.0 / 24, -1.25 * s.A0 + 2.75 * s.A1}, {1.0 / 8, -1.25 * s.A0 + 0.75 * s.A1}}};
}

// (E d / hbar)^2 / 4 in rad^2/s^2
inline double stark_prefactor(const StarkParams& s) {
  const double i = units::w_per_m2_from_mw_per_cm2(s.intensity);
  const double k = s.field == FieldConvention::Peak ? 2.0 : 1.0;
  const double e = std::sqrt(k * i / (units::epsilon0 * units::c));
  const double omega = e * s.dipole / units::hbar;
  return 0.25 * omega * omega;
}

namespace detail {
template <class Terms>
double stark_sum(const StarkParams& s, const Terms& terms) {
  s.validate();
  double acc = 0.0;
  for (const auto& t : terms) {
    const double den = s.delta_s - t.offset;
    if (std::abs(den) < kPoleGuard) throw PoleProximityError("detuning within 2pi x 1 MHz of a transition");
    acc += t.coef / den;
  }
  return stark_prefactor(s) * acc;
}
}  // namespace detail

inline double stark_shift_h(const StarkParams& s) { return detail::stark_sum(s, stark_terms_h(s)); }
inline double stark_shift_g(const StarkParams& s) { return detail::stark_sum(s, stark_terms_g(s)); }
inline double differential_shift(const StarkParams& s) { return stark_shift_h(s) - stark_shift_g(s); }
inline double stark_phase(const StarkParams& s) { return differential_shift(s) * s.T; }

struct EnsembleGeometry {
  double sigma_z = 4.0;     // mm
  double sigma_perp = 0.3;  // mm
  double k_r = 7899.0;      // rad/mm
  double lambda = 795.0;    // nm

  void validate() const {
    if (!(sigma_z > 0.0 && sigma_perp > 0.0 && k_r > 0.0 && lambda > 0.0))
      throw DomainError("ensemble geometry parameters must be positive");
  }
};

inline double phase_mismatch(double k_y, const EnsembleGeometry& g) {
  g.validate();
  if (!(std::abs(k_y) < g.k_r)) throw DomainError("|K_y| >= k_r: evanescent regime");
  // sqrt(k^2 - K^2) - k without cancellation
  return -k_y * k_y / (std::sqrt(g.k_r * g.k_r - k_y * k_y) + g.k_r);
}

inline double phase_mismatch_paraxial(double k_y, const EnsembleGeometry& g) {
  g.validate();
  return -k_y * k_y / (2.0 * g.k_r);
}

inline double phasematch_efficiency(double k_y, const EnsembleGeometry& g) {
  const double d = phase_mismatch(k_y, g);
  return std::exp(-0.5 * d * d * g.sigma_z * g.sigma_z);
}

// |int dz exp(-z^2/sigma_z^2) exp(i D z)|^2 normalized to D = 0, by
// adaptive Gauss-Kronrod (the sine part vanishes by symmetry).
inline double phasematch_efficiency_quadrature(double k_y, const EnsembleGeometry& g) {
  const double d = phase_mismatch(k_y, g);
  const double L = 12.0 * g.sigma_z;
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto re = [&](double z) { return std::exp(-z * z / (g.sigma_z * g.sigma_z)) * std::cos(d * z); };
  auto norm = [&](double z) { return std::exp(-z * z / (g.sigma_z * g.sigma_z)); };
  const double a = GK::integrate(re, -L, L, 15, 1e-14);
  const double n = GK::integrate(norm, -L, L, 15, 1e-14);
  return (a * a) / (n * n);
}

struct PhasematchMapPoint {
  double k_w;  // rad/mm
  double k_r;  // rad/mm
  double value;
};

// Read-out efficiency over (k_y^w, k_y^r): diffraction order m moves the
// pair correlation to k_r + k_w = m k_g with resolution width `width`.
inline std::vector<PhasematchMapPoint> phasematch_map(const EnsembleGeometry& g, const DiffractionSpectrum& spec,
                                                      double k_g, double k_min, double k_max, int points,
                                                      double width = 4.7) {
  if (points < 2) throw DomainError("map needs at least two points per axis");
  if (!(width > 0.0)) throw DomainError("resolution width must be positive");
  std::vector<PhasematchMapPoint> out;
  out.reserve(static_cast<std::size_t>(points) * points);
  const double step = (k_max - k_min) / (points - 1);
  for (int i = 0; i < points; ++i) {
    const double kw = k_min + i * step;
    for (int j = 0; j < points; ++j) {
      const double kr = k_min + j * step;
      double s = 0.0;
      for (int m = -spec.n_max; m <= spec.n_max; ++m) {
        const double u = (kr + kw - m * k_g) / width;
        s += spec.power(m) * std::exp(-0.5 * u * u);
      }
      out.push_back({kw, kr, phasematch_efficiency(kr, g) * s});
    }
  }
  return out;
}

struct NoiseEstimate {
  double modes = 0.0;
  double per_mode_probability = 0.0;
};

inline constexpr double kGammaScatter = 390.0;  // Hz
inline constexpr double kGammaNoise = 1e-3;     // Hz

inline NoiseEstimate noise_mode_estimate(const EnsembleGeometry& g, double atoms, double gamma_n, double T) {
  g.validate();
  if (!(atoms > 0.0) || gamma_n < 0.0 || T < 0.0) throw DomainError("noise estimate inputs must be positive");
  const double lam = units::mm_from_nm(g.lambda);
  const double modes = g.sigma_z * g.sigma_perp * g.sigma_perp / (lam * lam * lam);
  return {modes, atoms * gamma_n * T / modes};
}

}  // namespace spinwave
