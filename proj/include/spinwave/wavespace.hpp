#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "spinwave/errors.hpp"

namespace spinwave {

// Transverse wavevector, components in rad/mm.
struct TransverseWavevector {
  double kx = 0.0;
  double ky = 0.0;

  friend TransverseWavevector operator+(TransverseWavevector a, TransverseWavevector b) {
    return {a.kx + b.kx, a.ky + b.ky};
  }
  friend TransverseWavevector operator-(TransverseWavevector a, TransverseWavevector b) {
    return {a.kx - b.kx, a.ky - b.ky};
  }
  double norm() const { return std::hypot(kx, ky); }
};

// Gaussian field mode in wavevector space, |u|^2 integrates to one.
// u(K) = exp(-|K - center|^2 / (4 sigma^2)) / (sqrt(2 pi) sigma)
struct GaussianMode {
  TransverseWavevector center;
  double sigma = 1.0;  // rad/mm

  std::complex<double> operator()(TransverseWavevector k) const {
    const TransverseWavevector d = k - center;
    const double r2 = d.kx * d.kx + d.ky * d.ky;
    return std::exp(-r2 / (4.0 * sigma * sigma)) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
  }

  GaussianMode shifted(TransverseWavevector by) const { return {center + by, sigma}; }
};

namespace detail {
inline void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("mode sigma must be positive");
}
}  // namespace detail

// <a|b> for equal-width Gaussians; real and positive for pure translations.
inline std::complex<double> overlap(const GaussianMode& a, const GaussianMode& b) {
  detail::check_sigma(a.sigma);
  detail::check_sigma(b.sigma);
  if (std::abs(a.sigma - b.sigma) > 1e-12 * a.sigma)
    throw DomainError("overlap requires equal mode widths");
  const TransverseWavevector d = b.center - a.center;
  const double r2 = d.kx * d.kx + d.ky * d.ky;
  return std::exp(-r2 / (8.0 * a.sigma * a.sigma));
}

// Shifted mode split into the proper mode and a unit-norm orthogonal
// complement: shifted = tau * proper + sqrt(1 - tau^2) * orthogonal.
struct ModePair {
  GaussianMode proper;
  TransverseWavevector shift;
  double tau = 1.0;

  std::complex<double> shifted(TransverseWavevector k) const { return proper.shifted(shift)(k); }

  std::complex<double> orthogonal(TransverseWavevector k) const {
    const double s2 = 1.0 - tau * tau;
    if (s2 > 1e-10) return (shifted(k) - tau * proper(k)) / std::sqrt(s2);
    // zero-shift limit: first Hermite-Gauss mode along the shift axis
    const double len = shift.norm();
    const double ex = len > 0.0 ? shift.kx / len : 1.0;
    const double ey = len > 0.0 ? shift.ky / len : 0.0;
    const TransverseWavevector d = k - proper.center;
    return (d.kx * ex + d.ky * ey) / proper.sigma * proper(k);
  }
};

inline ModePair make_mode_pair(const GaussianMode& m, TransverseWavevector shift) {
  detail::check_sigma(m.sigma);
  if (!std::isfinite(shift.kx) || !std::isfinite(shift.ky))
    throw DomainError("mode shift must be finite");
  return {m, shift, overlap(m, m.shifted(shift)).real()};
}

// Uniform square grid of samples, used to validate the analytic forms.
struct SampledGrid {
  TransverseWavevector origin;  // grid center
  double half_width = 0.0;
  int points = 256;
  std::vector<std::complex<double>> values;  // row-major, ky fastest

  double step() const { return 2.0 * half_width / (points - 1); }
  TransverseWavevector at(int i, int j) const {
    return {origin.kx - half_width + i * step(), origin.ky - half_width + j * step()};
  }
};

template <class F>
SampledGrid sample_grid(F&& f, TransverseWavevector origin, double half_width, int points = 256) {
  SampledGrid g{origin, half_width, points, {}};
  g.values.resize(static_cast<std::size_t>(points) * points);
  for (int i = 0; i < points; ++i)
    for (int j = 0; j < points; ++j) g.values[static_cast<std::size_t>(i) * points + j] = f(g.at(i, j));
  return g;
}

// Riemann inner product <a|b> on two grids of identical geometry.
inline std::complex<double> inner(const SampledGrid& a, const SampledGrid& b) {
  std::complex<double> s = 0.0;
  for (std::size_t n = 0; n < a.values.size(); ++n) s += std::conj(a.values[n]) * b.values[n];
  return s * a.step() * a.step();
}

// Gram-Schmidt of a shifted mode against a proper mode on the sampled grid
// (default 256x256 over +-5 sigma around the proper mode).
struct SampledDecomposition {
  double tau = 0.0;
  SampledGrid orthogonal;
};

inline SampledDecomposition sampled_decomposition(const ModePair& pair, int points = 256) {
  const double hw = 5.0 * pair.proper.sigma + 0.5 * pair.shift.norm();
  const TransverseWavevector mid{pair.proper.center.kx + 0.5 * pair.shift.kx,
                                 pair.proper.center.ky + 0.5 * pair.shift.ky};
  SampledGrid prop = sample_grid(pair.proper, mid, hw, points);
  SampledGrid shif = sample_grid([&](TransverseWavevector k) { return pair.shifted(k); }, mid, hw, points);
  const std::complex<double> t = inner(prop, shif) / inner(prop, prop);
  SampledGrid orth = shif;
  for (std::size_t n = 0; n < orth.values.size(); ++n) orth.values[n] -= t * prop.values[n];
  const double nrm = std::sqrt(inner(orth, orth).real());
  if (nrm > 0.0)
    for (auto& v : orth.values) v /= nrm;
  return {t.real(), orth};
}

}  // namespace spinwave
