#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stargraph/model.hpp"

namespace stargraph {

// A finite sine series u(x) = sum_n coeffs[n-1] * sin(n pi (length - x) / length)
// together with the interval length it lives on.
struct SineTransform {
  std::vector<cdouble> coeffs;
  double length = 1.0;
};

namespace detail {

// sin(w)/w, stable at w = 0.
inline cdouble csinc(cdouble w) {
  if (std::abs(w) < 3e-2) {
    cdouble w2 = w * w;
    return 1.0 + w2 * (-1.0 / 6.0 + w2 * (1.0 / 120.0 - w2 / 5040.0));
  }
  return std::sin(w) / w;
}

// d/dw [sin(w)/w] = (w cos w - sin w) / w^2, stable at w = 0.
inline cdouble csinc_deriv(cdouble w) {
  if (std::abs(w) < 3e-2) {
    cdouble w2 = w * w;
    return w * (-1.0 / 3.0 + w2 * (1.0 / 30.0 + w2 * (-1.0 / 840.0 + w2 / 45360.0)));
  }
  return (w * std::cos(w) - std::sin(w)) / (w * w);
}

inline bool in_pole_band(cdouble z, double l, int n, double band) {
  const double w = n * kPi / l;
  return std::abs(z - w) < band * w || std::abs(z + w) < band * w;
}

// sin(z l) / (z^2 - (n pi / l)^2), with the removable singularities at
// z = +-(n pi / l) filled in.  Uses the exact shift identity
// sin(z l) = (-1)^n sin(l (z -+ n pi / l)) near either point, which turns the
// quotient into a sinc factor with no cancellation.
inline cdouble pair_kernel(cdouble z, double l, int n, double band) {
  const double w = n * kPi / l;
  const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
  if (std::abs(z - w) < band * w) {
    cdouble delta = z - w;
    return sgn * l * csinc(l * delta) / (z + w);
  }
  if (std::abs(z + w) < band * w) {
    cdouble delta = z + w;
    return sgn * l * csinc(l * delta) / (z - w);
  }
  return std::sin(z * l) / (z * z - w * w);
}

// Derivative in z of pair_kernel, same branch structure.
inline cdouble pair_kernel_deriv(cdouble z, double l, int n, double band) {
  const double w = n * kPi / l;
  const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
  if (std::abs(z - w) < band * w) {
    cdouble delta = z - w;
    cdouble den = z + w;
    return sgn * l * (l * csinc_deriv(l * delta) / den - csinc(l * delta) / (den * den));
  }
  if (std::abs(z + w) < band * w) {
    cdouble delta = z + w;
    cdouble den = z - w;
    return sgn * l * (l * csinc_deriv(l * delta) / den - csinc(l * delta) / (den * den));
  }
  cdouble d = z * z - w * w;
  cdouble k = std::sin(z * l) / d;
  return (l * std::cos(z * l) - 2.0 * z * k) / d;
}

// Gauss-Legendre 8-point rule on [-1, 1].
inline constexpr double kGaussNodes[4] = {
    0.1834346424956498, 0.5255324099163290,
    0.7966664774136267, 0.9602898564975363};
inline constexpr double kGaussWeights[4] = {
    0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

}  // namespace detail

// Pointwise value of the mode sum at x in [0, length].
inline cdouble synthesize(const std::vector<cdouble>& coeffs, double length, double x) {
  if (x < 0.0 || x > length)
    throw std::invalid_argument("evaluation point outside [0, length]");
  cdouble v(0.0, 0.0);
  for (std::size_t n = 1; n <= coeffs.size(); ++n)
    v += coeffs[n - 1] * detail::sine_mode(static_cast<int>(n), x, length);
  return v;
}

inline cdouble synthesize(const EdgePotential& p, double length, double x) {
  return synthesize(p.coeffs, length, x);
}

// int_0^l f(x) sin(z (l - x)) dx for a finite mode sum f, by the closed form
// per mode.  Exact up to rounding, including at z = +-(n pi / l) and z = 0.
inline cdouble sine_transform_series(const SineTransform& t, cdouble z,
                                     const NumericalPolicy& policy = {}) {
  cdouble v(0.0, 0.0);
  for (std::size_t n = 1; n <= t.coeffs.size(); ++n) {
    if (t.coeffs[n - 1] == cdouble(0.0, 0.0)) continue;
    const double w = static_cast<double>(n) * kPi / t.length;
    const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
    v += t.coeffs[n - 1] * sgn * w *
         detail::pair_kernel(z, t.length, static_cast<int>(n), policy.pole_band);
  }
  return v;
}

// d/dz of sine_transform_series.
inline cdouble sine_transform_series_derivative(const SineTransform& t, cdouble z,
                                                const NumericalPolicy& policy = {}) {
  cdouble v(0.0, 0.0);
  for (std::size_t n = 1; n <= t.coeffs.size(); ++n) {
    if (t.coeffs[n - 1] == cdouble(0.0, 0.0)) continue;
    const double w = static_cast<double>(n) * kPi / t.length;
    const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
    v += t.coeffs[n - 1] * sgn * w *
         detail::pair_kernel_deriv(z, t.length, static_cast<int>(n), policy.pole_band);
  }
  return v;
}

// int_0^l f(x) sin(z (l - x)) dx by composite Gauss-Legendre panels.  The
// panel count grows with |Re z| so the rule resolves the oscillation.
template <class F>
cdouble sine_transform_quadrature(F&& f, double length, cdouble z,
                                  const NumericalPolicy& policy = {}) {
  const double waves = std::abs(z.real()) * length / (2.0 * kPi) + 1.0;
  const int panels = std::max(
      4, static_cast<int>(std::ceil(policy.quad_points_per_wavelength * waves)));
  const double h = length / panels;
  cdouble acc(0.0, 0.0);
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (int k = 0; k < 4; ++k) {
      for (double s : {-1.0, 1.0}) {
        const double x = mid + s * 0.5 * h * detail::kGaussNodes[k];
        acc += detail::kGaussWeights[k] * cdouble(f(x)) * std::sin(z * (length - x));
      }
    }
  }
  return acc * (0.5 * h);
}

// Coefficients G with sine_transform_series(G, z) =
// sin(z l) * sum_n |q_n|^2 / (z^2 - (n pi / l)^2).  This is the mode-paired
// reduction of int_0^l u(x) conj(q(x)) ... terms that the vertex condition
// produces; keeping it as a SineTransform reuses the pole-safe evaluator.
inline SineTransform gram_coeffs(const EdgePotential& p, double length) {
  SineTransform g;
  g.length = length;
  g.coeffs.reserve(p.coeffs.size());
  for (std::size_t n = 1; n <= p.coeffs.size(); ++n) {
    const double w = static_cast<double>(n) * kPi / length;
    const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
    g.coeffs.push_back(sgn * std::norm(p.coeffs[n - 1]) / w);
  }
  return g;
}

}  // namespace stargraph
