#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stargraph/characteristic.hpp"
#include "stargraph/model.hpp"
#include "stargraph/transforms.hpp"

namespace stargraph {

using AnalyticFn = std::function<cdouble(cdouble)>;

struct WindingResult {
  cdouble raw{0.0, 0.0};
  int count = 0;
  bool converged = false;
  int panels = 0;       // sample count (disk) or per-side panel count (rectangle)
  double radius = 0.0;  // radius actually used, after any retry perturbation
};

struct Root {
  cdouble location{0.0, 0.0};
  int multiplicity = 1;
  bool structural = false;
};

struct ZeroSet {
  std::vector<Root> roots;
  int total_count = 0;
};

struct DensityFit {
  std::vector<double> radii;
  std::vector<double> counts_ev;  // (disk count - m0) / 2 at each radius
  std::vector<int> counts_disk;
  int m0 = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms deviation of counts_ev from the line
  int max_enclosed = 0;
  bool sparse = false;  // fewer than 20 pairs in the largest disk
};

struct SupportEstimate {
  double extent = 0.0;
  DensityFit fit;
};

namespace detail {

inline bool finite(cdouble v) {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}

inline cdouble logderiv_term(const AnalyticFn& f, const AnalyticFn& df, cdouble z) {
  cdouble fz = f(z);
  if (!finite(fz) || fz == cdouble(0.0, 0.0))
    throw numerical_error("function vanished or blew up on the counting contour");
  cdouble dz = df(z);
  if (!finite(dz))
    throw numerical_error("derivative blew up on the counting contour");
  return dz / fz;
}

inline bool near_nonnegative_integer(cdouble w, double tol) {
  const double r = std::round(w.real());
  return r >= -0.5 && std::abs(w.real() - r) <= tol && std::abs(w.imag()) <= tol;
}

// One straight side of a rectangle contour, composite 8-point Gauss-Legendre.
inline cdouble rect_side(const AnalyticFn& f, const AnalyticFn& df, cdouble a,
                         cdouble b, int panels) {
  const cdouble d = (b - a) / static_cast<double>(panels);
  cdouble acc(0.0, 0.0);
  for (int p = 0; p < panels; ++p) {
    const cdouble mid = a + (static_cast<double>(p) + 0.5) * d;
    for (int k = 0; k < 4; ++k)
      for (double s : {-1.0, 1.0})
        acc += kGaussWeights[k] *
               logderiv_term(f, df, mid + s * 0.5 * d * kGaussNodes[k]);
  }
  return acc * (0.5 * d);
}

inline WindingResult winding_rect(const AnalyticFn& f, const AnalyticFn& df,
                                  cdouble lo, cdouble hi,
                                  const NumericalPolicy& policy) {
  const cdouble c0 = lo, c1(hi.real(), lo.imag()), c2 = hi, c3(lo.real(), hi.imag());
  const double tol = policy.winding_round_tol;
  WindingResult res;
  cdouble prev(0.0, 0.0);
  bool have_prev = false;
  for (int p = 4; p <= 1024; p *= 2) {
    cdouble integral = rect_side(f, df, c0, c1, p) + rect_side(f, df, c1, c2, p) +
                       rect_side(f, df, c2, c3, p) + rect_side(f, df, c3, c0, p);
    cdouble w = integral / cdouble(0.0, 2.0 * kPi);
    if (have_prev && std::abs(w - prev) <= 0.5 * tol &&
        near_nonnegative_integer(w, tol)) {
      res.raw = w;
      res.count = static_cast<int>(std::lround(w.real()));
      res.converged = true;
      res.panels = p;
      return res;
    }
    prev = w;
    have_prev = true;
  }
  res.raw = prev;
  res.count = static_cast<int>(std::lround(prev.real()));
  res.panels = 1024;
  return res;
}

}  // namespace detail

// Zero count (with multiplicity) inside |z - center| < radius via the argument
// principle on a uniform angular grid, doubling until the value settles onto
// an integer.  Throws numerical_error if the function vanishes on the contour.
inline WindingResult winding_disk(const AnalyticFn& f, const AnalyticFn& df,
                                  cdouble center, double radius,
                                  const NumericalPolicy& policy = {}) {
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  const double tol = policy.winding_round_tol;
  auto term = [&](double theta) {
    const cdouble zrel = std::polar(radius, theta);
    return detail::logderiv_term(f, df, center + zrel) * zrel;
  };
  int n = 64;
  std::vector<cdouble> vals(n);
  for (int i = 0; i < n; ++i) vals[i] = term(2.0 * kPi * i / n);
  auto mean = [](const std::vector<cdouble>& v) {
    cdouble s(0.0, 0.0);
    for (cdouble x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  cdouble prev = mean(vals);
  while (n < 65536) {
    n *= 2;
    std::vector<cdouble> next(n);
    for (int i = 0; i < n / 2; ++i) {
      next[2 * i] = vals[i];
      next[2 * i + 1] = term(2.0 * kPi * (2 * i + 1) / n);
    }
    vals.swap(next);
    cdouble w = mean(vals);
    if (std::abs(w - prev) <= 0.5 * tol && detail::near_nonnegative_integer(w, tol)) {
      WindingResult res;
      res.raw = w;
      res.count = static_cast<int>(std::lround(w.real()));
      res.converged = true;
      res.panels = n;
      res.radius = radius;
      return res;
    }
    prev = w;
  }
  WindingResult res;
  res.raw = prev;
  res.count = static_cast<int>(std::lround(prev.real()));
  res.panels = n;
  res.radius = radius;
  return res;
}

// winding_disk with a ladder of slightly perturbed radii, for contours that
// happen to pass through (or graze) a zero.
inline WindingResult count_zeros_disk(const AnalyticFn& f, const AnalyticFn& df,
                                      cdouble center, double radius,
                                      const NumericalPolicy& policy = {}) {
  static constexpr double kFactors[] = {1.0,       1.0 + 2e-4, 1.0 - 2e-4,
                                        1.0 + 1e-3, 1.0 - 1e-3, 1.0 + 4e-3,
                                        1.0 - 4e-3};
  for (double fac : kFactors) {
    try {
      WindingResult w = winding_disk(f, df, center, radius * fac, policy);
      if (w.converged) return w;
    } catch (const numerical_error&) {
    }
  }
  throw numerical_error("zero count did not converge at any perturbed radius");
}

// Order of the zero at z = 0 (0 if the function does not vanish there):
// winding counts over shrinking disks until two consecutive sizes agree.
inline int multiplicity_at_origin(const AnalyticFn& f, const AnalyticFn& df,
                                  const NumericalPolicy& policy = {}) {
  double r = 0.3;
  int prev = -1;
  for (int k = 0; k < 12; ++k, r *= 0.5) {
    int count;
    try {
      count = count_zeros_disk(f, df, cdouble(0.0, 0.0), r, policy).count;
    } catch (const numerical_error&) {
      prev = -1;
      continue;
    }
    if (count == prev) return count;
    prev = count;
  }
  throw numerical_error("origin multiplicity did not stabilize");
}

// All zeros in the open rectangle (lo, hi), located by recursive quadrisection
// of argument-principle counts, then Newton (simple zeros) or multiplicity-
// corrected Newton (clusters).  Split lines are jittered when a zero lands on
// one.  Roots closer than cluster_tol are merged.
inline ZeroSet find_zeros_rect(const AnalyticFn& f, const AnalyticFn& df,
                               cdouble lo, cdouble hi,
                               const NumericalPolicy& policy = {}) {
  if (!(hi.real() > lo.real()) || !(hi.imag() > lo.imag()))
    throw std::invalid_argument("rectangle corners must be ordered");

  auto count_box = [&](double x0, double y0, double x1, double y1) {
    WindingResult w =
        detail::winding_rect(f, df, cdouble(x0, y0), cdouble(x1, y1), policy);
    if (!w.converged) throw numerical_error("rectangle count did not converge");
    return w.count;
  };

  auto refine_simple = [&](cdouble z0, double reach) -> std::optional<cdouble> {
    cdouble z = z0;
    for (int it = 0; it < policy.newton_max_iter; ++it) {
      cdouble fz = f(z), dz = df(z);
      if (!detail::finite(fz) || !detail::finite(dz) || dz == cdouble(0.0, 0.0))
        return std::nullopt;
      cdouble step = fz / dz;
      z -= step;
      if (std::abs(z - z0) > 4.0 * reach) return std::nullopt;
      if (std::abs(step) <= policy.newton_tol * (1.0 + std::abs(z))) return z;
    }
    return std::nullopt;
  };

  auto polish_cluster = [&](cdouble z, int m) {
    for (int it = 0; it < 12; ++it) {
      cdouble fz = f(z), dz = df(z);
      if (!detail::finite(fz) || !detail::finite(dz) || fz == cdouble(0.0, 0.0) ||
          dz == cdouble(0.0, 0.0))
        break;
      cdouble step = static_cast<double>(m) * fz / dz;
      if (!detail::finite(step)) break;
      z -= step;
      if (std::abs(step) <= policy.newton_tol * (1.0 + std::abs(z))) break;
    }
    return z;
  };

  struct Box {
    double x0, y0, x1, y1;
    int count, depth;
  };
  static constexpr double kSplit[][2] = {
      {0.5, 0.5}, {0.513, 0.5}, {0.5, 0.5127}, {0.4873, 0.5311}, {0.532, 0.4689}};
  const double kLocateSide = 0.5, kMinSide = 1e-8;

  const int total = count_box(lo.real(), lo.imag(), hi.real(), hi.imag());
  std::vector<Box> work{{lo.real(), lo.imag(), hi.real(), hi.imag(), total, 0}};
  std::vector<Root> leaves;
  while (!work.empty()) {
    Box b = work.back();
    work.pop_back();
    if (b.count == 0) continue;
    if (b.depth > 64) throw numerical_error("zero localization recursed too deep");
    const double sx = b.x1 - b.x0, sy = b.y1 - b.y0;
    const double side = std::max(sx, sy);
    const cdouble cen(0.5 * (b.x0 + b.x1), 0.5 * (b.y0 + b.y1));

    if (b.count == 1 && side <= kLocateSide) {
      auto z = refine_simple(cen, side);
      if (z && z->real() >= b.x0 - 0.5 * sx && z->real() <= b.x1 + 0.5 * sx &&
          z->imag() >= b.y0 - 0.5 * sy && z->imag() <= b.y1 + 0.5 * sy) {
        leaves.push_back({*z, 1, false});
        continue;
      }
      if (side <= kMinSide) {
        leaves.push_back({cen, 1, false});
        continue;
      }
    } else if (side <= kMinSide) {
      leaves.push_back({polish_cluster(cen, b.count), b.count, false});
      continue;
    }

    bool split_ok = false;
    for (const auto& fr : kSplit) {
      const double mx = b.x0 + fr[0] * sx, my = b.y0 + fr[1] * sy;
      int c[4];
      try {
        c[0] = count_box(b.x0, b.y0, mx, my);
        c[1] = count_box(mx, b.y0, b.x1, my);
        c[2] = count_box(mx, my, b.x1, b.y1);
        c[3] = count_box(b.x0, my, mx, b.y1);
      } catch (const numerical_error&) {
        continue;
      }
      if (c[0] + c[1] + c[2] + c[3] != b.count) continue;
      work.push_back({b.x0, b.y0, mx, my, c[0], b.depth + 1});
      work.push_back({mx, b.y0, b.x1, my, c[1], b.depth + 1});
      work.push_back({mx, my, b.x1, b.y1, c[2], b.depth + 1});
      work.push_back({b.x0, my, mx, b.y1, c[3], b.depth + 1});
      split_ok = true;
      break;
    }
    if (!split_ok)
      throw numerical_error("could not split region without losing zeros");
  }

  std::sort(leaves.begin(), leaves.end(), [](const Root& a, const Root& b) {
    return std::abs(a.location) < std::abs(b.location);
  });
  ZeroSet zs;
  zs.total_count = total;
  for (const Root& r : leaves) {
    bool merged = false;
    for (Root& s : zs.roots) {
      const double tol =
          cluster_tol(std::max(std::abs(s.location), std::abs(r.location)));
      if (std::abs(s.location - r.location) <= tol) {
        const double wa = s.multiplicity, wb = r.multiplicity;
        s.location = (s.location * wa + r.location * wb) / (wa + wb);
        s.multiplicity += r.multiplicity;
        merged = true;
        break;
      }
    }
    if (!merged) zs.roots.push_back(r);
  }
  std::sort(zs.roots.begin(), zs.roots.end(), [](const Root& a, const Root& b) {
    const double ma = std::abs(a.location), mb = std::abs(b.location);
    if (ma != mb) return ma < mb;
    if (a.location.real() != b.location.real())
      return a.location.real() < b.location.real();
    return a.location.imag() < b.location.imag();
  });
  return zs;
}

// Simple zeros on a real interval for functions that are real there, by sign
// scan, bisection, and Newton polish.  Zeros of even local multiplicity have
// no sign change and are not reported.
inline ZeroSet find_real_zeros(const AnalyticFn& f, const AnalyticFn& df,
                               double a, double b, int samples = 512,
                               const NumericalPolicy& policy = {}) {
  if (!(b > a)) throw std::invalid_argument("interval must be ordered");
  if (samples < 8) throw std::invalid_argument("too few scan samples");
  std::vector<double> xs(samples), vs(samples);
  for (int i = 0; i < samples; ++i) {
    xs[i] = a + (b - a) * i / (samples - 1);
    vs[i] = f(cdouble(xs[i], 0.0)).real();
  }

  ZeroSet zs;
  auto emit = [&](double x) {
    cdouble z(x, 0.0);
    for (int it = 0; it < policy.newton_max_iter; ++it) {
      cdouble fz = f(z), dz = df(z);
      if (!detail::finite(fz) || !detail::finite(dz) || dz == cdouble(0.0, 0.0))
        break;
      cdouble step = fz / dz;
      z -= step;
      if (std::abs(step) <= policy.newton_tol * (1.0 + std::abs(z))) break;
    }
    for (const Root& r : zs.roots)
      if (std::abs(r.location - z) <= cluster_tol(std::abs(z))) return;
    zs.roots.push_back({z, 1, false});
  };

  for (int i = 0; i < samples; ++i) {
    if (vs[i] == 0.0) {
      emit(xs[i]);
      continue;
    }
    if (i + 1 < samples && vs[i + 1] != 0.0 &&
        std::signbit(vs[i]) != std::signbit(vs[i + 1])) {
      double xlo = xs[i], xhi = xs[i + 1], flo = vs[i];
      for (int it = 0; it < 50; ++it) {
        const double mid = 0.5 * (xlo + xhi);
        const double fm = f(cdouble(mid, 0.0)).real();
        if (fm == 0.0) {
          xlo = xhi = mid;
          break;
        }
        if (std::signbit(fm) == std::signbit(flo)) {
          xlo = mid;
          flo = fm;
        } else {
          xhi = mid;
        }
      }
      emit(0.5 * (xlo + xhi));
    }
  }
  zs.total_count = static_cast<int>(zs.roots.size());
  return zs;
}

// Least-squares line through pair counts N_ev(r) = (N_disk(r) - m0)/2 on a
// ladder of radii up to r_max.  The slope estimates (zero density)/2, i.e.
// total length / pi for the star-graph characteristic function.
inline DensityFit estimate_density(const AnalyticFn& f, const AnalyticFn& df,
                                   double r_max, int n_radii = 12,
                                   const NumericalPolicy& policy = {}) {
  if (!(r_max > 0.0)) throw std::invalid_argument("r_max must be positive");
  if (n_radii < 3) throw std::invalid_argument("need at least three radii");
  DensityFit fit;
  fit.m0 = multiplicity_at_origin(f, df, policy);
  for (int i = 1; i <= n_radii; ++i) {
    const double r = r_max * i / n_radii;
    WindingResult w = count_zeros_disk(f, df, cdouble(0.0, 0.0), r, policy);
    fit.radii.push_back(w.radius);
    fit.counts_disk.push_back(w.count);
    fit.counts_ev.push_back(0.5 * (w.count - fit.m0));
  }
  const int n = n_radii;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += fit.radii[i];
    sy += fit.counts_ev[i];
    sxx += fit.radii[i] * fit.radii[i];
    sxy += fit.radii[i] * fit.counts_ev[i];
  }
  const double den = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss = 0;
  for (int i = 0; i < n; ++i) {
    const double d = fit.counts_ev[i] - fit.slope * fit.radii[i] - fit.intercept;
    ss += d * d;
  }
  fit.residual = std::sqrt(ss / n);
  fit.max_enclosed = fit.counts_disk.back();
  fit.sparse = fit.counts_ev.back() < 20.0;
  return fit;
}

// Length of the support of the mode sum, measured from the far endpoint, via
// the growth rate of the transform's zero set: extent = pi * density slope.
inline SupportEstimate estimate_support_extent(const SineTransform& t,
                                               double r_max, int n_radii = 12,
                                               const NumericalPolicy& policy = {}) {
  bool all_zero = true;
  for (cdouble c : t.coeffs)
    if (c != cdouble(0.0, 0.0)) all_zero = false;
  if (t.coeffs.empty() || all_zero)
    throw std::invalid_argument("support extent undefined for the zero function");
  AnalyticFn f = [&t, policy](cdouble z) {
    return sine_transform_series(t, z, policy);
  };
  AnalyticFn df = [&t, policy](cdouble z) {
    return sine_transform_series_derivative(t, z, policy);
  };
  SupportEstimate est;
  est.fit = estimate_density(f, df, r_max, n_radii, policy);
  est.extent = kPi * est.fit.slope;
  return est;
}

inline WindingResult count_zeros_disk(const CharacteristicFn& fn, double radius) {
  AnalyticFn f = [&fn](cdouble z) { return fn.phi(z); };
  AnalyticFn df = [&fn](cdouble z) { return fn.phi_derivative(z); };
  return count_zeros_disk(f, df, cdouble(0.0, 0.0), radius, fn.problem.policy);
}

inline int multiplicity_at_origin(const CharacteristicFn& fn) {
  AnalyticFn f = [&fn](cdouble z) { return fn.phi(z); };
  AnalyticFn df = [&fn](cdouble z) { return fn.phi_derivative(z); };
  return multiplicity_at_origin(f, df, fn.problem.policy);
}

inline ZeroSet find_zeros_rect(const CharacteristicFn& fn, cdouble lo, cdouble hi) {
  AnalyticFn f = [&fn](cdouble z) { return fn.phi(z); };
  AnalyticFn df = [&fn](cdouble z) { return fn.phi_derivative(z); };
  ZeroSet zs = find_zeros_rect(f, df, lo, hi, fn.problem.policy);
  for (Root& r : zs.roots)
    if (std::abs(r.location) <= 1e-7) r.structural = true;
  return zs;
}

inline ZeroSet find_real_zeros(const CharacteristicFn& fn, double a, double b,
                               int samples = 512) {
  AnalyticFn f = [&fn](cdouble z) { return fn.phi(z); };
  AnalyticFn df = [&fn](cdouble z) { return fn.phi_derivative(z); };
  return find_real_zeros(f, df, a, b, samples, fn.problem.policy);
}

inline DensityFit estimate_density(const CharacteristicFn& fn, double r_max,
                                   int n_radii = 12) {
  AnalyticFn f = [&fn](cdouble z) { return fn.phi(z); };
  AnalyticFn df = [&fn](cdouble z) { return fn.phi_derivative(z); };
  return estimate_density(f, df, r_max, n_radii, fn.problem.policy);
}

}  // namespace stargraph
