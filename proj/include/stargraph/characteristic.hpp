#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "stargraph/model.hpp"
#include "stargraph/transforms.hpp"

namespace stargraph {

namespace detail {

// Weights w with sum_i w[i] f(nodes[i]) ~ f^(m)(x0), by Fornberg's recursion.
// Exact for polynomials of degree < nodes.size(), so the order of accuracy is
// nodes.size() - m on arbitrary node sets.
inline std::vector<double> fd_weights(double x0, const std::vector<double>& nodes,
                                      int m) {
  const int n = static_cast<int>(nodes.size());
  if (n < m + 1) throw std::invalid_argument("not enough nodes for derivative order");
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  c[0][0] = 1.0;
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][m];
  return w;
}

}  // namespace detail

// Entire function whose zero set is the spectrum of the star-graph operator
// with frozen-argument potentials.  Built once per problem; evaluation is
// pole-free in the whole plane.
class CharacteristicFn {
 public:
  Problem problem;

  static CharacteristicFn build(const Problem& p) {
    auto issues = validate(p);
    if (!issues.empty()) {
      std::string msg = "invalid problem:";
      for (const auto& s : issues) msg += " [" + s + "]";
      throw std::invalid_argument(msg);
    }
    CharacteristicFn fn;
    fn.problem = p;
    const std::size_t m = p.graph.edge_count();
    fn.t_q_.resize(m);
    fn.t_qconj_.resize(m);
    fn.t_gram_.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double l = p.graph.lengths[j];
      fn.t_q_[j] = SineTransform{p.potentials[j].coeffs, l};
      SineTransform tc{p.potentials[j].coeffs, l};
      for (auto& cf : tc.coeffs) cf = std::conj(cf);
      fn.t_qconj_[j] = std::move(tc);
      fn.t_gram_[j] = gram_coeffs(p.potentials[j], l);
    }
    return fn;
  }

  cdouble phi(cdouble z) const {
    const auto& ls = problem.graph.lengths;
    const std::size_t m = ls.size();
    cdouble acc(0.0, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      cdouble ej = edge_factor(j, z);
      cdouble pj(1.0, 0.0);
      for (std::size_t k = 0; k < m; ++k)
        if (k != j) pj *= std::sin(z * ls[k]);
      acc += ej * pj;
    }
    return acc;
  }

  cdouble phi_derivative(cdouble z) const {
    const auto& ls = problem.graph.lengths;
    const std::size_t m = ls.size();
    std::vector<cdouble> s(m), c(m);
    for (std::size_t k = 0; k < m; ++k) {
      s[k] = std::sin(z * ls[k]);
      c[k] = std::cos(z * ls[k]);
    }
    cdouble acc(0.0, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      cdouble pj(1.0, 0.0);
      for (std::size_t k = 0; k < m; ++k)
        if (k != j) pj *= s[k];
      cdouble dpj(0.0, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        if (i == j) continue;
        cdouble term = ls[i] * c[i];
        for (std::size_t k = 0; k < m; ++k)
          if (k != j && k != i) term *= s[k];
        dpj += term;
      }
      acc += edge_factor_derivative(j, z) * pj + edge_factor(j, z) * dpj;
    }
    return acc;
  }

  // Normalized solution of the edge equation with phi_j(l_j) = 0 and common
  // vertex value prod_k sin(z l_k).  Defined for every z.
  cdouble edge_solution(int edge, double x, cdouble z) const {
    const auto& ls = problem.graph.lengths;
    if (edge < 0 || static_cast<std::size_t>(edge) >= ls.size())
      throw std::invalid_argument("edge index out of range");
    const double l = ls[edge];
    if (x < 0.0 || x > l) throw std::invalid_argument("position outside edge");
    cdouble pj(1.0, 0.0);
    for (std::size_t k = 0; k < ls.size(); ++k)
      if (k != static_cast<std::size_t>(edge)) pj *= std::sin(z * ls[k]);
    const auto& q = problem.potentials[edge].coeffs;
    cdouble series(0.0, 0.0);
    for (std::size_t n = 1; n <= q.size(); ++n)
      series += q[n - 1] * detail::sine_mode(static_cast<int>(n), x, l) *
                detail::pair_kernel(z, l, static_cast<int>(n),
                                    problem.policy.pole_band);
    return pj * (std::sin(z * (l - x)) + series);
  }

  // Max over interior grid points of |-u'' + q(x) u(0) - z^2 u| where u is the
  // edge solution sampled on a uniform grid and u'' is a fourth-order finite
  // difference (one-sided closures next to the endpoints).
  double ode_residual(int edge, cdouble z, int grid_points) const {
    const auto& ls = problem.graph.lengths;
    if (edge < 0 || static_cast<std::size_t>(edge) >= ls.size())
      throw std::invalid_argument("edge index out of range");
    if (grid_points < 8) throw std::invalid_argument("grid too coarse");
    const double l = ls[edge];
    const int g = grid_points;
    const double h = l / (g - 1);
    std::vector<cdouble> u(g);
    for (int i = 0; i < g; ++i)
      u[i] = edge_solution(edge, l * (double(i) / (g - 1)), z);

    std::vector<double> xs(8);
    auto one_sided = [&](int base, int at) {
      for (int i = 0; i < 8; ++i) xs[i] = (base + i) * h;
      auto w = detail::fd_weights(at * h, xs, 2);
      cdouble d2(0.0, 0.0);
      for (int i = 0; i < 8; ++i) d2 += w[i] * u[base + i];
      return d2;
    };

    double worst = 0.0;
    const cdouble z2 = z * z;
    for (int i = 1; i <= g - 2; ++i) {
      cdouble d2;
      if (i == 1) {
        d2 = one_sided(0, 1);
      } else if (i == g - 2) {
        d2 = one_sided(g - 8, g - 2);
      } else {
        d2 = (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] -
              u[i + 2]) /
             (12.0 * h * h);
      }
      cdouble qx = synthesize(problem.potentials[edge], l, l * (double(i) / (g - 1)));
      cdouble r = -d2 + qx * u[0] - z2 * u[i];
      worst = std::max(worst, std::abs(r));
    }
    return worst;
  }

  // Sum over edges of u_j'(0) minus the potential pairing term, assembled
  // directly from the edge solutions.  Identically -phi(z); kept as a separate
  // code path so the two assemblies check each other.
  cdouble nonlocal_residual(cdouble z) const {
    const auto& ls = problem.graph.lengths;
    const std::size_t m = ls.size();
    const double band = problem.policy.pole_band;
    cdouble acc(0.0, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double l = ls[j];
      cdouble pj(1.0, 0.0);
      for (std::size_t k = 0; k < m; ++k)
        if (k != j) pj *= std::sin(z * ls[k]);
      const auto& q = problem.potentials[j].coeffs;
      cdouble deriv_part = z * std::cos(z * l);
      cdouble pair_part(0.0, 0.0);
      for (std::size_t n = 1; n <= q.size(); ++n) {
        const double w = static_cast<double>(n) * kPi / l;
        const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
        const cdouble kn = detail::pair_kernel(z, l, static_cast<int>(n), band);
        deriv_part += q[n - 1] * sgn * w * kn;
        pair_part += std::conj(q[n - 1]) * sgn * w * kn;
        pair_part += std::norm(q[n - 1]) * kn;
      }
      acc += -deriv_part * pj - pair_part * pj;
    }
    return acc;
  }

 private:
  std::vector<SineTransform> t_q_, t_qconj_, t_gram_;

  // T^conj + T + S + z cos(z l_j): the edge's contribution before the product
  // over the other edges' sine factors.
  cdouble edge_factor(std::size_t j, cdouble z) const {
    const double l = problem.graph.lengths[j];
    const auto& pol = problem.policy;
    return sine_transform_series(t_qconj_[j], z, pol) +
           sine_transform_series(t_q_[j], z, pol) +
           sine_transform_series(t_gram_[j], z, pol) + z * std::cos(z * l);
  }

  cdouble edge_factor_derivative(std::size_t j, cdouble z) const {
    const double l = problem.graph.lengths[j];
    const auto& pol = problem.policy;
    return sine_transform_series_derivative(t_qconj_[j], z, pol) +
           sine_transform_series_derivative(t_q_[j], z, pol) +
           sine_transform_series_derivative(t_gram_[j], z, pol) +
           std::cos(z * l) - z * l * std::sin(z * l);
  }
};

}  // namespace stargraph
