#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stargraph/characteristic.hpp"
#include "stargraph/model.hpp"
#include "stargraph/rng.hpp"
#include "stargraph/transforms.hpp"
#include "stargraph/zeros.hpp"

namespace stargraph {

struct PhiSamples {
  std::vector<cdouble> nodes;
  std::vector<cdouble> values;
};

struct FitOptions {
  bool real_only = true;   // fit real mode coefficients only
  int max_iter = 60;
  double fit_tol_rel = 1e-10;  // residual tolerance relative to target scale
  double lambda0 = 1e-3;       // initial damping
};

struct FitReport {
  bool converged = false;
  int iterations = 0;
  double final_residual = 0.0;
  double fit_tol = 0.0;
  std::vector<double> residual_history;  // rms after each accepted step
  Problem recovered;
  std::string stop_reason;
};

// 200 real nodes on (0, 4 * total length] plus 50 nodes one unit above the
// real axis, nudged off the mode-kernel pole bands.
inline std::vector<cdouble> standard_nodes(const StarGraph& g,
                                           const NumericalPolicy& policy = {},
                                           int n_real = 200, int n_complex = 50) {
  if (g.lengths.empty()) throw std::invalid_argument("graph has no edges");
  const double span = 4.0 * g.total_length();
  std::vector<cdouble> nodes;
  nodes.reserve(n_real + n_complex);
  for (int k = 1; k <= n_real; ++k) nodes.emplace_back(span * k / n_real, 0.0);
  for (int k = 1; k <= n_complex; ++k) nodes.emplace_back(span * k / n_complex, 1.0);
  for (cdouble& z : nodes)
    for (double l : g.lengths)
      for (int n = 1; n <= 64; ++n) {
        const double w = n * kPi / l;
        if (w > std::abs(z) + 1.0) break;
        if (detail::in_pole_band(z, l, n, policy.pole_band))
          z += cdouble(3.0 * policy.pole_band * w, 0.0);
      }
  return nodes;
}

inline PhiSamples sample_phi(const CharacteristicFn& fn,
                             const std::vector<cdouble>& nodes) {
  PhiSamples s;
  s.nodes = nodes;
  s.values.reserve(nodes.size());
  for (cdouble z : nodes) s.values.push_back(fn.phi(z));
  return s;
}

// Max pointwise gap between two characteristic functions over the nodes.
// Only comparable on identical geometry.
inline double phi_distance(const CharacteristicFn& a, const CharacteristicFn& b,
                           const std::vector<cdouble>& nodes) {
  if (a.problem.graph.lengths != b.problem.graph.lengths)
    throw std::invalid_argument("characteristic functions live on different graphs");
  double worst = 0.0;
  for (cdouble z : nodes) worst = std::max(worst, std::abs(a.phi(z) - b.phi(z)));
  return worst;
}

namespace detail {

// Solve (A)x = b for symmetric positive definite A, in place.  Returns false
// if a pivot is not positive.
inline bool solve_spd(std::vector<double> a, std::vector<double> b,
                      std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    double d = a[k * n + k];
    for (std::size_t i = 0; i < k; ++i) d -= a[k * n + i] * a[k * n + i];
    if (!(d > 0.0)) return false;
    const double lkk = std::sqrt(d);
    a[k * n + k] = lkk;
    for (std::size_t r = k + 1; r < n; ++r) {
      double s = a[r * n + k];
      for (std::size_t i = 0; i < k; ++i) s -= a[r * n + i] * a[k * n + i];
      a[r * n + k] = s / lkk;
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    double s = b[r];
    for (std::size_t i = 0; i < r; ++i) s -= a[r * n + i] * b[i];
    b[r] = s / a[r * n + r];
  }
  x.assign(n, 0.0);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t i = ri + 1; i < n; ++i) s -= a[i * n + ri] * x[i];
    x[ri] = s / a[ri * n + ri];
  }
  return true;
}

}  // namespace detail

// Partial derivatives of phi at z with respect to the real and imaginary
// parts of one mode coefficient.  Each coefficient c enters phi only through
// 2 (Re c) g_n + |c|^2 K_n on its own edge, multiplied by the other edges'
// sine factors, so both derivatives are closed forms.  This is the column
// formula the fitter's Jacobian is assembled from.
inline std::pair<cdouble, cdouble> phi_coeff_gradient(const Problem& p,
                                                      std::size_t edge,
                                                      int mode, cdouble z) {
  const auto& lengths = p.graph.lengths;
  if (edge >= p.potentials.size() || edge >= lengths.size())
    throw std::invalid_argument("edge index out of range");
  if (mode < 1 || mode > p.potentials[edge].order())
    throw std::invalid_argument("mode index out of range");
  cdouble pj(1.0, 0.0);
  for (std::size_t k = 0; k < lengths.size(); ++k)
    if (k != edge) pj *= std::sin(z * lengths[k]);
  const double l = lengths[edge];
  const double w = mode * kPi / l;
  const double sgn = (mode % 2 == 0) ? 1.0 : -1.0;
  const cdouble kn = detail::pair_kernel(z, l, mode, p.policy.pole_band);
  const cdouble c = p.potentials[edge].coeffs[mode - 1];
  return {(2.0 * sgn * w * kn + 2.0 * c.real() * kn) * pj,
          2.0 * c.imag() * kn * pj};
}

// Recover mode coefficients on a known graph from samples of the
// characteristic function, by damped Gauss-Newton on the exact analytic
// Jacobian.  Deterministic: no randomness, strict descent.
inline FitReport fit_potentials(const PhiSamples& target, const StarGraph& graph,
                                const std::vector<int>& n_modes,
                                const FitOptions& opts = {},
                                const std::vector<EdgePotential>* init = nullptr) {
  const std::size_t m = graph.lengths.size();
  if (m < 2) throw std::invalid_argument("graph must have at least two edges");
  if (n_modes.size() != m)
    throw std::invalid_argument("mode count list does not match edge count");
  for (int n : n_modes)
    if (n < 0) throw std::invalid_argument("negative mode count");
  if (target.nodes.empty() || target.nodes.size() != target.values.size())
    throw std::invalid_argument("target samples empty or inconsistent");

  const int per_mode = opts.real_only ? 1 : 2;
  std::size_t n_params = 0;
  for (int n : n_modes) n_params += static_cast<std::size_t>(n) * per_mode;

  auto unpack = [&](const std::vector<double>& params) {
    Problem p;
    p.graph = graph;
    p.potentials.resize(m);
    std::size_t at = 0;
    for (std::size_t j = 0; j < m; ++j)
      for (int n = 0; n < n_modes[j]; ++n) {
        const double re = params[at++];
        const double im = opts.real_only ? 0.0 : params[at++];
        p.potentials[j].coeffs.emplace_back(re, im);
      }
    return p;
  };

  std::vector<double> params(n_params, 0.0);
  if (init) {
    if (init->size() != m)
      throw std::invalid_argument("initial potential list does not match edge count");
    std::size_t at = 0;
    for (std::size_t j = 0; j < m; ++j)
      for (int n = 0; n < n_modes[j]; ++n) {
        cdouble c = n < static_cast<int>((*init)[j].coeffs.size())
                        ? (*init)[j].coeffs[n]
                        : cdouble(0.0, 0.0);
        params[at++] = c.real();
        if (!opts.real_only) params[at++] = c.imag();
      }
  }

  const std::size_t n_obs = target.nodes.size();
  auto rms_of = [&](const std::vector<cdouble>& v) {
    double s = 0.0;
    for (cdouble x : v) s += std::norm(x);
    return std::sqrt(s / v.size());
  };
  const double scale = std::max(1.0, rms_of(target.values));

  FitReport report;
  report.fit_tol = opts.fit_tol_rel * scale;

  auto residuals = [&](const std::vector<double>& p) {
    auto fn = CharacteristicFn::build(unpack(p));
    std::vector<cdouble> r(n_obs);
    for (std::size_t i = 0; i < n_obs; ++i)
      r[i] = fn.phi(target.nodes[i]) - target.values[i];
    return r;
  };

  std::vector<cdouble> res = residuals(params);
  double rms = rms_of(res);
  report.residual_history.push_back(rms);

  double lambda = opts.lambda0;
  std::string reason;
  int iter = 0;

  while (iter < opts.max_iter) {
    if (rms <= report.fit_tol) {
      reason = "reached residual tolerance";
      break;
    }
    if (n_params == 0) {
      reason = "no free parameters";
      break;
    }
    ++iter;

    Problem cur = unpack(params);
    std::vector<cdouble> jac(n_obs * n_params);
    for (std::size_t i = 0; i < n_obs; ++i) {
      const cdouble z = target.nodes[i];
      std::size_t at = 0;
      for (std::size_t j = 0; j < m; ++j) {
        for (int n = 1; n <= n_modes[j]; ++n) {
          const auto [d_re, d_im] = phi_coeff_gradient(cur, j, n, z);
          jac[i * n_params + at++] = d_re;
          if (!opts.real_only) jac[i * n_params + at++] = d_im;
        }
      }
    }

    std::vector<double> a(n_params * n_params, 0.0), g(n_params, 0.0);
    for (std::size_t p = 0; p < n_params; ++p) {
      for (std::size_t q = p; q < n_params; ++q) {
        double s = 0.0;
        for (std::size_t i = 0; i < n_obs; ++i)
          s += (std::conj(jac[i * n_params + p]) * jac[i * n_params + q]).real();
        a[p * n_params + q] = a[q * n_params + p] = s;
      }
      double s = 0.0;
      for (std::size_t i = 0; i < n_obs; ++i)
        s += (std::conj(jac[i * n_params + p]) * res[i]).real();
      g[p] = s;
    }
    double max_diag = 0.0;
    for (std::size_t p = 0; p < n_params; ++p)
      max_diag = std::max(max_diag, a[p * n_params + p]);

    bool accepted = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      std::vector<double> damped = a;
      for (std::size_t p = 0; p < n_params; ++p)
        damped[p * n_params + p] +=
            lambda * std::max(a[p * n_params + p], 1e-6 * max_diag);
      std::vector<double> rhs(n_params);
      for (std::size_t p = 0; p < n_params; ++p) rhs[p] = -g[p];
      std::vector<double> step;
      if (!detail::solve_spd(std::move(damped), std::move(rhs), step)) {
        lambda *= 10.0;
        continue;
      }
      std::vector<double> trial = params;
      for (std::size_t p = 0; p < n_params; ++p) trial[p] += step[p];
      std::vector<cdouble> trial_res = residuals(trial);
      const double trial_rms = rms_of(trial_res);
      if (trial_rms < rms) {
        params = std::move(trial);
        res = std::move(trial_res);
        rms = trial_rms;
        report.residual_history.push_back(rms);
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
    if (!accepted) {
      reason = "no descending step";
      break;
    }
  }

  if (reason.empty())
    reason = rms <= report.fit_tol ? "reached residual tolerance" : "iteration limit";
  report.converged = rms <= report.fit_tol;
  report.iterations = iter;
  report.final_residual = rms;
  report.recovered = unpack(params);
  report.stop_reason = reason;
  return report;
}

struct UniquenessReport {
  int trials = 0;
  std::vector<double> recovery_errors;  // max coefficient error per trial
  std::vector<double> fit_residuals;
  double max_recovery_error = 0.0;
  double min_pairwise_phi_distance = 0.0;
  int recovered_count = 0;  // trials with error <= 1e-5
  bool lengths_independent = false;
  std::string advisory;
};

// Draw random real potentials, sample their characteristic functions, refit
// from scratch, and measure both recovery quality and how far apart distinct
// potentials keep their characteristic functions.
inline UniquenessReport uniqueness_experiment(const StarGraph& graph,
                                              const std::vector<int>& n_modes,
                                              int trials, std::uint64_t seed,
                                              const NumericalPolicy& policy = {}) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (n_modes.size() != graph.lengths.size())
    throw std::invalid_argument("mode count list does not match edge count");

  UniquenessReport rep;
  rep.trials = trials;
  auto indep = rational_independence_check(graph.lengths);
  rep.lengths_independent = indep.independent;
  if (!indep.independent)
    rep.advisory =
        "edge lengths admit an integer relation; distinct potentials can share "
        "a characteristic function";

  const auto nodes = standard_nodes(graph, policy);
  Rng rng(seed);
  std::vector<PhiSamples> all_samples;
  for (int t = 0; t < trials; ++t) {
    Problem truth;
    truth.graph = graph;
    truth.policy = policy;
    truth.potentials.resize(graph.lengths.size());
    for (std::size_t j = 0; j < graph.lengths.size(); ++j)
      for (int n = 0; n < n_modes[j]; ++n)
        truth.potentials[j].coeffs.emplace_back(rng.uniform(-0.3, 0.3), 0.0);
    auto fn = CharacteristicFn::build(truth);
    auto target = sample_phi(fn, nodes);
    all_samples.push_back(target);

    auto fit = fit_potentials(target, graph, n_modes);
    double err = 0.0;
    for (std::size_t j = 0; j < graph.lengths.size(); ++j)
      for (int n = 0; n < n_modes[j]; ++n)
        err = std::max(err, std::abs(fit.recovered.potentials[j].coeffs[n] -
                                     truth.potentials[j].coeffs[n]));
    rep.recovery_errors.push_back(err);
    rep.fit_residuals.push_back(fit.final_residual);
    rep.max_recovery_error = std::max(rep.max_recovery_error, err);
    if (err <= 1e-5) ++rep.recovered_count;
  }

  double min_pair = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < all_samples.size(); ++s)
    for (std::size_t t = s + 1; t < all_samples.size(); ++t) {
      double d = 0.0;
      for (std::size_t i = 0; i < nodes.size(); ++i)
        d = std::max(d, std::abs(all_samples[s].values[i] - all_samples[t].values[i]));
      min_pair = std::min(min_pair, d);
    }
  rep.min_pairwise_phi_distance = all_samples.size() > 1 ? min_pair : 0.0;
  return rep;
}

struct PartialInfoReport {
  double support_fraction = 0.0;
  double margin = 0.0;
  double amplitude = 0.0;
  double r_max = 0.0;
  std::vector<EdgePotential> potentials;
  std::vector<double> extents;
  std::vector<double> extent_targets;
  std::vector<double> extent_errors;
  std::vector<bool> within_margin;
  bool sparse = false;
  bool inconclusive = false;
  std::string note;
};

// Place a smooth bump on the far-end fraction of each edge, project it onto
// the mode basis, and check that the transform's zero density localizes the
// support to within the margin.
inline PartialInfoReport partial_info_experiment(const StarGraph& graph,
                                                 double support_fraction,
                                                 int n_modes, double r_max,
                                                 double amplitude = 0.5,
                                                 double margin = 0.15,
                                                 const NumericalPolicy& policy = {}) {
  if (!(support_fraction > 0.0 && support_fraction < 1.0))
    throw std::invalid_argument("support fraction must lie in (0, 1)");
  if (n_modes < 1) throw std::invalid_argument("need at least one mode");
  if (!(r_max > 0.0)) throw std::invalid_argument("r_max must be positive");
  if (amplitude == 0.0)
    throw std::invalid_argument("amplitude must be nonzero");
  if (margin < 0.0) throw std::invalid_argument("margin must be nonnegative");

  PartialInfoReport rep;
  rep.support_fraction = support_fraction;
  rep.margin = margin;
  rep.amplitude = amplitude;
  rep.r_max = r_max;

  std::string reasons;
  for (double l : graph.lengths) {
    const double x0 = l * (1.0 - support_fraction);
    const int samples = std::max(1024, 16 * n_modes);
    std::vector<cdouble> q(samples + 1);
    for (int i = 0; i <= samples; ++i) {
      const double x = l * i / samples;
      if (x >= x0) {
        const double t = (x - x0) / (l - x0);
        q[i] = amplitude * 16.0 * t * t * (1.0 - t) * (1.0 - t);
      }
    }
    EdgePotential pot = project_to_fourier(q, l, n_modes);
    rep.potentials.push_back(pot);

    SineTransform tr{pot.coeffs, l};
    auto est = estimate_support_extent(tr, r_max, 12, policy);
    rep.extents.push_back(est.extent);
    rep.extent_targets.push_back(support_fraction * l);
    rep.extent_errors.push_back(std::abs(est.extent - support_fraction * l));
    rep.within_margin.push_back(est.extent <= (support_fraction + margin) * l);
    rep.sparse = rep.sparse || est.fit.sparse;
  }

  if (support_fraction + margin >= 1.0)
    reasons = "support fraction plus margin reaches the interval end";
  if (rep.sparse) {
    if (!reasons.empty()) reasons += "; ";
    reasons += "zero set too sparse for a stable density fit";
  }
  rep.inconclusive = !reasons.empty();
  rep.note = reasons;
  return rep;
}

}  // namespace stargraph
