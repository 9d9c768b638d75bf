#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "stargraph/characteristic.hpp"
#include "stargraph/model.hpp"
#include "stargraph/rng.hpp"
#include "stargraph/transforms.hpp"

// Structural self-checks for an assembled problem.  Each suite probes one
// identity the characteristic function must satisfy regardless of the
// potentials supplied, on seeded random samples, and reports the worst
// relative deviation it saw against a fixed tolerance.

namespace stargraph {

struct SuiteResult {
  std::string name;
  bool pass = true;
  int checks = 0;
  double worst = 0.0;  // largest relative deviation over all checks
  double tolerance = 0.0;
};

struct VerificationReport {
  std::vector<SuiteResult> suites;
  bool pass = true;  // conjunction of the suites
};

namespace detail {

// Sample points stay off every mode pole band of every edge so the series
// and quadrature forms are both in their plain-evaluation regime.
inline bool on_any_pole_band(cdouble z, const Problem& p) {
  for (std::size_t j = 0; j < p.potentials.size(); ++j) {
    const double l = p.graph.lengths[j];
    const int N = p.potentials[j].order();
    for (int n = 1; n <= N; ++n)
      if (in_pole_band(z, l, n, 10.0 * p.policy.pole_band)) return true;
  }
  return false;
}

}  // namespace detail

// Suites, in order:
//   identity          closed-form sine transform vs direct quadrature, per edge
//   parity            phi(-z) = (-1)^m phi(z)
//   reality           phi real on the real axis (holds for complex potentials
//                     too, since modes enter through 2 Re q_n and |q_n|^2)
//   nonlocal-residual vertex-condition residual equals -phi identically
inline VerificationReport run_verification(const Problem& problem) {
  const auto fn = CharacteristicFn::build(problem);
  const int m = problem.graph.edge_count();
  const double parity_sign = (m % 2 == 0) ? 1.0 : -1.0;
  Rng rng(problem.policy.rng_seed);

  VerificationReport report;
  auto finish = [&](SuiteResult s) {
    s.pass = s.worst <= s.tolerance;
    report.pass = report.pass && s.pass;
    report.suites.push_back(std::move(s));
  };

  {
    SuiteResult s;
    s.name = "identity";
    s.tolerance = 1e-8;
    for (int j = 0; j < m; ++j) {
      const double l = problem.graph.lengths[j];
      const SineTransform t{problem.potentials[j].coeffs, l};
      auto f = [&](double x) { return synthesize(problem.potentials[j], l, x); };
      int done = 0;
      while (done < 32) {
        cdouble z(rng.uniform(-30.0, 30.0), rng.uniform(-2.0, 2.0));
        if (detail::on_any_pole_band(z, problem)) continue;
        const cdouble a = sine_transform_series(t, z, problem.policy);
        const cdouble b = sine_transform_quadrature(f, l, z, problem.policy);
        s.worst = std::max(s.worst, std::abs(a - b) / (1.0 + std::abs(b)));
        ++done;
        ++s.checks;
      }
    }
    finish(s);
  }

  {
    SuiteResult s;
    s.name = "parity";
    s.tolerance = 1e-11;
    for (int k = 0; k < 200; ++k) {
      cdouble z(rng.uniform(-25.0, 25.0), rng.uniform(-3.0, 3.0));
      const cdouble a = fn.phi(z);
      const cdouble b = fn.phi(-z);
      s.worst = std::max(s.worst,
                         std::abs(b - parity_sign * a) / (1.0 + std::abs(a)));
      ++s.checks;
    }
    finish(s);
  }

  {
    SuiteResult s;
    s.name = "reality";
    s.tolerance = 1e-12;
    for (int k = 0; k < 200; ++k) {
      const cdouble z(rng.uniform(-25.0, 25.0), 0.0);
      const cdouble v = fn.phi(z);
      s.worst = std::max(s.worst, std::abs(v.imag()) / (1.0 + std::abs(v)));
      ++s.checks;
    }
    finish(s);
  }

  {
    SuiteResult s;
    s.name = "nonlocal-residual";
    s.tolerance = 1e-10;
    for (int k = 0; k < 200; ++k) {
      cdouble z(rng.uniform(-25.0, 25.0), rng.uniform(-3.0, 3.0));
      const cdouble v = fn.phi(z);
      const cdouble r = fn.nonlocal_residual(z);
      s.worst = std::max(s.worst, std::abs(r + v) / (1.0 + std::abs(v)));
      ++s.checks;
    }
    finish(s);
  }

  return report;
}

}  // namespace stargraph
