#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Problem data for a star graph of m >= 2 edges joined at x = 0.  Edge j
// carries a potential given canonically by a finite coefficient vector
// against the mode basis sin(n pi (l_j - x)/l_j); arbitrary samples are
// approximated only at ingestion (project_to_fourier).  All spectral APIs
// work in the square-root variable z (eigenvalue = z^2).

namespace stargraph {

using cdouble = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Thrown when a contour integral, refinement loop, or solver cannot reach
// its stated tolerance; the message carries machine-readable diagnostics.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

struct NumericalPolicy {
  double pole_band = 1e-6;             // relative half-width of removable-singularity bands
  int quad_points_per_wavelength = 8;  // quadrature panel density for the integral oracle
  double newton_tol = 1e-12;           // relative step tolerance for root refinement
  int newton_max_iter = 50;
  double winding_round_tol = 0.1;      // max distance of a contour integral from an integer
  std::uint64_t rng_seed = 12345;
};

// Roots closer than this merge into one report entry.
inline double cluster_tol(double z_mag) { return 1e-7 * (1.0 + z_mag); }

struct EdgePotential {
  std::vector<cdouble> coeffs;  // coeffs[n-1] multiplies mode n

  int order() const { return int(coeffs.size()); }
  bool is_zero() const {
    for (const auto& c : coeffs)
      if (c != cdouble(0.0, 0.0)) return false;
    return true;
  }
};

struct StarGraph {
  std::vector<double> lengths;

  int edge_count() const { return int(lengths.size()); }
  double total_length() const {
    double s = 0.0;
    for (double l : lengths) s += l;
    return s;
  }
};

struct Problem {
  StarGraph graph;
  std::vector<EdgePotential> potentials;
  NumericalPolicy policy;
};

// Pure structural check; returns one human-readable line per defect, empty
// when the problem is well formed.
inline std::vector<std::string> validate(const Problem& p) {
  std::vector<std::string> diags;
  auto add = [&](const std::string& s) { diags.push_back(s); };

  const auto& ls = p.graph.lengths;
  if (ls.size() < 2) add("edge count below 2");
  for (std::size_t j = 0; j < ls.size(); ++j) {
    if (!std::isfinite(ls[j])) {
      std::ostringstream os;
      os << "nonfinite length at edge " << j;
      add(os.str());
    } else if (ls[j] <= 0.0) {
      std::ostringstream os;
      os << "nonpositive length at edge " << j;
      add(os.str());
    }
  }

  if (p.potentials.size() != ls.size()) {
    add("potential list size does not match edge count");
  }
  for (std::size_t j = 0; j < p.potentials.size(); ++j) {
    const auto& cs = p.potentials[j].coeffs;
    for (std::size_t n = 0; n < cs.size(); ++n) {
      if (!std::isfinite(cs[n].real()) || !std::isfinite(cs[n].imag())) {
        std::ostringstream os;
        os << "nonfinite coefficient at edge " << j << " mode " << (n + 1);
        add(os.str());
      }
    }
  }

  const auto& pol = p.policy;
  if (!(pol.pole_band > 0.0) || !(pol.pole_band < 1e-2))
    add("pole_band must lie in (0, 1e-2)");
  if (pol.quad_points_per_wavelength < 1)
    add("quad_points_per_wavelength must be at least 1");
  if (!(pol.newton_tol > 0.0) || !(pol.newton_tol < 1e-3))
    add("newton_tol must lie in (0, 1e-3)");
  if (pol.newton_max_iter < 1) add("newton_max_iter must be at least 1");
  if (!(pol.winding_round_tol > 0.0) || !(pol.winding_round_tol < 0.5))
    add("winding_round_tol must lie in (0, 0.5)");

  return diags;
}

struct IndependenceResult {
  bool independent = true;
  std::vector<long long> witness;  // first integer relation found, empty if none
};

// Exhaustive scan of nonzero integer vectors n with |n_j| <= max_coeff whose
// first nonzero entry is positive.  A relation means |sum n_j l_j| below
// tol * max(l).  Exponential in edge count; intended for small m.
inline IndependenceResult rational_independence_check(
    const std::vector<double>& lengths, long long max_coeff = 20,
    double tol = 1e-9) {
  const int m = int(lengths.size());
  double lmax = 0.0;
  for (double l : lengths) lmax = std::max(lmax, std::abs(l));
  const double threshold = tol * lmax;

  std::vector<long long> n(m, 0);
  IndependenceResult result;

  // Depth-first over digits; digit 0 starts at 0 to enforce canonical sign.
  auto rec = [&](auto&& self, int k, bool lead_zero, double acc) -> bool {
    if (k == m) {
      if (lead_zero) return false;  // all-zero vector
      if (std::abs(acc) < threshold) {
        result.independent = false;
        result.witness = n;
        return true;
      }
      return false;
    }
    const long long lo = lead_zero ? 0 : -max_coeff;
    for (long long v = lo; v <= max_coeff; ++v) {
      n[k] = v;
      if (self(self, k + 1, lead_zero && v == 0, acc + double(v) * lengths[k]))
        return true;
    }
    n[k] = 0;
    return false;
  };
  rec(rec, 0, true, 0.0);
  return result;
}

namespace detail {

// Mode basis sin(n pi (l-x)/l) in a split form that is exact at both ends:
// for x < l/2 rewrite as (-1)^(n+1) sin(n pi x / l).
inline double sine_mode(int n, double x, double l) {
  if (x < 0.5 * l) {
    double v = std::sin(n * kPi * x / l);
    return (n % 2 == 0) ? -v : v;
  }
  return std::sin(n * kPi * (l - x) / l);
}

}  // namespace detail

// Coefficients of the first n_modes modes from uniform samples on [0, l]
// (endpoints included), by composite trapezoid.  The sampled mode functions
// are discretely orthogonal on this grid, so inputs that already are finite
// mode sums are recovered to rounding as long as the grid resolves them.
inline EdgePotential project_to_fourier(const std::vector<cdouble>& samples,
                                        double l, int n_modes) {
  if (n_modes < 1) throw std::invalid_argument("n_modes must be at least 1");
  if (!(l > 0.0)) throw std::invalid_argument("length must be positive");
  if (int(samples.size()) < 2 * n_modes + 2)
    throw std::invalid_argument("too few samples for requested mode count");
  const int M = int(samples.size()) - 1;

  EdgePotential p;
  p.coeffs.assign(n_modes, cdouble(0.0, 0.0));
  for (int n = 1; n <= n_modes; ++n) {
    cdouble acc(0.0, 0.0);
    for (int i = 1; i < M; ++i) {
      double x = l * double(i) / M;
      acc += samples[i] * detail::sine_mode(n, x, l);
    }
    // (2/l) * h * sum; endpoint terms vanish since the basis is 0 there.
    p.coeffs[n - 1] = acc * (2.0 / M);
  }
  return p;
}

inline EdgePotential project_to_fourier(const std::vector<double>& samples,
                                        double l, int n_modes) {
  std::vector<cdouble> cs(samples.begin(), samples.end());
  return project_to_fourier(cs, l, n_modes);
}

}  // namespace stargraph
