// Command-line front end.  Verbs map one-to-one onto library operations;
// all artifacts go to --output when given, else to standard output.
//
// Exit codes: 0 success, 1 input error, 2 numerical failure.  Failures put
// one JSON object {"error": ..., "kind": "input"|"numerical"} on stderr.

#include <complex>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stargraph/characteristic.hpp"
#include "stargraph/inverse.hpp"
#include "stargraph/io.hpp"
#include "stargraph/model.hpp"
#include "stargraph/verify.hpp"
#include "stargraph/zeros.hpp"

namespace {

using stargraph::cdouble;

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
  } else {
    stargraph::write_file(out_path, content);
  }
}

// Environment override for the sampling seed, so scripted reruns can vary
// randomized checks without editing the problem file.
void apply_seed_env(stargraph::Problem& p) {
  const char* s = std::getenv("STARGRAPH_SEED");
  if (s == nullptr || *s == '\0') return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0' || s[0] == '-')
    throw std::invalid_argument("STARGRAPH_SEED must be an unsigned integer");
  p.policy.rng_seed = v;
}

stargraph::Problem load_problem_with_env(const std::string& path) {
  stargraph::Problem p = stargraph::load_problem(path);
  apply_seed_env(p);
  return p;
}

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  int count = 0;
};

// "re:a:b:n" -> n points a + (b-a)k/n, k = 1..n.  Only the real axis is
// spelled in the grid string; a constant imaginary part comes from --imag.
GridSpec parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = text.find(':', pos);
    parts.push_back(text.substr(pos, next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (parts.size() != 4 || parts[0] != "re")
    throw std::invalid_argument("grid must have the form re:start:stop:count");
  auto num = [&](const std::string& s, const char* what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0')
      throw std::invalid_argument(std::string("grid ") + what +
                                  " is not a number");
    return v;
  };
  GridSpec g;
  g.start = num(parts[1], "start");
  g.stop = num(parts[2], "stop");
  const double n = num(parts[3], "count");
  g.count = static_cast<int>(n);
  if (n != g.count || g.count < 1)
    throw std::invalid_argument("grid count must be a positive integer");
  return g;
}

int run(int argc, char** argv) {
  CLI::App app{
      "Spectral toolkit for star-graph boundary value problems with\n"
      "vertex-coupled potentials.  Problem files are JSON\n"
      "{\"lengths\":[...], \"potentials\":[{\"re\":[...],\"im\":[...]},...],"
      " \"policy\":{...}};\n"
      "STARGRAPH_SEED overrides policy.rng_seed."};
  app.require_subcommand(1);

  std::string input, output, target, graph, init, grid;
  double rmax = 0.0, imag = 0.0, fraction = 0.0, amplitude = 0.5, margin = 0.15;
  int radii = 12, order = 0, support_order = 32, max_iter = 60;
  bool real_only = true;

  auto* spectrum = app.add_subcommand(
      "spectrum", "List zeros of the characteristic function in |z| <= rmax");
  spectrum->add_option("--input", input, "problem JSON file")->required();
  spectrum->add_option("--rmax", rmax, "disk radius")->required()
      ->check(CLI::PositiveNumber);
  spectrum->add_option("--output", output, "CSV destination (default stdout)");
  spectrum->callback([&] {
    const auto p = load_problem_with_env(input);
    const auto fn = stargraph::CharacteristicFn::build(p);
    // Pad the search box so a zero sitting exactly at |z| = rmax cannot lie
    // on the counting contour; filter back to the requested disk afterwards.
    stargraph::ZeroSet inside;
    for (double pad : {1.0050731, 1.0127431}) {
      const double r = rmax * pad;
      try {
        inside = find_zeros_rect(fn, cdouble(-r, -r), cdouble(r, r));
        break;
      } catch (const stargraph::numerical_error&) {
        if (pad > 1.01) throw;
      }
    }
    stargraph::ZeroSet kept;
    for (const auto& root : inside.roots) {
      if (std::abs(root.location) > rmax + stargraph::cluster_tol(rmax))
        continue;
      kept.roots.push_back(root);
      kept.total_count += root.multiplicity;
    }
    emit(output, spectrum_to_csv(kept));
  });

  auto* chareval = app.add_subcommand(
      "char-eval", "Evaluate the characteristic function on a grid");
  chareval->add_option("--input", input, "problem JSON file")->required();
  chareval
      ->add_option("--grid", grid,
                   "re:start:stop:count, points start+(stop-start)k/count, "
                   "k=1..count")
      ->required();
  chareval->add_option("--imag", imag, "constant imaginary part of the grid");
  chareval->add_option("--output", output, "CSV destination (default stdout)");
  chareval->callback([&] {
    const auto p = load_problem_with_env(input);
    const auto fn = stargraph::CharacteristicFn::build(p);
    const GridSpec g = parse_grid(grid);
    stargraph::PhiSamples samples;
    samples.nodes.reserve(g.count);
    samples.values.reserve(g.count);
    for (int k = 1; k <= g.count; ++k) {
      const cdouble z(g.start + (g.stop - g.start) * double(k) / g.count, imag);
      samples.nodes.push_back(z);
      samples.values.push_back(fn.phi(z));
    }
    emit(output, phi_samples_to_csv(samples));
  });

  auto* density = app.add_subcommand(
      "density", "Fit the zero-counting line N(r) ~ slope*r + intercept");
  density->add_option("--input", input, "problem JSON file")->required();
  density->add_option("--rmax", rmax, "largest counting radius")->required()
      ->check(CLI::PositiveNumber);
  density->add_option("--radii", radii, "number of counting radii")
      ->check(CLI::PositiveNumber);
  density->add_option("--output", output, "JSON destination (default stdout)");
  density->callback([&] {
    const auto p = load_problem_with_env(input);
    const auto fn = stargraph::CharacteristicFn::build(p);
    emit(output, density_to_json(estimate_density(fn, rmax, radii)));
  });

  auto* invert = app.add_subcommand(
      "invert", "Recover mode coefficients from characteristic-function "
                "samples on a known graph");
  invert->add_option("--target", target, "samples CSV (re_z,im_z,re_phi,im_phi)")
      ->required();
  invert->add_option("--graph", graph,
                     "problem JSON supplying the edge lengths (its potentials "
                     "are ignored)")
      ->required();
  invert->add_option("--order", order, "modes to fit per edge")->required()
      ->check(CLI::PositiveNumber);
  invert->add_option("--init", init,
                     "problem JSON whose potentials seed the iteration "
                     "(default: zero start)");
  invert->add_flag("--real-only,!--complex", real_only,
                   "restrict coefficients to the real axis (default on)");
  invert->add_option("--max-iter", max_iter, "iteration cap")
      ->check(CLI::PositiveNumber);
  invert->add_option("--output", output, "JSON destination (default stdout)");
  invert->callback([&] {
    const auto samples = stargraph::load_phi_samples(target);
    const auto gp = load_problem_with_env(graph);
    stargraph::FitOptions opts;
    opts.real_only = real_only;
    opts.max_iter = max_iter;
    const std::vector<int> n_modes(gp.graph.lengths.size(), order);
    stargraph::FitReport report;
    if (init.empty()) {
      report = fit_potentials(samples, gp.graph, n_modes, opts);
    } else {
      const auto ip = stargraph::load_problem(init);
      if (ip.graph.lengths.size() != gp.graph.lengths.size())
        throw std::invalid_argument("init file edge count does not match graph");
      report = fit_potentials(samples, gp.graph, n_modes, opts, &ip.potentials);
    }
    emit(output, fit_report_to_json(report));
    if (!report.converged)
      throw stargraph::numerical_error("fit did not converge: " +
                                       report.stop_reason);
  });

  auto* verify = app.add_subcommand(
      "verify", "Check structural identities of the assembled problem");
  verify->add_option("--input", input, "problem JSON file")->required();
  verify->add_option("--output", output, "JSON destination (default stdout)");
  verify->callback([&] {
    const auto p = load_problem_with_env(input);
    const auto report = run_verification(p);
    emit(output, verification_to_json(report));
    if (!report.pass) {
      std::string failed;
      for (const auto& s : report.suites)
        if (!s.pass) failed += (failed.empty() ? "" : ", ") + s.name;
      throw stargraph::numerical_error("verification failed: " + failed);
    }
  });

  auto* support = app.add_subcommand(
      "support", "Estimate how far compactly supported potentials reach from "
                 "zero counts of their transforms");
  support->add_option("--input", input,
                      "problem JSON supplying lengths and policy (its "
                      "potentials are ignored)")
      ->required();
  support->add_option("--fraction", fraction,
                      "fraction of each edge the constructed bump occupies")
      ->required();
  support->add_option("--order", support_order, "projection modes per edge")
      ->check(CLI::PositiveNumber);
  support->add_option("--rmax", rmax, "largest counting radius")->required()
      ->check(CLI::PositiveNumber);
  support->add_option("--amplitude", amplitude, "bump amplitude");
  support->add_option("--margin", margin, "acceptance margin on the fraction");
  support->add_option("--output", output, "JSON destination (default stdout)");
  support->callback([&] {
    const auto p = load_problem_with_env(input);
    const auto rep = stargraph::partial_info_experiment(
        p.graph, fraction, support_order, rmax, amplitude, margin, p.policy);
    emit(output, support_report_to_json(rep));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "{\"error\": " << stargraph::detail::json_string(e.what())
              << ", \"kind\": \"input\"}\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "{\"error\": " << stargraph::detail::json_string(e.what())
              << ", \"kind\": \"input\"}\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\": " << stargraph::detail::json_string(e.what())
              << ", \"kind\": \"numerical\"}\n";
    return 2;
  }
}
