#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stargraph/characteristic.hpp"
#include "stargraph/inverse.hpp"
#include "stargraph/io.hpp"
#include "stargraph/model.hpp"
#include "stargraph/verify.hpp"
#include "stargraph/zeros.hpp"

using stargraph::cdouble;
using stargraph::PhiSamples;
using stargraph::Problem;

namespace {

// A two-edge problem with incommensurate lengths and nonzero coefficients,
// used across the round-trip tests.
const char* kProblemJson = R"({
  "lengths": [1.0, 1.4142135623730951],
  "potentials": [{"re": [0.12, -0.08, 0.2]}, {"re": [-0.15, 0.1, 0.05]}],
  "policy": {"rng_seed": 77}
})";

std::string cli_path() {
  const char* p = std::getenv("STARGRAPH_CLI");
  return (p != nullptr && *p != '\0') ? std::string(p) : std::string();
}

struct TempDir {
  std::string path;
  TempDir() {
    char tmpl[] = "/tmp/sgcli-XXXXXX";
    char* made = mkdtemp(tmpl);
    REQUIRE(made != nullptr);
    path = made;
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const TempDir& dir, const std::string& args,
                  const std::string& env_prefix = "") {
  const std::string out_file = dir.file("run.stdout");
  const std::string err_file = dir.file("run.stderr");
  const std::string cmd = env_prefix + (env_prefix.empty() ? "" : " ") +
                          cli_path() + " " + args + " >" + out_file + " 2>" +
                          err_file;
  const int status = std::system(cmd.c_str());
  RunResult r;
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  r.exit_code = WEXITSTATUS(status);
  r.out = stargraph::read_file(out_file);
  r.err = stargraph::read_file(err_file);
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

TEST_CASE("problem JSON applies defaults and survives a round trip") {
  const Problem minimal = stargraph::parse_problem_json(R"({"lengths":[1,1]})");
  REQUIRE(minimal.graph.edge_count() == 2);
  REQUIRE(minimal.potentials.size() == 2);
  REQUIRE(minimal.potentials[0].order() == 0);
  REQUIRE(minimal.policy.pole_band == 1e-6);
  REQUIRE(minimal.policy.quad_points_per_wavelength == 8);
  REQUIRE(minimal.policy.newton_tol == 1e-12);
  REQUIRE(minimal.policy.newton_max_iter == 50);
  REQUIRE(minimal.policy.winding_round_tol == 0.1);
  REQUIRE(minimal.policy.rng_seed == 12345);

  const Problem p = stargraph::parse_problem_json(R"({
    "lengths": [1.0, 0.75],
    "potentials": [{"re": [0.1, -0.2], "im": [0.01, 0.02]}, {"re": [0.3]}],
    "policy": {"pole_band": 1e-7, "quad_points_per_wavelength": 12,
               "newton_tol": 1e-11, "newton_max_iter": 25,
               "winding_round_tol": 0.2, "rng_seed": 9}
  })");
  REQUIRE(p.potentials[0].coeffs[1] == cdouble(-0.2, 0.02));
  REQUIRE(p.potentials[1].coeffs[0] == cdouble(0.3, 0.0));  // im defaulted
  REQUIRE(p.policy.pole_band == 1e-7);
  REQUIRE(p.policy.quad_points_per_wavelength == 12);
  REQUIRE(p.policy.newton_tol == 1e-11);
  REQUIRE(p.policy.newton_max_iter == 25);
  REQUIRE(p.policy.winding_round_tol == 0.2);
  REQUIRE(p.policy.rng_seed == 9);

  const Problem q = stargraph::parse_problem_json(stargraph::problem_to_json(p));
  REQUIRE(q.graph.lengths == p.graph.lengths);
  for (int j = 0; j < 2; ++j)
    REQUIRE(q.potentials[j].coeffs == p.potentials[j].coeffs);
  REQUIRE(q.policy.pole_band == p.policy.pole_band);
  REQUIRE(q.policy.rng_seed == p.policy.rng_seed);
}

TEST_CASE("problem JSON rejects malformed input with specific messages") {
  auto rejects = [](const char* text, const char* fragment) {
    REQUIRE_THROWS_MATCHES(
        stargraph::parse_problem_json(text), std::invalid_argument,
        Catch::Matchers::MessageMatches(
            Catch::Matchers::ContainsSubstring(fragment)));
  };
  rejects("not json", "not valid JSON");
  rejects("[1, 2]", "must be a JSON object");
  rejects(R"({"potentials": []})", "\"lengths\" array");
  rejects(R"({"lengths": [1, "x"]})", "must be a number");
  rejects(R"({"lengths": [1, 1], "lenghts": [1]})", "unknown problem field");
  rejects(R"({"lengths": [1, 1], "potentials": [{}]})", "one entry per edge");
  rejects(R"({"lengths": [1, 1], "potentials": [3, 4]})", "must be an object");
  rejects(R"({"lengths": [1, 1], "potentials": [{"re": [1], "imag": [0]}, {}]})",
          "unknown field \"imag\"");
  rejects(R"({"lengths": [1, 1], "potentials": [{"re": [1], "im": [0, 0]}, {}]})",
          "must match \"re\"");
  rejects(R"({"lengths": [1, 1], "policy": {"seed": 1}})",
          "unknown policy field");
  rejects(R"({"lengths": [1, 1], "policy": {"rng_seed": -1}})",
          "nonnegative integer");
  rejects(R"({"lengths": [1, 1], "policy": {"newton_max_iter": 2.5}})",
          "must be an integer");
  rejects(R"({"lengths": [1]})", "edge count below 2");
  rejects(R"({"lengths": [1, -1]})", "nonpositive length");
}

TEST_CASE("seventeen-digit number formatting round-trips doubles exactly") {
  const double values[] = {1.0 / 3.0,     stargraph::kPi, 1e-300, 6.02214076e23,
                           -0.1,          5e-324,         0.0,    123456789.123,
                           -2.718281828e5};
  for (double v : values) {
    const std::string text = stargraph::format_double(v);
    char* end = nullptr;
    const double back = std::strtod(text.c_str(), &end);
    REQUIRE(*end == '\0');
    REQUIRE(back == v);
  }
  REQUIRE(std::signbit(std::strtod(
      stargraph::format_double(-0.0).c_str(), nullptr)));
}

TEST_CASE("samples CSV round-trips bitwise and rejects malformed rows") {
  PhiSamples s;
  s.nodes = {cdouble(1.0 / 3.0, -2e-17), cdouble(0.0, 4.75),
             cdouble(-1e300, 1e-300)};
  s.values = {cdouble(stargraph::kPi, -1.0), cdouble(5e-324, 0.0),
              cdouble(-0.125, 7.7)};
  const std::string csv = stargraph::phi_samples_to_csv(s);
  REQUIRE(lines_of(csv)[0] == std::string(stargraph::kPhiSamplesHeader));

  const PhiSamples back = stargraph::parse_phi_samples_csv(csv);
  REQUIRE(back.nodes == s.nodes);
  REQUIRE(back.values == s.values);

  // Carriage returns and blank lines are tolerated; anything else is not.
  const PhiSamples crlf = stargraph::parse_phi_samples_csv(
      "re_z,im_z,re_phi,im_phi\r\n1,2,3,4\r\n\r\n");
  REQUIRE(crlf.nodes == std::vector<cdouble>{cdouble(1.0, 2.0)});

  PhiSamples bad = s;
  bad.values.pop_back();
  REQUIRE_THROWS_AS(stargraph::phi_samples_to_csv(bad), std::invalid_argument);
  REQUIRE_THROWS_AS(stargraph::parse_phi_samples_csv(""), std::invalid_argument);
  REQUIRE_THROWS_AS(stargraph::parse_phi_samples_csv("re_z,im_z\n1,2\n"),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(stargraph::parse_phi_samples_csv(
                        "re_z,im_z,re_phi,im_phi\n1,2,3\n"),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(stargraph::parse_phi_samples_csv(
                        "re_z,im_z,re_phi,im_phi\n1,2,3,4,5\n"),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(stargraph::parse_phi_samples_csv(
                        "re_z,im_z,re_phi,im_phi\n1,2,x,4\n"),
                    std::invalid_argument);
}

TEST_CASE("spectrum CSV sorts by magnitude and flags the structural zero") {
  stargraph::ZeroSet zs;
  zs.roots.push_back({cdouble(1.5, 0.0), 1, false});
  zs.roots.push_back({cdouble(0.0, 0.0), 2, true});
  zs.roots.push_back({cdouble(-1.5, 0.0), 1, false});
  zs.roots.push_back({cdouble(0.0, 0.5), 1, false});
  const auto rows = lines_of(stargraph::spectrum_to_csv(zs));
  REQUIRE(rows.size() == 5);
  REQUIRE(rows[0] == "re_z,im_z,multiplicity,structural");
  REQUIRE(rows[1] == "0,0,2,1");
  REQUIRE(rows[2] == "0,0.5,1,0");
  REQUIRE(rows[3] == "-1.5,0,1,0");
  REQUIRE(rows[4] == "1.5,0,1,0");
}

TEST_CASE("verification runs four suites and passes on a sound problem") {
  const Problem p = stargraph::parse_problem_json(kProblemJson);
  const auto report = stargraph::run_verification(p);
  REQUIRE(report.pass);
  REQUIRE(report.suites.size() == 4);
  const char* names[] = {"identity", "parity", "reality", "nonlocal-residual"};
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(report.suites[i].name == names[i]);
    REQUIRE(report.suites[i].pass);
    REQUIRE(report.suites[i].worst <= report.suites[i].tolerance);
    REQUIRE(report.suites[i].checks >= 32);
  }
  REQUIRE(report.suites[0].checks == 64);  // 32 samples per edge

  // Deterministic given the seed, and the JSON rendering is valid JSON.
  const auto again = stargraph::run_verification(p);
  for (std::size_t i = 0; i < 4; ++i)
    REQUIRE(again.suites[i].worst == report.suites[i].worst);
  const auto parsed =
      nlohmann::json::parse(stargraph::verification_to_json(report));
  REQUIRE(parsed["pass"].get<bool>());
  REQUIRE(parsed["suites"].size() == 4);
  REQUIRE(parsed["suites"]["nonlocal-residual"]["checks"].get<int>() == 200);
}

TEST_CASE("cli char-eval matches the library bitwise and feeds invert") {
  if (cli_path().empty()) {
    WARN("STARGRAPH_CLI not set; skipping CLI end-to-end checks");
    return;
  }
  TempDir dir;
  stargraph::write_file(dir.file("p.json"), kProblemJson);

  const auto eval = run_cli(dir, "char-eval --input " + dir.file("p.json") +
                                     " --grid re:0:12:120 --output " +
                                     dir.file("phi.csv"));
  REQUIRE(eval.exit_code == 0);

  const Problem p = stargraph::parse_problem_json(kProblemJson);
  const auto fn = stargraph::CharacteristicFn::build(p);
  const PhiSamples got = stargraph::load_phi_samples(dir.file("phi.csv"));
  REQUIRE(got.nodes.size() == 120);
  for (int k = 1; k <= 120; ++k) {
    const cdouble z(0.0 + (12.0 - 0.0) * double(k) / 120, 0.0);
    REQUIRE(got.nodes[k - 1] == z);
    REQUIRE(got.values[k - 1] == fn.phi(z));  // lossless writer, exact match
  }

  // Byte-identical rerun.
  const auto rerun = run_cli(dir, "char-eval --input " + dir.file("p.json") +
                                      " --grid re:0:12:120 --output " +
                                      dir.file("phi2.csv"));
  REQUIRE(rerun.exit_code == 0);
  REQUIRE(stargraph::read_file(dir.file("phi2.csv")) ==
          stargraph::read_file(dir.file("phi.csv")));

  const auto fit = run_cli(dir, "invert --target " + dir.file("phi.csv") +
                                    " --graph " + dir.file("p.json") +
                                    " --order 3 --output " + dir.file("f.json"));
  REQUIRE(fit.exit_code == 0);
  const auto report =
      nlohmann::json::parse(stargraph::read_file(dir.file("f.json")));
  REQUIRE(report["converged"].get<bool>());
  REQUIRE(report["final_residual"].get<double>() <=
          report["fit_tol"].get<double>());
  const auto& pots = report["recovered"]["potentials"];
  const double truth[2][3] = {{0.12, -0.08, 0.2}, {-0.15, 0.1, 0.05}};
  for (int j = 0; j < 2; ++j)
    for (int n = 0; n < 3; ++n) {
      REQUIRE(pots[j]["re"][n].get<double>() ==
              Catch::Approx(truth[j][n]).margin(1e-7));
      REQUIRE(pots[j]["im"][n].get<double>() == 0.0);
    }
}

TEST_CASE("cli spectrum lists the commensurate free spectrum") {
  if (cli_path().empty()) {
    WARN("STARGRAPH_CLI not set; skipping CLI end-to-end checks");
    return;
  }
  TempDir dir;
  stargraph::write_file(dir.file("free.json"), R"({"lengths": [1, 1]})");
  const auto run =
      run_cli(dir, "spectrum --input " + dir.file("free.json") + " --rmax 5");
  REQUIRE(run.exit_code == 0);
  const auto rows = lines_of(run.out);
  REQUIRE(rows[0] == "re_z,im_z,multiplicity,structural");
  REQUIRE(rows.size() == 8);  // origin plus +-k pi/2 for k = 1..3
  REQUIRE(rows[1] == "0,0,2,1");
  double previous = 0.0;
  for (std::size_t i = 2; i < rows.size(); ++i) {
    const PhiSamples row = stargraph::parse_phi_samples_csv(
        std::string(stargraph::kPhiSamplesHeader) + "\n" + rows[i] + "\n");
    const cdouble z = row.nodes[0];
    const double k = std::round(std::abs(z) / (stargraph::kPi / 2.0));
    REQUIRE(std::abs(std::abs(z) - k * stargraph::kPi / 2.0) <= 1e-9);
    REQUIRE(std::abs(z.imag()) <= 1e-9);
    REQUIRE(std::abs(z) >= previous - 1e-12);  // sorted by magnitude
    previous = std::abs(z);
  }
}

TEST_CASE("cli density emits the pinned report shape") {
  if (cli_path().empty()) {
    WARN("STARGRAPH_CLI not set; skipping CLI end-to-end checks");
    return;
  }
  TempDir dir;
  stargraph::write_file(dir.file("free.json"), R"({"lengths": [1, 1]})");
  const auto run = run_cli(dir, "density --input " + dir.file("free.json") +
                                    " --rmax 40 --radii 5");
  REQUIRE(run.exit_code == 0);
  const auto doc = nlohmann::json::parse(run.out);
  REQUIRE(doc.size() == 5);
  for (const char* key : {"slope", "intercept", "residual", "radii", "counts"})
    REQUIRE(doc.contains(key));
  REQUIRE(doc["radii"].size() == 5);
  REQUIRE(doc["counts"].size() == 5);
  const double slope = doc["slope"].get<double>();
  const double want = 2.0 / stargraph::kPi;
  REQUIRE(std::abs(slope - want) <= 0.05 * want);
}

TEST_CASE("cli verify honors the seed override and stays deterministic") {
  if (cli_path().empty()) {
    WARN("STARGRAPH_CLI not set; skipping CLI end-to-end checks");
    return;
  }
  TempDir dir;
  stargraph::write_file(dir.file("p.json"), kProblemJson);
  const std::string args = "verify --input " + dir.file("p.json");

  const auto a = run_cli(dir, args);
  REQUIRE(a.exit_code == 0);
  const auto doc = nlohmann::json::parse(a.out);
  REQUIRE(doc["pass"].get<bool>());
  for (const char* name : {"identity", "parity", "reality", "nonlocal-residual"})
    REQUIRE(doc["suites"][name]["pass"].get<bool>());

  const auto b = run_cli(dir, args);
  REQUIRE(b.out == a.out);  // same seed, same bytes

  const auto c = run_cli(dir, args, "STARGRAPH_SEED=999");
  REQUIRE(c.exit_code == 0);
  REQUIRE(c.out != a.out);  // different samples, different worst deviations

  const auto d = run_cli(dir, args, "STARGRAPH_SEED=twelve");
  REQUIRE(d.exit_code == 1);
  REQUIRE(d.err.find("\"kind\": \"input\"") != std::string::npos);
}

TEST_CASE("cli failures exit with coded JSON diagnostics") {
  if (cli_path().empty()) {
    WARN("STARGRAPH_CLI not set; skipping CLI end-to-end checks");
    return;
  }
  TempDir dir;

  const auto missing =
      run_cli(dir, "spectrum --input " + dir.file("nope.json") + " --rmax 5");
  REQUIRE(missing.exit_code == 1);
  REQUIRE(missing.err.find("\"kind\": \"input\"") != std::string::npos);
  REQUIRE(missing.err.find("cannot read file") != std::string::npos);

  stargraph::write_file(dir.file("one.json"), R"({"lengths": [1]})");
  const auto invalid =
      run_cli(dir, "verify --input " + dir.file("one.json"));
  REQUIRE(invalid.exit_code == 1);
  REQUIRE(invalid.err.find("edge count below 2") != std::string::npos);

  const auto badflag = run_cli(dir, "spectrum --radius 5");
  REQUIRE(badflag.exit_code == 1);
  REQUIRE(badflag.err.find("\"kind\": \"input\"") != std::string::npos);

  // A fit cut off after one step must report failure loudly: exit 2, a
  // numerical diagnostic, and converged=false in the report it still wrote.
  stargraph::write_file(dir.file("p.json"), kProblemJson);
  auto eval = run_cli(dir, "char-eval --input " + dir.file("p.json") +
                               " --grid re:0:12:120 --output " +
                               dir.file("phi.csv"));
  REQUIRE(eval.exit_code == 0);
  const auto stuck = run_cli(dir, "invert --target " + dir.file("phi.csv") +
                                      " --graph " + dir.file("p.json") +
                                      " --order 3 --max-iter 1 --output " +
                                      dir.file("f.json"));
  REQUIRE(stuck.exit_code == 2);
  REQUIRE(stuck.err.find("\"kind\": \"numerical\"") != std::string::npos);
  const auto report =
      nlohmann::json::parse(stargraph::read_file(dir.file("f.json")));
  REQUIRE_FALSE(report["converged"].get<bool>());
}

TEST_CASE("cli support reports the compact-support experiment") {
  if (cli_path().empty()) {
    WARN("STARGRAPH_CLI not set; skipping CLI end-to-end checks");
    return;
  }
  TempDir dir;
  stargraph::write_file(dir.file("g.json"), R"({"lengths": [1.0, 0.9]})");
  const auto run = run_cli(
      dir, "support --input " + dir.file("g.json") +
               " --fraction 0.5 --order 32 --rmax 25 --amplitude 1.0");
  REQUIRE(run.exit_code == 0);
  const auto doc = nlohmann::json::parse(run.out);
  REQUIRE(doc["support_fraction"].get<double>() == 0.5);
  REQUIRE(doc["extents"].size() == 2);
  REQUIRE(doc["extent_targets"][0].get<double>() == 0.5);
  REQUIRE(doc["within_margin"].size() == 2);
  REQUIRE(doc["sparse"].get<bool>());
  REQUIRE(doc["inconclusive"].get<bool>());
  REQUIRE_FALSE(doc["note"].get<std::string>().empty());
}
