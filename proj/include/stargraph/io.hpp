#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stargraph/inverse.hpp"
#include "stargraph/model.hpp"
#include "stargraph/verify.hpp"
#include "stargraph/zeros.hpp"

// File formats.
//
// Problem JSON:   {"lengths":[...], "potentials":[{"re":[...],"im":[...]},...],
//                  "policy":{...}} with "potentials", "im" and every policy
//                  field optional.  Arrays are index-aligned with the edges.
// Samples CSV:    header re_z,im_z,re_phi,im_phi, one sample per row.
// Spectrum CSV:   header re_z,im_z,multiplicity,structural, sorted by |z|.
// Reports:        JSON objects, schemas in the writers below.
//
// Parsing is delegated to nlohmann::json; all output is written by hand so
// that numbers carry 17 significant digits (lossless double round trip) and
// key order is fixed, making reruns byte-identical.

namespace stargraph {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

inline std::string json_string(const std::string& s) {
  return "\"" + json_escape(s) + "\"";
}

template <class T, class F>
std::string json_array(const std::vector<T>& v, F&& item) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += item(v[i]);
  }
  return out + "]";
}

inline std::string json_array(const std::vector<double>& v) {
  return json_array(v, [](double x) { return format_double(x); });
}

inline std::string json_array(const std::vector<int>& v) {
  return json_array(v, [](int x) { return std::to_string(x); });
}

inline std::string json_array(const std::vector<bool>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += v[i] ? "true" : "false";
  }
  return out + "]";
}

// Reads one strict double and advances the cursor; the field must consume
// every character up to the next delimiter.
inline double csv_field(const std::string& line, std::size_t& pos, int row) {
  if (pos == std::string::npos)
    throw std::invalid_argument("too few fields in CSV row " +
                                std::to_string(row));
  const std::size_t end = std::min(line.find(',', pos), line.size());
  const std::string field = line.substr(pos, end - pos);
  const char* begin = field.c_str();
  char* stop = nullptr;
  const double v = std::strtod(begin, &stop);
  if (stop == begin || stop != begin + field.size()) {
    throw std::invalid_argument("malformed number in CSV row " +
                                std::to_string(row));
  }
  pos = (end < line.size()) ? end + 1 : std::string::npos;
  return v;
}

}  // namespace detail

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << content;
  if (!out) throw std::invalid_argument("cannot write file: " + path);
}

// ---- problem files ----------------------------------------------------

inline Problem parse_problem_json(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("problem file is not valid JSON: ") +
                                e.what());
  }
  if (!root.is_object())
    throw std::invalid_argument("problem file must be a JSON object");
  for (const auto& item : root.items()) {
    const std::string& key = item.key();
    if (key != "lengths" && key != "potentials" && key != "policy")
      throw std::invalid_argument("unknown problem field \"" + key + "\"");
  }

  Problem p;
  if (!root.contains("lengths") || !root["lengths"].is_array())
    throw std::invalid_argument("problem file needs a \"lengths\" array");
  for (const auto& v : root["lengths"]) {
    if (!v.is_number())
      throw std::invalid_argument("every length must be a number");
    p.graph.lengths.push_back(v.get<double>());
  }

  p.potentials.assign(p.graph.lengths.size(), EdgePotential{});
  if (root.contains("potentials")) {
    const auto& pots = root["potentials"];
    if (!pots.is_array())
      throw std::invalid_argument("\"potentials\" must be an array");
    if (pots.size() != p.graph.lengths.size())
      throw std::invalid_argument(
          "\"potentials\" must have one entry per edge");
    for (std::size_t j = 0; j < pots.size(); ++j) {
      const auto& entry = pots[j];
      const std::string where = "potential " + std::to_string(j);
      if (!entry.is_object())
        throw std::invalid_argument(where + " must be an object");
      for (const auto& item : entry.items()) {
        if (item.key() != "re" && item.key() != "im")
          throw std::invalid_argument("unknown field \"" + item.key() +
                                      "\" in " + where);
      }
      std::vector<double> re, im;
      auto read_axis = [&](const char* name, std::vector<double>& out) {
        if (!entry.contains(name)) return;
        if (!entry[name].is_array())
          throw std::invalid_argument(where + " \"" + name +
                                      "\" must be an array");
        for (const auto& v : entry[name]) {
          if (!v.is_number())
            throw std::invalid_argument(where + " coefficients must be numbers");
          out.push_back(v.get<double>());
        }
      };
      read_axis("re", re);
      read_axis("im", im);
      if (!im.empty() && im.size() != re.size())
        throw std::invalid_argument(where +
                                    " \"im\" must match \"re\" in length");
      auto& coeffs = p.potentials[j].coeffs;
      coeffs.resize(re.size());
      for (std::size_t n = 0; n < re.size(); ++n)
        coeffs[n] = cdouble(re[n], im.empty() ? 0.0 : im[n]);
    }
  }

  if (root.contains("policy")) {
    const auto& pol = root["policy"];
    if (!pol.is_object())
      throw std::invalid_argument("\"policy\" must be an object");
    auto number = [&](const char* name, double& out) {
      if (!pol.contains(name)) return;
      if (!pol[name].is_number())
        throw std::invalid_argument(std::string("policy \"") + name +
                                    "\" must be a number");
      out = pol[name].get<double>();
    };
    auto integer = [&](const char* name, int& out) {
      if (!pol.contains(name)) return;
      if (!pol[name].is_number_integer())
        throw std::invalid_argument(std::string("policy \"") + name +
                                    "\" must be an integer");
      out = pol[name].get<int>();
    };
    for (const auto& item : pol.items()) {
      const std::string& key = item.key();
      if (key != "pole_band" && key != "quad_points_per_wavelength" &&
          key != "newton_tol" && key != "newton_max_iter" &&
          key != "winding_round_tol" && key != "rng_seed")
        throw std::invalid_argument("unknown policy field \"" + key + "\"");
    }
    number("pole_band", p.policy.pole_band);
    integer("quad_points_per_wavelength", p.policy.quad_points_per_wavelength);
    number("newton_tol", p.policy.newton_tol);
    integer("newton_max_iter", p.policy.newton_max_iter);
    number("winding_round_tol", p.policy.winding_round_tol);
    if (pol.contains("rng_seed")) {
      if (!pol["rng_seed"].is_number_unsigned())
        throw std::invalid_argument(
            "policy \"rng_seed\" must be a nonnegative integer");
      p.policy.rng_seed = pol["rng_seed"].get<std::uint64_t>();
    }
  }

  const auto diags = validate(p);
  if (!diags.empty()) {
    std::string msg = "invalid problem:";
    for (const auto& d : diags) msg += " [" + d + "]";
    throw std::invalid_argument(msg);
  }
  return p;
}

inline Problem load_problem(const std::string& path) {
  return parse_problem_json(read_file(path));
}

inline std::string problem_to_json(const Problem& p) {
  std::string out = "{\n  \"lengths\": " + detail::json_array(p.graph.lengths);
  out += ",\n  \"potentials\": [";
  for (std::size_t j = 0; j < p.potentials.size(); ++j) {
    const auto& cs = p.potentials[j].coeffs;
    std::vector<double> re(cs.size()), im(cs.size());
    for (std::size_t n = 0; n < cs.size(); ++n) {
      re[n] = cs[n].real();
      im[n] = cs[n].imag();
    }
    if (j) out += ",";
    out += "\n    {\"re\": " + detail::json_array(re) +
           ", \"im\": " + detail::json_array(im) + "}";
  }
  out += p.potentials.empty() ? "]" : "\n  ]";
  const auto& pol = p.policy;
  out += ",\n  \"policy\": {";
  out += "\n    \"pole_band\": " + format_double(pol.pole_band);
  out += ",\n    \"quad_points_per_wavelength\": " +
         std::to_string(pol.quad_points_per_wavelength);
  out += ",\n    \"newton_tol\": " + format_double(pol.newton_tol);
  out += ",\n    \"newton_max_iter\": " + std::to_string(pol.newton_max_iter);
  out += ",\n    \"winding_round_tol\": " + format_double(pol.winding_round_tol);
  out += ",\n    \"rng_seed\": " + std::to_string(pol.rng_seed);
  out += "\n  }\n}\n";
  return out;
}

// ---- sample grids ------------------------------------------------------

inline constexpr const char* kPhiSamplesHeader = "re_z,im_z,re_phi,im_phi";

inline std::string phi_samples_to_csv(const PhiSamples& s) {
  if (s.nodes.size() != s.values.size())
    throw std::invalid_argument("samples have mismatched node/value counts");
  std::string out = std::string(kPhiSamplesHeader) + "\n";
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    out += format_double(s.nodes[i].real()) + "," +
           format_double(s.nodes[i].imag()) + "," +
           format_double(s.values[i].real()) + "," +
           format_double(s.values[i].imag()) + "\n";
  }
  return out;
}

inline PhiSamples parse_phi_samples_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("samples CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPhiSamplesHeader)
    throw std::invalid_argument(std::string("samples CSV must start with ") +
                                kPhiSamplesHeader);
  PhiSamples s;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t pos = 0;
    const double re_z = detail::csv_field(line, pos, row);
    const double im_z = detail::csv_field(line, pos, row);
    const double re_phi = detail::csv_field(line, pos, row);
    const double im_phi = detail::csv_field(line, pos, row);
    if (pos != std::string::npos)
      throw std::invalid_argument("too many fields in CSV row " +
                                  std::to_string(row));
    s.nodes.emplace_back(re_z, im_z);
    s.values.emplace_back(re_phi, im_phi);
  }
  return s;
}

inline PhiSamples load_phi_samples(const std::string& path) {
  return parse_phi_samples_csv(read_file(path));
}

// ---- reports -----------------------------------------------------------

inline std::string spectrum_to_csv(const ZeroSet& zs) {
  std::vector<Root> roots = zs.roots;
  std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) {
    const double ma = std::abs(a.location), mb = std::abs(b.location);
    if (ma != mb) return ma < mb;
    if (a.location.real() != b.location.real())
      return a.location.real() < b.location.real();
    return a.location.imag() < b.location.imag();
  });
  std::string out = "re_z,im_z,multiplicity,structural\n";
  for (const auto& r : roots) {
    out += format_double(r.location.real()) + "," +
           format_double(r.location.imag()) + "," +
           std::to_string(r.multiplicity) + "," +
           (r.structural ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string density_to_json(const DensityFit& fit) {
  std::string out = "{\n";
  out += "  \"slope\": " + format_double(fit.slope);
  out += ",\n  \"intercept\": " + format_double(fit.intercept);
  out += ",\n  \"residual\": " + format_double(fit.residual);
  out += ",\n  \"radii\": " + detail::json_array(fit.radii);
  out += ",\n  \"counts\": " + detail::json_array(fit.counts_ev);
  out += "\n}\n";
  return out;
}

inline std::string fit_report_to_json(const FitReport& r) {
  std::string out = "{\n";
  out += std::string("  \"converged\": ") + (r.converged ? "true" : "false");
  out += ",\n  \"iterations\": " + std::to_string(r.iterations);
  out += ",\n  \"final_residual\": " + format_double(r.final_residual);
  out += ",\n  \"fit_tol\": " + format_double(r.fit_tol);
  out += ",\n  \"stop_reason\": " + detail::json_string(r.stop_reason);
  out += ",\n  \"residual_history\": " + detail::json_array(r.residual_history);
  std::istringstream rec(problem_to_json(r.recovered));
  out += ",\n  \"recovered\": ";
  std::string line;
  bool first = true;
  while (std::getline(rec, line)) {
    if (!first) out += "\n  ";
    out += line;
    first = false;
  }
  out += "\n}\n";
  return out;
}

inline std::string verification_to_json(const VerificationReport& r) {
  std::string out = "{\n";
  out += std::string("  \"pass\": ") + (r.pass ? "true" : "false");
  out += ",\n  \"suites\": {";
  for (std::size_t i = 0; i < r.suites.size(); ++i) {
    const auto& s = r.suites[i];
    if (i) out += ",";
    out += "\n    " + detail::json_string(s.name) + ": {";
    out += std::string("\"pass\": ") + (s.pass ? "true" : "false");
    out += ", \"checks\": " + std::to_string(s.checks);
    out += ", \"worst\": " + format_double(s.worst);
    out += ", \"tolerance\": " + format_double(s.tolerance) + "}";
  }
  out += "\n  }\n}\n";
  return out;
}

inline std::string support_report_to_json(const PartialInfoReport& r) {
  std::string out = "{\n";
  out += "  \"support_fraction\": " + format_double(r.support_fraction);
  out += ",\n  \"margin\": " + format_double(r.margin);
  out += ",\n  \"amplitude\": " + format_double(r.amplitude);
  out += ",\n  \"r_max\": " + format_double(r.r_max);
  out += ",\n  \"extents\": " + detail::json_array(r.extents);
  out += ",\n  \"extent_targets\": " + detail::json_array(r.extent_targets);
  out += ",\n  \"extent_errors\": " + detail::json_array(r.extent_errors);
  out += ",\n  \"within_margin\": " + detail::json_array(r.within_margin);
  out += std::string(",\n  \"sparse\": ") + (r.sparse ? "true" : "false");
  out += std::string(",\n  \"inconclusive\": ") +
         (r.inconclusive ? "true" : "false");
  out += ",\n  \"note\": " + detail::json_string(r.note);
  out += "\n}\n";
  return out;
}

}  // namespace stargraph
