#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "colbreak/kernels.hpp"
#include "colbreak/mesh.hpp"
#include "colbreak/solver.hpp"
#include "colbreak/verification.hpp"

namespace colbreak {

struct VerifyToggles {
  bool operator_oracle = true;
  bool mass_law = true;
  bool moment_bounds = true;
  bool uniform_bound = true;
  bool equicontinuity = true;
  bool continuous_dependence = true;
  bool tail_bound = true;
  bool mass_conservation = false;  // refinement study; costly, off by default
  double z_o = 10.0;
  double perturbation = 0.01;
};

// Flat sectioned key-value run description. Every key is optional; the
// defaults reproduce the standard scenario (c = 1, alpha = alpha' = 1/2,
// constant efficiency 1/2, g0 = exp(-z), geometric 256-cell mesh on
// [1e-4, 50], sigma1 = 1/2, sigma2 = 3/2, T = 1).
struct RunConfig {
  // [kernel]
  double c = 1.0;
  double alpha = 0.5;
  double alpha_prime = 0.5;
  double theta = 0.0;
  std::string efficiency = "constant";  // constant | ratio_bounded | pure_coagulation
  double e0 = 0.5;
  // [mesh]
  double z_min = 1e-4;
  double n = 50.0;
  std::size_t cells = 256;
  std::string kind = "geometric";  // geometric | uniform
  // [space]
  double sigma1 = 0.5;
  double sigma2 = 1.5;
  // [init]
  std::string variant = "exponential";  // exponential | power_exp | monodisperse
  double amplitude = 1.0;
  double decay = 1.0;
  double power = 0.25;
  double z0 = 1.0;
  double width = 0.1;
  // [solver]
  SolverConfig solver;
  // [verify]
  VerifyToggles verify;
  // [output]
  std::string dir = "out";

  /// Every violated constraint, not just the first.
  std::vector<std::string> violations() const {
    std::vector<std::string> v;
    if (!(c >= 0.0)) v.push_back("c must be >= 0");
    if (!(alpha > 0.0 && alpha <= 0.5)) v.push_back("alpha must lie in (0, 1/2]");
    if (!(alpha_prime > 0.0 && alpha_prime <= 0.5))
      v.push_back("alpha_prime must lie in (0, 1/2]");
    if (!(theta >= 0.0)) v.push_back("theta must be >= 0");
    if (efficiency != "constant" && efficiency != "ratio_bounded" &&
        efficiency != "pure_coagulation")
      v.push_back("efficiency must be one of constant, ratio_bounded, "
                  "pure_coagulation");
    if (!(e0 >= 0.0 && e0 <= 1.0)) v.push_back("e0 must lie in [0, 1]");

    if (!(z_min > 0.0)) v.push_back("z_min must be positive");
    if (!(n > z_min)) v.push_back("n must exceed z_min");
    if (cells < 8) v.push_back("cells must be >= 8");
    if (kind != "geometric" && kind != "uniform")
      v.push_back("mesh kind must be geometric or uniform");

    if (!(sigma1 >= 0.5 && sigma1 < 1.0)) v.push_back("sigma1 must lie in [1/2, 1)");
    if (!(sigma2 > 1.0 && sigma2 <= 2.0)) v.push_back("sigma2 must lie in (1, 2]");
    const bool alpha_ok = (alpha > 0.0 && alpha <= 0.5) &&
                          (alpha_prime > 0.0 && alpha_prime <= 0.5);
    if (alpha_ok && sigma2 < std::max(1.0 + alpha, 1.0 + alpha_prime))
      v.push_back("sigma2 < 1+alpha violates the well-posedness restriction "
                  "1 < max{1+alpha, 1+alpha_prime} <= sigma2 <= 2");
    if (alpha_ok && sigma1 < std::max(1.0 - alpha, 1.0 - alpha_prime))
      v.push_back("sigma1 violates the well-posedness restriction "
                  "1/2 <= max{(1-alpha),(1-alpha_prime)} <= sigma1 < 1");

    if (variant != "exponential" && variant != "power_exp" &&
        variant != "monodisperse")
      v.push_back("init variant must be one of exponential, power_exp, "
                  "monodisperse");
    if (!(amplitude >= 0.0)) v.push_back("amplitude must be >= 0");
    if (!(decay > 0.0)) v.push_back("decay must be positive");
    if (variant == "power_exp" && !(power >= 0.0 && power < sigma1))
      v.push_back("power must satisfy 0 <= power < sigma1");
    if (variant == "monodisperse") {
      if (!(z0 > 0.0)) v.push_back("z0 must be positive");
      if (!(width > 0.0)) v.push_back("width must be positive");
    }

    if (!(solver.t_end >= 0.0)) v.push_back("t_end must be >= 0");
    if (!(solver.dt_init > 0.0)) v.push_back("dt_init must be positive");
    if (!(solver.dt_max > 0.0)) v.push_back("dt_max must be positive");
    if (!(solver.safety > 0.0 && solver.safety < 1.0))
      v.push_back("safety must lie in (0, 1)");
    if (!(solver.tol_step > 0.0)) v.push_back("tol_step must be positive");
    if (!(solver.negativity_tol > 0.0))
      v.push_back("negativity_tol must be positive");
    if (solver.record_every < 1) v.push_back("record_every must be >= 1");

    if (!(verify.z_o > 0.0) || !(verify.z_o <= n))
      v.push_back("z_o must lie in (0, n]");
    if (!(verify.perturbation >= 0.0)) v.push_back("perturbation must be >= 0");
    if (dir.empty()) v.push_back("output dir must not be empty");
    return v;
  }

  EfficiencyModel make_efficiency() const {
    if (efficiency == "ratio_bounded") return EfficiencyModel::ratio_bounded();
    if (efficiency == "pure_coagulation")
      return EfficiencyModel::pure_coagulation();
    return EfficiencyModel::constant(e0);
  }

  KernelSpec make_kernel() const {
    return KernelSpec::parametric(c, alpha, alpha_prime, make_efficiency(), theta);
  }

  std::shared_ptr<const Mesh> make_mesh() const {
    return build_mesh(z_min, n, cells,
                      kind == "uniform" ? MeshKind::Uniform : MeshKind::Geometric);
  }

  SpaceParams make_space() const { return SpaceParams{sigma1, sigma2}; }

  InitialDatum make_init() const {
    if (variant == "power_exp")
      return InitialDatum::power_exp(amplitude, power, decay);
    if (variant == "monodisperse")
      return InitialDatum::monodisperse(amplitude, z0, width);
    return InitialDatum::exponential(amplitude, decay);
  }
};

struct ParseResult {
  std::optional<RunConfig> config;
  std::vector<std::string> errors;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

inline bool parse_size(const std::string& s, std::size_t& out) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size() || v < 0) return false;
    out = static_cast<std::size_t>(v);
    return true;
  } catch (...) {
    return false;
  }
}

inline bool parse_bool(const std::string& s, bool& out) {
  if (s == "true" || s == "1" || s == "on" || s == "yes") { out = true; return true; }
  if (s == "false" || s == "0" || s == "off" || s == "no") { out = false; return true; }
  return false;
}

inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses the sectioned key-value format. Returns either a fully validated
/// config or the complete list of violations and parse errors.
inline ParseResult parse_config(const std::string& text) {
  ParseResult result;
  RunConfig cfg;
  std::vector<std::string>& errors = result.errors;

  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back("line " + std::to_string(lineno) + ": malformed section header");
        continue;
      }
      section = line.substr(1, line.size() - 2);
      if (section != "kernel" && section != "mesh" && section != "space" &&
          section != "init" && section != "solver" && section != "verify" &&
          section != "output")
        errors.push_back("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected key=value");
      continue;
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));

    auto want_double = [&](double& field) {
      double d;
      if (detail::parse_double(value, d)) field = d;
      else errors.push_back("key '" + key + "': '" + value + "' is not a number");
    };
    auto want_size = [&](std::size_t& field) {
      std::size_t s;
      if (detail::parse_size(value, s)) field = s;
      else errors.push_back("key '" + key + "': '" + value +
                            "' is not a nonnegative integer");
    };
    auto want_bool = [&](bool& field) {
      bool b;
      if (detail::parse_bool(value, b)) field = b;
      else errors.push_back("key '" + key + "': '" + value + "' is not a boolean");
    };
    auto unknown = [&] {
      errors.push_back("unknown key '" + key + "' in section [" + section + "]");
    };

    if (section == "kernel") {
      if (key == "c") want_double(cfg.c);
      else if (key == "alpha") want_double(cfg.alpha);
      else if (key == "alpha_prime") want_double(cfg.alpha_prime);
      else if (key == "theta") want_double(cfg.theta);
      else if (key == "efficiency") cfg.efficiency = value;
      else if (key == "e0") want_double(cfg.e0);
      else unknown();
    } else if (section == "mesh") {
      if (key == "z_min") want_double(cfg.z_min);
      else if (key == "n") want_double(cfg.n);
      else if (key == "cells") want_size(cfg.cells);
      else if (key == "kind") cfg.kind = value;
      else unknown();
    } else if (section == "space") {
      if (key == "sigma1") want_double(cfg.sigma1);
      else if (key == "sigma2") want_double(cfg.sigma2);
      else unknown();
    } else if (section == "init") {
      if (key == "variant") cfg.variant = value;
      else if (key == "amplitude") want_double(cfg.amplitude);
      else if (key == "decay") want_double(cfg.decay);
      else if (key == "power") want_double(cfg.power);
      else if (key == "z0") want_double(cfg.z0);
      else if (key == "width") want_double(cfg.width);
      else unknown();
    } else if (section == "solver") {
      if (key == "t_end") want_double(cfg.solver.t_end);
      else if (key == "dt_init") want_double(cfg.solver.dt_init);
      else if (key == "dt_max") want_double(cfg.solver.dt_max);
      else if (key == "safety") want_double(cfg.solver.safety);
      else if (key == "tol_step") want_double(cfg.solver.tol_step);
      else if (key == "negativity_tol") want_double(cfg.solver.negativity_tol);
      else if (key == "record_every") want_size(cfg.solver.record_every);
      else unknown();
    } else if (section == "verify") {
      if (key == "operator_oracle") want_bool(cfg.verify.operator_oracle);
      else if (key == "mass_law") want_bool(cfg.verify.mass_law);
      else if (key == "moment_bounds") want_bool(cfg.verify.moment_bounds);
      else if (key == "uniform_bound") want_bool(cfg.verify.uniform_bound);
      else if (key == "equicontinuity") want_bool(cfg.verify.equicontinuity);
      else if (key == "continuous_dependence")
        want_bool(cfg.verify.continuous_dependence);
      else if (key == "tail_bound") want_bool(cfg.verify.tail_bound);
      else if (key == "mass_conservation") want_bool(cfg.verify.mass_conservation);
      else if (key == "z_o") want_double(cfg.verify.z_o);
      else if (key == "perturbation") want_double(cfg.verify.perturbation);
      else unknown();
    } else if (section == "output") {
      if (key == "dir") cfg.dir = value;
      else unknown();
    } else {
      errors.push_back("key '" + key + "' appears before any section header");
    }
  }

  for (const std::string& v : cfg.violations()) errors.push_back(v);
  if (errors.empty()) result.config = cfg;
  return result;
}

/// Canonical re-emission; parse(emit(cfg)) reproduces cfg exactly.
inline std::string emit_config(const RunConfig& cfg) {
  using detail::g17;
  std::ostringstream out;
  out << "[kernel]\n"
      << "c = " << g17(cfg.c) << "\n"
      << "alpha = " << g17(cfg.alpha) << "\n"
      << "alpha_prime = " << g17(cfg.alpha_prime) << "\n"
      << "theta = " << g17(cfg.theta) << "\n"
      << "efficiency = " << cfg.efficiency << "\n"
      << "e0 = " << g17(cfg.e0) << "\n"
      << "[mesh]\n"
      << "z_min = " << g17(cfg.z_min) << "\n"
      << "n = " << g17(cfg.n) << "\n"
      << "cells = " << cfg.cells << "\n"
      << "kind = " << cfg.kind << "\n"
      << "[space]\n"
      << "sigma1 = " << g17(cfg.sigma1) << "\n"
      << "sigma2 = " << g17(cfg.sigma2) << "\n"
      << "[init]\n"
      << "variant = " << cfg.variant << "\n"
      << "amplitude = " << g17(cfg.amplitude) << "\n"
      << "decay = " << g17(cfg.decay) << "\n"
      << "power = " << g17(cfg.power) << "\n"
      << "z0 = " << g17(cfg.z0) << "\n"
      << "width = " << g17(cfg.width) << "\n"
      << "[solver]\n"
      << "t_end = " << g17(cfg.solver.t_end) << "\n"
      << "dt_init = " << g17(cfg.solver.dt_init) << "\n"
      << "dt_max = " << g17(cfg.solver.dt_max) << "\n"
      << "safety = " << g17(cfg.solver.safety) << "\n"
      << "tol_step = " << g17(cfg.solver.tol_step) << "\n"
      << "negativity_tol = " << g17(cfg.solver.negativity_tol) << "\n"
      << "record_every = " << cfg.solver.record_every << "\n"
      << "[verify]\n"
      << "operator_oracle = " << (cfg.verify.operator_oracle ? "true" : "false") << "\n"
      << "mass_law = " << (cfg.verify.mass_law ? "true" : "false") << "\n"
      << "moment_bounds = " << (cfg.verify.moment_bounds ? "true" : "false") << "\n"
      << "uniform_bound = " << (cfg.verify.uniform_bound ? "true" : "false") << "\n"
      << "equicontinuity = " << (cfg.verify.equicontinuity ? "true" : "false") << "\n"
      << "continuous_dependence = "
      << (cfg.verify.continuous_dependence ? "true" : "false") << "\n"
      << "tail_bound = " << (cfg.verify.tail_bound ? "true" : "false") << "\n"
      << "mass_conservation = "
      << (cfg.verify.mass_conservation ? "true" : "false") << "\n"
      << "z_o = " << g17(cfg.verify.z_o) << "\n"
      << "perturbation = " << g17(cfg.verify.perturbation) << "\n"
      << "[output]\n"
      << "dir = " << cfg.dir << "\n";
  return out.str();
}

/// FNV-1a hash of the canonical form; identifies the scenario in reports.
inline std::string fingerprint_config(const RunConfig& cfg) {
  const std::string text = emit_config(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace colbreak
