#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "colbreak/errors.hpp"
#include "colbreak/kernels.hpp"
#include "colbreak/mesh.hpp"
#include "colbreak/operators.hpp"
#include "colbreak/solver.hpp"

namespace colbreak {

// Reference scenario with a textbook closed form: constant collision rate
// Phi == 1 with pure coagulation and g0 = exp(-z). The constant kernel sits
// outside the admissible exponent class and is reachable only through the
// test-mode factory.
struct OracleScenario {
  std::string name;
  KernelSpec kernel;
  InitialDatum init;
  bool predicts_density = false;
  bool predicts_moments = false;

  static OracleScenario smoluchowski_constant_kernel() {
    return OracleScenario{
        "smoluchowski-constant",
        KernelSpec::constant_collision(1.0, EfficiencyModel::pure_coagulation()),
        InitialDatum::exponential(1.0, 1.0), true, true};
  }
};

inline bool is_smoluchowski_scenario(const KernelSpec& spec,
                                     const InitialDatum& init) {
  return spec.constant_test_mode && spec.c == 0.5 && spec.theta == 0.0 &&
         spec.efficiency.kind == EfficiencyKind::PureCoagulation &&
         init.kind == InitialDatum::Kind::Exponential &&
         init.amplitude == 1.0 && init.decay == 1.0;
}

/// Closed-form constant-kernel solution g(z, t) = (2/(t+2))^2 exp(-2z/(t+2)).
inline double smoluchowski_constant(double z, double t) {
  if (!(z >= 0.0) || !(t >= 0.0))
    throw std::domain_error("smoluchowski_constant: requires z >= 0, t >= 0");
  const double b = 2.0 / (t + 2.0);
  return b * b * std::exp(-b * z);
}

/// Analytic time derivative of the closed form (equals its collision rhs).
inline double smoluchowski_constant_dgdt(double z, double t) {
  const double b = 2.0 / (t + 2.0);
  return (0.5 * b * b * b * b * z - b * b * b) * std::exp(-b * z);
}

/// M0(t) = 2/(t+2) for the closed-form scenario; M1 is identically 1.
inline double smoluchowski_m0(double t) { return 2.0 / (t + 2.0); }

// Closed zeroth-moment ODE for constant-kernel test scenarios. A collision
// coalesces with probability E (net -1 particle) and breaks in two with
// probability E1 (net 0 particles for binary breakage), so
//   dM0/dt = -(1/2) E phi0 M0^2,
// a Riccati equation with solution M0(t) = M0(0)/(1 + E phi0 M0(0) t / 2).
// Kernels in the admissible exponent class do not close; only inequality
// envelopes (the Gamma bounds) are available for them.
struct MomentOdeReference {
  bool closed = false;
  double m0_initial = 0.0;
  double e_coal = 0.0;
  double phi0 = 0.0;

  double m0(double t) const {
    if (!closed)
      throw std::domain_error("moment ODE does not close for this scenario");
    return m0_initial / (1.0 + 0.5 * e_coal * phi0 * m0_initial * t);
  }
};

inline MomentOdeReference moment_ode_reference(const KernelSpec& spec,
                                               double m0_initial) {
  MomentOdeReference ref;
  ref.m0_initial = m0_initial;
  if (!spec.constant_test_mode) return ref;  // envelope-only
  switch (spec.efficiency.kind) {
    case EfficiencyKind::Constant:
      ref.e_coal = spec.efficiency.e0;
      break;
    case EfficiencyKind::PureCoagulation:
      ref.e_coal = 1.0;
      break;
    case EfficiencyKind::RatioBounded:
      return ref;  // E varies with the pair; no closed moment system
  }
  ref.closed = true;
  ref.phi0 = 2.0 * spec.c;
  return ref;
}

struct OracleComparison {
  double density_sup_rel_err = 0.0;  // sup-norm error / sup of the closed form
  double m0_rel_err = 0.0;
  double m1_rel_err = 0.0;
};

/// Compares a computed trajectory against the constant-kernel closed form on
/// the window [z_lo, z_hi] at the trajectory's final time. Refuses scenarios
/// other than the ringfenced test mode.
inline OracleComparison compare_smoluchowski(const Trajectory& traj,
                                             const KernelSpec& spec,
                                             const InitialDatum& init,
                                             double z_lo = 0.01,
                                             double z_hi = 10.0,
                                             std::size_t probes = 2000) {
  if (!is_smoluchowski_scenario(spec, init))
    throw std::domain_error(
        "compare_smoluchowski: trajectory was not produced by the "
        "constant-kernel test scenario");
  const DensityField& f = traj.final_field();
  const double t = f.time;
  OracleComparison out;
  double sup_exact = 0.0, sup_err = 0.0;
  const double lr = std::log(z_hi / z_lo);
  for (std::size_t i = 0; i < probes; ++i) {
    const double z =
        z_lo * std::exp(lr * static_cast<double>(i) / static_cast<double>(probes - 1));
    const double exact = smoluchowski_constant(z, t);
    sup_exact = std::max(sup_exact, exact);
    sup_err = std::max(sup_err, std::abs(sample(f, z) - exact));
  }
  out.density_sup_rel_err = sup_err / sup_exact;
  out.m0_rel_err =
      std::abs(moment(f, 0.0) - smoluchowski_m0(t)) / smoluchowski_m0(t);
  out.m1_rel_err = std::abs(moment(f, 1.0) - 1.0);
  return out;
}

struct ConvergenceTable {
  std::vector<std::size_t> cells;
  std::vector<double> diffs;  // sup-norm difference between consecutive levels
  double observed_order = 0.0;
  bool monotone = false;
};

/// Self-convergence under mesh refinement: runs the same scenario at each
/// resolution and measures sup-norm differences of the final fields over a
/// fixed window, through sample() on a log-spaced probe grid.
inline ConvergenceTable self_convergence(const InitialDatum& init,
                                         const KernelSpec& spec, double sigma1,
                                         const SolverConfig& cfg, double z_min,
                                         double n,
                                         const std::vector<std::size_t>& resolutions,
                                         double window_lo, double window_hi,
                                         std::size_t probes = 512,
                                         int threads = 1) {
  if (resolutions.size() < 3)
    throw std::invalid_argument("self_convergence: need at least 3 resolutions");
  ConvergenceTable table;
  table.cells = resolutions;

  std::vector<std::vector<double>> sampled;
  const double lr = std::log(window_hi / window_lo);
  for (std::size_t nc : resolutions) {
    auto mesh = build_mesh(z_min, n, nc, MeshKind::Geometric);
    Trajectory traj = run(init, mesh, spec, sigma1, cfg, threads);
    std::vector<double> probe(probes);
    for (std::size_t i = 0; i < probes; ++i) {
      const double z = window_lo * std::exp(lr * static_cast<double>(i) /
                                            static_cast<double>(probes - 1));
      probe[i] = sample(traj.final_field(), z);
    }
    sampled.push_back(std::move(probe));
  }
  for (std::size_t k = 0; k + 1 < sampled.size(); ++k) {
    double d = 0.0;
    for (std::size_t i = 0; i < probes; ++i)
      d = std::max(d, std::abs(sampled[k + 1][i] - sampled[k][i]));
    table.diffs.push_back(d);
  }
  table.monotone = true;
  for (std::size_t k = 0; k + 1 < table.diffs.size(); ++k)
    if (table.diffs[k + 1] >= table.diffs[k]) table.monotone = false;
  const double d0 = table.diffs[table.diffs.size() - 2];
  const double d1 = table.diffs.back();
  table.observed_order = d1 > 0.0 ? std::log2(d0 / d1) : 0.0;
  return table;
}

}  // namespace colbreak
