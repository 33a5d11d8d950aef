#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "colbreak/errors.hpp"
#include "colbreak/kernels.hpp"
#include "colbreak/mesh.hpp"
#include "colbreak/solver.hpp"

namespace colbreak {

// Weighted-space exponents: the solution is controlled in the norm
// integral (z^-sigma1 + z^sigma2) |g| dz with sigma1 in [1/2, 1) and
// sigma2 in (1, 2], subject to kernel-dependent admissibility
// restrictions tied to the collision exponents.
struct SpaceParams {
  double sigma1 = 0.5;
  double sigma2 = 1.5;

  void validate() const {
    if (!(sigma1 >= 0.5 && sigma1 < 1.0))
      throw ConstraintError("sigma1 must lie in [1/2, 1)");
    if (!(sigma2 > 1.0 && sigma2 <= 2.0))
      throw ConstraintError("sigma2 must lie in (1, 2]");
  }

  void validate_with(const KernelSpec& spec) const {
    validate();
    if (spec.constant_test_mode)
      throw ConstraintError(
          "the constant-kernel test mode lies outside the admissible class; "
          "weighted-space bounds are not defined for it");
    const double need_s2 = std::max(1.0 + spec.alpha, 1.0 + spec.alpha_prime);
    const double need_s1 = std::max(1.0 - spec.alpha, 1.0 - spec.alpha_prime);
    if (sigma2 < need_s2)
      throw ConstraintError(
          "sigma2 < 1+alpha violates the well-posedness restriction "
          "1 < max{1+alpha, 1+alpha_prime} <= sigma2 <= 2");
    if (sigma1 < need_s1)
      throw ConstraintError(
          "sigma1 violates the well-posedness restriction "
          "1/2 <= max{(1-alpha),(1-alpha_prime)} <= sigma1 < 1");
  }
};

/// Single-time weighted norm integrand: M_{-sigma1}(|g|) + M_{sigma2}(|g|).
/// The sup over a trajectory is taken by the caller.
inline double weighted_norm(const DensityField& g, const SpaceParams& params) {
  const Mesh& m = *g.mesh;
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double z = m.center(i);
    acc += (std::pow(z, -params.sigma1) + std::pow(z, params.sigma2)) *
           std::abs(g.values[i]) * m.width(i);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Closed-form bound constants. Each is a pure function of the initial
// moments and scenario parameters, printed exactly as the estimates derive
// them; the checks below assert them along computed trajectories.
// ---------------------------------------------------------------------------

/// Gamma_2(T) = (M2(0) + 2 c Gamma0^2) exp(2 c (2 Gamma0 + Gamma1) T)
inline double gamma2_bound(double m2_0, double c, double gamma0, double gamma1,
                           double T) {
  return (m2_0 + 2.0 * c * gamma0 * gamma0) *
         std::exp(2.0 * c * (2.0 * gamma0 + gamma1) * T);
}

/// Gamma_{-sigma1}(T) =
///   (M_{-sigma1}(0) + zeta(sigma1) c (2 Gamma0 Gamma1 + Gamma1^2))
///   * exp(zeta(sigma1) c Gamma0 T)
inline double gamma_neg_bound(double m_neg_0, double c, double zeta,
                              double gamma0, double gamma1, double T) {
  return (m_neg_0 + zeta * c * (2.0 * gamma0 * gamma1 + gamma1 * gamma1)) *
         std::exp(zeta * c * gamma0 * T);
}

/// Uniqueness-estimate coefficient 4c + 12c/(1 - sigma1); multiplied by the
/// sum of the two solutions' weighted norms it yields the Gronwall rate.
inline double theta_coefficient(double c, double sigma1) {
  return 4.0 * c + 12.0 * c / (1.0 - sigma1);
}

// The computed constants of the a-priori estimates for one scenario. The
// pointwise majorant constants grow double-exponentially and routinely
// overflow double precision, so their logarithms are carried alongside and
// all comparisons against them are done in log space.
struct BoundLedger {
  double gamma0 = 0.0;         // M0(0)
  double gamma1 = 0.0;         // M1(0)
  double m2_initial = 0.0;
  double m_neg_initial = 0.0;
  double gamma2_T = 0.0;
  double gamma_neg_T = 0.0;
  double sup_g0_window = 0.0;  // sup of g0 over grid points in [0, Z_o]
  double a0 = 0.0;             // max(sup g0, 2c(G0+G1)(Gneg+G1))
  double s_T = 0.0;            // A(Z_o, T); +inf when not representable
  double log_s_T = 0.0;
  double c_emp = 0.0;          // time-equicontinuity constant; may be +inf
  double log_c_emp = 0.0;
  double theta_coef = 0.0;
  double theta_apriori = 0.0;  // coef * 2 * (Gamma_neg + Gamma1 + Gamma2)
  double T = 0.0;
  double Z_o = 0.0;
  double c = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double zeta_sigma1 = 0.0;
};

namespace detail {

inline double log_sum_exp3(double a, double b, double c) {
  const double m = std::max({a, b, c});
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m) + std::exp(c - m));
}

}  // namespace detail

inline BoundLedger compute_ledger(const DensityField& g0, const KernelSpec& spec,
                                  const SpaceParams& params, double T, double Z_o) {
  params.validate_with(spec);
  if (!(T >= 0.0)) throw ConstraintError("ledger horizon T must be >= 0");
  if (!(Z_o > 0.0) || !(Z_o <= g0.mesh->n()))
    throw ConstraintError("window bound Z_o must lie in (0, n]");

  BoundLedger L;
  L.T = T;
  L.Z_o = Z_o;
  L.c = spec.c;
  L.sigma1 = params.sigma1;
  L.sigma2 = params.sigma2;
  L.zeta_sigma1 = zeta_bound(params.sigma1, spec.theta);

  L.gamma0 = moment(g0, 0.0);
  L.gamma1 = moment(g0, 1.0);
  L.m2_initial = moment(g0, 2.0);
  L.m_neg_initial = moment(g0, -params.sigma1);
  L.gamma2_T = gamma2_bound(L.m2_initial, L.c, L.gamma0, L.gamma1, T);
  L.gamma_neg_T =
      gamma_neg_bound(L.m_neg_initial, L.c, L.zeta_sigma1, L.gamma0, L.gamma1, T);

  const Mesh& m = *g0.mesh;
  double sup = 0.0;
  for (std::size_t i = 0; i < m.size() && m.center(i) <= Z_o; ++i)
    sup = std::max(sup, g0.values[i]);
  L.sup_g0_window = sup;
  L.a0 = std::max(sup, 2.0 * L.c * (L.gamma0 + L.gamma1) *
                           (L.gamma_neg_T + L.gamma1));

  const double inf = std::numeric_limits<double>::infinity();
  const double log_a0 = L.a0 > 0.0 ? std::log(L.a0) : -inf;
  L.log_s_T = log_a0 + L.a0 * L.c * (1.0 + Z_o) * Z_o * std::expm1(T) + T;
  L.s_T = std::exp(L.log_s_T);

  if (L.c > 0.0 && L.a0 > 0.0) {
    const double log_c = std::log(L.c);
    const double sum01 = L.gamma0 + L.gamma1;
    const double t1 = log_c + std::log((1.0 + Z_o) * Z_o) + 2.0 * L.log_s_T;
    const double t2 = log_c + std::log(2.0) + 0.5 * std::log1p(Z_o) + L.log_s_T +
                      std::log(sum01);
    const double t3 = log_c + std::log(2.0) + std::log(sum01) +
                      std::log(L.gamma_neg_T + L.gamma1);
    L.log_c_emp = detail::log_sum_exp3(t1, t2, t3);
  } else {
    L.log_c_emp = -inf;
  }
  L.c_emp = std::exp(L.log_c_emp);

  L.theta_coef = theta_coefficient(L.c, params.sigma1);
  L.theta_apriori = L.theta_coef * 2.0 * (L.gamma_neg_T + L.gamma1 + L.gamma2_T);
  return L;
}

/// Pointwise majorant A(z, t) = A(0) exp(c A(0) z (1+Z_o)(e^t - 1) + t) on
/// the window [0, Z_o] x [0, T]. May overflow to +inf; log_majorant_A is the
/// overflow-safe form.
inline double log_majorant_A(double z, double t, const BoundLedger& ledger) {
  if (!(z >= 0.0 && z <= ledger.Z_o) || !(t >= 0.0 && t <= ledger.T))
    throw std::domain_error("majorant_A: (z, t) outside [0, Z_o] x [0, T]");
  const double log_a0 = ledger.a0 > 0.0
                            ? std::log(ledger.a0)
                            : -std::numeric_limits<double>::infinity();
  return log_a0 + ledger.c * ledger.a0 * z * (1.0 + ledger.Z_o) * std::expm1(t) + t;
}

inline double majorant_A(double z, double t, const BoundLedger& ledger) {
  return std::exp(log_majorant_A(z, t, ledger));
}

// ---------------------------------------------------------------------------
// Trajectory checks
// ---------------------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool pass = false;
  double margin = 0.0;
  std::string detail;
};

namespace detail {

/// Per-cell values at time t, linearly interpolated between snapshots.
inline std::vector<double> values_at_time(const Trajectory& traj, double t) {
  const auto& snaps = traj.snapshots;
  if (snaps.empty()) throw std::invalid_argument("values_at_time: empty trajectory");
  if (t <= snaps.front().time) return snaps.front().values;
  if (t >= snaps.back().time) return snaps.back().values;
  std::size_t hi = 1;
  while (snaps[hi].time < t) ++hi;
  const auto& a = snaps[hi - 1];
  const auto& b = snaps[hi];
  const double f = (t - a.time) / (b.time - a.time);
  std::vector<double> v(a.values.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = a.values[i] + f * (b.values[i] - a.values[i]);
  return v;
}

}  // namespace detail

// Relative slack applied to the proved bounds: quadrature and time stepping
// are the only admissible violation sources.
inline constexpr double kBoundSlack = 1e-6;

struct MomentBoundsReport {
  bool pass = false;
  double ratio_m0 = 0.0;
  double ratio_m1 = 0.0;
  double ratio_m2 = 0.0;
  double ratio_m_neg = 0.0;
  std::string detail;

  double max_ratio() const {
    return std::max({ratio_m0, ratio_m1, ratio_m2, ratio_m_neg});
  }
};

/// Asserts M0 <= Gamma0, M1 <= Gamma1, M2 <= Gamma2(T), M_{-sigma1} <=
/// Gamma_{-sigma1}(T) at every logged time, with kBoundSlack relative slack.
inline MomentBoundsReport check_moment_bounds(const Trajectory& traj,
                                              const BoundLedger& ledger) {
  const auto ratio = [](double value, double bound) {
    if (bound > 0.0) return value / bound;
    return value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  MomentBoundsReport r;
  r.pass = true;
  for (const MomentRecord& row : traj.moment_log) {
    r.ratio_m0 = std::max(r.ratio_m0, ratio(row.m0, ledger.gamma0));
    r.ratio_m1 = std::max(r.ratio_m1, ratio(row.m1, ledger.gamma1));
    r.ratio_m2 = std::max(r.ratio_m2, ratio(row.m2, ledger.gamma2_T));
    r.ratio_m_neg = std::max(r.ratio_m_neg, ratio(row.m_neg, ledger.gamma_neg_T));
    if (r.max_ratio() > 1.0 + kBoundSlack && r.pass) {
      r.pass = false;
      r.detail = "moment bound exceeded at t = " + std::to_string(row.t);
    }
  }
  if (r.pass)
    r.detail = "max ratio " + std::to_string(r.max_ratio());
  return r;
}

struct UniformBoundReport {
  bool pass = false;
  double min_log_gap_majorant = 0.0;  // min over samples of log A - log g
  double min_log_gap_sup = 0.0;       // min over samples of log S(T) - log g
  std::string detail;
};

/// Asserts g(z, t) <= A(z, t) and g(z, t) <= S(T) for all snapshot samples
/// with z <= Z_o. Comparisons run in log space.
inline UniformBoundReport check_uniform_bound(const Trajectory& traj,
                                              const BoundLedger& ledger,
                                              double Z_o) {
  const double inf = std::numeric_limits<double>::infinity();
  UniformBoundReport r;
  r.pass = true;
  r.min_log_gap_majorant = inf;
  r.min_log_gap_sup = inf;
  for (const DensityField& snap : traj.snapshots) {
    const Mesh& m = *snap.mesh;
    const double t = std::min(snap.time, ledger.T);
    for (std::size_t i = 0; i < m.size() && m.center(i) <= Z_o; ++i) {
      const double g = snap.values[i];
      if (g <= 0.0) continue;
      const double lg = std::log(g);
      const double gap_a = log_majorant_A(m.center(i), t, ledger) - lg;
      const double gap_s = ledger.log_s_T - lg;
      r.min_log_gap_majorant = std::min(r.min_log_gap_majorant, gap_a);
      r.min_log_gap_sup = std::min(r.min_log_gap_sup, gap_s);
      if ((gap_a < -1e-12 || gap_s < -1e-12) && r.pass) {
        r.pass = false;
        r.detail = "majorant violated at z = " + std::to_string(m.center(i)) +
                   ", t = " + std::to_string(snap.time);
      }
    }
  }
  if (r.pass) r.detail = "log gap " + std::to_string(r.min_log_gap_majorant);
  return r;
}

/// sup over grid points and admissible times of |g(z, t+h) - g(z, t)|, with
/// snapshots interpolated linearly in time. The sup over continuous t is
/// attained at snapshot breakpoints, which is what is enumerated.
inline double modulus_time(const Trajectory& traj, double h) {
  const double T = traj.t_final();
  if (!(h > 0.0 && h < T))
    throw std::domain_error("modulus_time: h must lie in (0, T)");
  std::vector<double> candidates;
  candidates.push_back(0.0);
  candidates.push_back(T - h);
  for (const DensityField& s : traj.snapshots) {
    if (s.time <= T - h) candidates.push_back(s.time);
    const double shifted = s.time - h;
    if (shifted >= 0.0 && shifted <= T - h) candidates.push_back(shifted);
  }
  double sup = 0.0;
  for (double t : candidates) {
    const std::vector<double> a = detail::values_at_time(traj, t);
    const std::vector<double> b = detail::values_at_time(traj, t + h);
    for (std::size_t i = 0; i < a.size(); ++i)
      sup = std::max(sup, std::abs(b[i] - a[i]));
  }
  return sup;
}

/// sup over grid points z (with z + h <= n) of |g(z+h, t) - g(z, t)|,
/// evaluated through sample().
inline double modulus_space(const DensityField& field, double h) {
  if (!(h >= 0.0)) throw std::domain_error("modulus_space: h must be >= 0");
  if (h == 0.0) return 0.0;
  const Mesh& m = *field.mesh;
  double sup = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double z = m.center(i);
    if (z + h > m.n()) break;
    sup = std::max(sup, std::abs(sample(field, z + h) - field.values[i]));
  }
  return sup;
}

struct EquicontinuityReport {
  bool pass = false;
  std::vector<double> time_moduli;   // modulus_time(h) for each probed h
  std::vector<double> space_moduli;  // modulus_space(h) on the final snapshot
  double worst_time_log_gap = 0.0;   // min over h of log C_emp - log(mod/h)
  std::string detail;
};

/// Time part: modulus_time(h)/h <= C_emp for each probed h (log-space
/// comparison). Space part: modulus_space decreasing across the probed h
/// sequence, allowing 10% non-monotonicity slack.
inline EquicontinuityReport check_equicontinuity(
    const Trajectory& traj, const BoundLedger& ledger,
    const std::vector<double>& time_h = {0.1, 0.05, 0.025},
    const std::vector<double>& space_h = {0.2, 0.1, 0.05}) {
  const double inf = std::numeric_limits<double>::infinity();
  EquicontinuityReport r;
  r.pass = true;
  r.worst_time_log_gap = inf;
  for (double h : time_h) {
    const double mt = modulus_time(traj, h);
    r.time_moduli.push_back(mt);
    if (mt == 0.0) continue;
    const double gap = ledger.log_c_emp - std::log(mt / h);
    r.worst_time_log_gap = std::min(r.worst_time_log_gap, gap);
    if (gap < 0.0 && r.pass) {
      r.pass = false;
      r.detail = "modulus_time(" + std::to_string(h) + ")/h exceeds C_emp";
    }
  }
  for (double h : space_h)
    r.space_moduli.push_back(modulus_space(traj.final_field(), h));
  for (std::size_t k = 0; k + 1 < r.space_moduli.size(); ++k) {
    if (r.space_moduli[k + 1] > 1.1 * r.space_moduli[k] &&
        r.space_moduli[k + 1] > 0.0) {
      r.pass = false;
      r.detail = "modulus_space not decreasing between h = " +
                 std::to_string(space_h[k]) + " and " +
                 std::to_string(space_h[k + 1]);
    }
  }
  if (r.pass) r.detail = "time log gap " + std::to_string(r.worst_time_log_gap);
  return r;
}

struct TailBoundResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// Chebyshev-type tail bound: integral_beta^n g dz <= beta^-r M_r(g).
inline TailBoundResult tail_bound_check(const DensityField& field, double beta,
                                        double r) {
  const Mesh& m = *field.mesh;
  if (!(beta > m.z_min()))
    throw std::domain_error("tail_bound_check: beta must exceed z_min");
  if (!(r > 0.0)) throw std::domain_error("tail_bound_check: r must be positive");
  TailBoundResult out;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.center(i) >= beta) out.lhs += field.values[i] * m.width(i);
  out.rhs = std::pow(beta, -r) * moment(field, r);
  out.pass = out.lhs <= out.rhs * (1.0 + 1e-9);
  return out;
}

/// Uniqueness metric Q = integral (z^-sigma1 + z) |g - h| dz on a shared mesh.
inline double q_distance(const DensityField& g, const DensityField& h,
                         double sigma1) {
  if (!g.mesh || !h.mesh || (g.mesh.get() != h.mesh.get() &&
                             !g.mesh->same_grid(*h.mesh)))
    throw std::invalid_argument("q_distance: fields live on different meshes");
  const Mesh& m = *g.mesh;
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double z = m.center(i);
    acc += (std::pow(z, -sigma1) + z) * std::abs(g.values[i] - h.values[i]) *
           m.width(i);
  }
  return acc;
}

struct DependenceReport {
  bool pass = false;
  double theta = 0.0;   // Gronwall rate assembled from the two runs
  double q_initial = 0.0;
  double worst_log_gap = 0.0;  // min over t of the log-space Gronwall slack
  std::string detail;
};

/// Continuous dependence: Q(t) <= Q(0) exp(Theta t) (1 + 1e-3) at every
/// logged time, with Theta = (4c + 12c/(1-sigma1)) (|g| + |h|) built from
/// the two trajectories' weighted-norm sups. Identical initial data demand
/// Q identically zero up to 1e-9 of the solution's own Q-scale.
inline DependenceReport check_continuous_dependence(const Trajectory& run_g,
                                                    const Trajectory& run_h,
                                                    const KernelSpec& spec,
                                                    const SpaceParams& params) {
  const double inf = std::numeric_limits<double>::infinity();
  DependenceReport r;
  if (run_g.snapshots.empty() || run_h.snapshots.empty())
    throw std::invalid_argument("check_continuous_dependence: empty trajectory");
  const auto mesh = run_g.snapshots.front().mesh;
  if (!mesh->same_grid(*run_h.snapshots.front().mesh))
    throw std::invalid_argument(
        "check_continuous_dependence: runs use different meshes");

  double norm_g = 0.0, norm_h = 0.0;
  for (const auto& s : run_g.snapshots)
    norm_g = std::max(norm_g, weighted_norm(s, params));
  for (const auto& s : run_h.snapshots)
    norm_h = std::max(norm_h, weighted_norm(s, params));
  r.theta = theta_coefficient(spec.c, params.sigma1) * (norm_g + norm_h);

  r.q_initial = q_distance(run_g.initial(), run_h.initial(), params.sigma1);
  r.pass = true;
  r.worst_log_gap = inf;
  for (const DensityField& snap : run_g.snapshots) {
    DensityField h_at(mesh, detail::values_at_time(run_h, snap.time), snap.time);
    const double q = q_distance(snap, h_at, params.sigma1);
    if (r.q_initial == 0.0) {
      const double scale =
          std::max(1.0, q_distance(snap, DensityField::zero(mesh), params.sigma1));
      if (q > 1e-9 * scale) {
        r.pass = false;
        r.detail = "uniqueness violated: Q(t) = " + std::to_string(q) +
                   " at t = " + std::to_string(snap.time);
      }
    } else if (q > 0.0) {
      const double gap = std::log(r.q_initial) + r.theta * snap.time +
                         std::log1p(1e-3) - std::log(q);
      r.worst_log_gap = std::min(r.worst_log_gap, gap);
      if (gap < 0.0 && r.pass) {
        r.pass = false;
        r.detail =
            "Gronwall envelope violated at t = " + std::to_string(snap.time);
      }
    }
  }
  if (r.pass) r.detail = "theta = " + std::to_string(r.theta);
  return r;
}

struct MassLimitReport {
  bool pass = false;
  std::vector<double> defects;         // |M1(T) - M1(0)| / M1(0) per level
  std::vector<double> signed_defects;  // (M1(0) - M1(T)) / M1(0)
  std::string detail;
};

/// Mass-conservation-in-the-limit check over nested truncation refinements:
/// the relative mass defect must decrease along the sequence (10% slack) and
/// may never be meaningfully negative (mass is never created).
inline MassLimitReport check_mass_conservation_limit(
    const std::vector<const Trajectory*>& runs) {
  MassLimitReport r;
  if (runs.size() < 2)
    throw std::invalid_argument(
        "check_mass_conservation_limit: need at least two refinement levels");
  for (const Trajectory* t : runs) {
    const double m1_0 = t->moment_log.front().m1;
    const double m1_T = t->moment_log.back().m1;
    r.defects.push_back(std::abs(m1_T - m1_0) / m1_0);
    r.signed_defects.push_back((m1_0 - m1_T) / m1_0);
  }
  r.pass = true;
  for (double sd : r.signed_defects) {
    if (sd < -1e-9) {
      r.pass = false;
      r.detail = "mass was created at some refinement level";
    }
  }
  for (std::size_t k = 0; k + 1 < r.defects.size(); ++k) {
    if (r.defects[k + 1] > 1.1 * r.defects[k]) {
      r.pass = false;
      r.detail = "mass defect not decreasing between levels " +
                 std::to_string(k) + " and " + std::to_string(k + 1);
    }
  }
  if (r.pass) r.detail = "defects decreasing";
  return r;
}

}  // namespace colbreak
