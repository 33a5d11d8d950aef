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

namespace colbreak {

struct SolverConfig {
  double t_end = 1.0;
  double dt_init = 1e-3;
  double dt_max = 0.25;
  double safety = 0.5;          // step shrink factor on rejection
  double tol_step = 1e-6;       // local per-cell tolerance
  double negativity_tol = 1e-12;
  std::size_t record_every = 1;  // snapshot stride, in accepted steps

  void validate() const {
    if (!(t_end >= 0.0)) throw ConstraintError("t_end must be >= 0");
    if (!(dt_init > 0.0)) throw ConstraintError("dt_init must be positive");
    if (!(dt_max > 0.0)) throw ConstraintError("dt_max must be positive");
    if (!(safety > 0.0 && safety < 1.0))
      throw ConstraintError("safety must lie in (0, 1)");
    if (!(tol_step > 0.0)) throw ConstraintError("tol_step must be positive");
    if (!(negativity_tol > 0.0))
      throw ConstraintError("negativity_tol must be positive");
    if (record_every < 1) throw ConstraintError("record_every must be >= 1");
  }
};

// Configured initial particle-size distribution g0(z) >= 0.
struct InitialDatum {
  enum class Kind { Exponential, TruncatedPowerExp, Monodisperse };

  Kind kind = Kind::Exponential;
  double amplitude = 1.0;
  double decay = 1.0;   // lambda in exp(-lambda z)
  double power = 0.0;   // p in z^-p prefactor (TruncatedPowerExp)
  double z0 = 1.0;      // bump location (Monodisperse)
  double width = 0.1;   // bump width (Monodisperse)

  static InitialDatum exponential(double amplitude, double decay) {
    InitialDatum d;
    d.kind = Kind::Exponential;
    d.amplitude = amplitude;
    d.decay = decay;
    d.validate();
    return d;
  }
  static InitialDatum power_exp(double amplitude, double power, double decay) {
    InitialDatum d;
    d.kind = Kind::TruncatedPowerExp;
    d.amplitude = amplitude;
    d.power = power;
    d.decay = decay;
    d.validate();
    return d;
  }
  static InitialDatum monodisperse(double amplitude, double z0, double width) {
    InitialDatum d;
    d.kind = Kind::Monodisperse;
    d.amplitude = amplitude;
    d.z0 = z0;
    d.width = width;
    d.validate();
    return d;
  }

  void validate() const {
    if (!(amplitude >= 0.0)) throw ConstraintError("initial amplitude must be >= 0");
    switch (kind) {
      case Kind::Exponential:
        if (!(decay > 0.0)) throw ConstraintError("initial decay must be positive");
        break;
      case Kind::TruncatedPowerExp:
        if (!(decay > 0.0)) throw ConstraintError("initial decay must be positive");
        if (!(power >= 0.0)) throw ConstraintError("initial power must be >= 0");
        break;
      case Kind::Monodisperse:
        if (!(z0 > 0.0)) throw ConstraintError("initial z0 must be positive");
        if (!(width > 0.0)) throw ConstraintError("initial width must be positive");
        break;
    }
  }

  double operator()(double z) const {
    switch (kind) {
      case Kind::Exponential:
        return amplitude * std::exp(-decay * z);
      case Kind::TruncatedPowerExp:
        return amplitude * std::pow(z, -power) * std::exp(-decay * z);
      case Kind::Monodisperse: {
        const double d = (z - z0) / width;
        return amplitude * std::exp(-0.5 * d * d);
      }
    }
    return 0.0;
  }

  DensityField make_field(std::shared_ptr<const Mesh> mesh) const {
    std::vector<double> v(mesh->size());
    for (std::size_t i = 0; i < mesh->size(); ++i) v[i] = (*this)(mesh->center(i));
    return DensityField(std::move(mesh), std::move(v), 0.0);
  }
};

struct MomentRecord {
  double t;
  double m_neg;   // M_{-sigma1}
  double m0;
  double m1;
  double m2;
  double flux_out;  // total mass outflow rate (past n plus below z_min)
};

struct Trajectory {
  std::vector<DensityField> snapshots;
  std::vector<MomentRecord> moment_log;
  SolverConfig config;
  double sigma1 = 0.5;
  double clamped_mass = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  const DensityField& initial() const { return snapshots.front(); }
  const DensityField& final_field() const { return snapshots.back(); }
  double t_final() const { return snapshots.back().time; }
};

namespace detail {

// Clamp microscopic negatives to zero; anything below -tol*scale is treated
// as a blow-up. Returns the clamped mass.
inline double clamp_negatives(DensityField& f, double tol, double scale) {
  const Mesh& m = *f.mesh;
  double clamped = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const double v = f.values[i];
    if (v < 0.0) {
      if (v < -tol * scale)
        throw InstabilityError(
            "time step produced value " + std::to_string(v) + " in cell " +
                std::to_string(i) + " (below -negativity_tol*scale); reduce dt "
                "or tighten tol_step",
            i, v);
      clamped += -v * m.width(i);
      f.values[i] = 0.0;
    }
  }
  return clamped;
}

inline double field_scale(const DensityField& f) {
  double s = 1.0;
  for (double v : f.values) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace detail

struct StepOutcome {
  DensityField field;
  double flux_avg = 0.0;      // RK4-weighted mass outflow rate over the step
  double clamped_mass = 0.0;
};

/// One classical RK4 step of dg/dt = rhs(g). The returned flux average keeps
/// the discrete balance M1(new) = M1(old) - dt*flux_avg + clamped corrections.
inline StepOutcome rk4_step(const CollisionOperator& op, const DensityField& g,
                            double dt, double negativity_tol = 1e-12) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
  const std::size_t nc = g.values.size();
  const double scale = detail::field_scale(g);

  const OperatorOutput k1 = op.apply(g);
  DensityField stage = g;
  for (std::size_t i = 0; i < nc; ++i)
    stage.values[i] = g.values[i] + 0.5 * dt * k1.rhs[i];
  const OperatorOutput k2 = op.apply(stage);
  for (std::size_t i = 0; i < nc; ++i)
    stage.values[i] = g.values[i] + 0.5 * dt * k2.rhs[i];
  const OperatorOutput k3 = op.apply(stage);
  for (std::size_t i = 0; i < nc; ++i)
    stage.values[i] = g.values[i] + dt * k3.rhs[i];
  const OperatorOutput k4 = op.apply(stage);

  StepOutcome out;
  out.field = g;
  out.field.time = g.time + dt;
  for (std::size_t i = 0; i < nc; ++i)
    out.field.values[i] =
        g.values[i] + dt / 6.0 *
                          (k1.rhs[i] + 2.0 * k2.rhs[i] + 2.0 * k3.rhs[i] + k4.rhs[i]);
  out.flux_avg = (k1.flux_total() + 2.0 * k2.flux_total() + 2.0 * k3.flux_total() +
                  k4.flux_total()) /
                 6.0;
  out.clamped_mass = detail::clamp_negatives(out.field, negativity_tol, scale);
  return out;
}

/// Single explicit step with a transient operator (test/API convenience).
inline DensityField step(const DensityField& g, double dt, const KernelSpec& spec,
                         double negativity_tol = 1e-12) {
  CollisionOperator op(g.mesh, spec);
  return rk4_step(op, g, dt, negativity_tol).field;
}

/// Integrates the truncated system from the configured initial datum to
/// cfg.t_end with step-doubling error control: a full step is compared
/// against two half steps, accepted when the per-cell difference is within
/// tol_step*(1+|g|), and the advanced state is the local Richardson
/// combination of the two. Rejections shrink dt by the safety factor.
inline Trajectory run(const InitialDatum& init, std::shared_ptr<const Mesh> mesh,
                      const KernelSpec& spec, double sigma1,
                      const SolverConfig& cfg, int threads = 1) {
  cfg.validate();
  spec.validate();
  init.validate();
  CollisionOperator op(mesh, spec, threads);

  Trajectory traj;
  traj.config = cfg;
  traj.sigma1 = sigma1;

  DensityField g = init.make_field(mesh);
  traj.clamped_mass += detail::clamp_negatives(g, cfg.negativity_tol, 1.0);

  const auto log_moments = [&](const DensityField& f, double flux) {
    traj.moment_log.push_back(MomentRecord{f.time, moment(f, -sigma1),
                                           moment(f, 0.0), moment(f, 1.0),
                                           moment(f, 2.0), flux});
  };

  traj.snapshots.push_back(g);
  log_moments(g, op.apply(g).flux_total());
  if (cfg.t_end == 0.0) return traj;

  double dt = std::min({cfg.dt_init, cfg.dt_max, cfg.t_end});
  double t = 0.0;
  std::size_t steps_since_snapshot = 0;

  while (t < cfg.t_end && (cfg.t_end - t) > 1e-15 * cfg.t_end) {
    const double remaining = cfg.t_end - t;
    const double dt_eff = std::min(dt, remaining);
    const bool final_step = (dt_eff == remaining);

    StepOutcome full, half1, half2;
    bool attempt_ok = true;
    try {
      full = rk4_step(op, g, dt_eff, cfg.negativity_tol);
      half1 = rk4_step(op, g, 0.5 * dt_eff, cfg.negativity_tol);
      half2 = rk4_step(op, half1.field, 0.5 * dt_eff, cfg.negativity_tol);
    } catch (const InstabilityError&) {
      attempt_ok = false;
    }

    double err_ratio = 0.0;
    if (attempt_ok) {
      for (std::size_t i = 0; i < g.values.size(); ++i) {
        const double diff = std::abs(full.field.values[i] - half2.field.values[i]);
        const double tol = cfg.tol_step * (1.0 + std::abs(half2.field.values[i]));
        err_ratio = std::max(err_ratio, diff / tol);
      }
    }

    if (!attempt_ok || err_ratio > 1.0) {
      traj.rejected_steps += 1;
      dt *= cfg.safety;
      if (dt < 1e-12 * cfg.t_end)
        throw StiffnessError(
            "step size underflow below 1e-12*t_end at t = " + std::to_string(t) +
            "; the problem appears too stiff for the explicit integrator");
      continue;
    }

    // local extrapolation in increment form: exact no-op when the two
    // candidate solutions coincide (e.g. c = 0)
    DensityField next = half2.field;
    next.time = final_step ? cfg.t_end : t + dt_eff;
    for (std::size_t i = 0; i < next.values.size(); ++i)
      next.values[i] = half2.field.values[i] +
                       (half2.field.values[i] - full.field.values[i]) / 15.0;
    const double half_avg = 0.5 * (half1.flux_avg + half2.flux_avg);
    const double flux_eff = half_avg + (half_avg - full.flux_avg) / 15.0;
    traj.clamped_mass += full.clamped_mass + half1.clamped_mass +
                         half2.clamped_mass +
                         detail::clamp_negatives(next, cfg.negativity_tol,
                                                 detail::field_scale(g));

    t = next.time;
    g = std::move(next);
    traj.accepted_steps += 1;
    steps_since_snapshot += 1;
    log_moments(g, flux_eff);
    if (steps_since_snapshot >= cfg.record_every || t >= cfg.t_end) {
      traj.snapshots.push_back(g);
      steps_since_snapshot = 0;
    }

    // smooth growth toward the tolerance target keeps the accepted step
    // sizes (hence the trajectory) responsive to tol_step
    const double factor =
        err_ratio > 0.0 ? std::min(2.0, 0.9 * std::pow(err_ratio, -0.2)) : 2.0;
    if (factor > 1.0) dt = std::min(cfg.dt_max, dt_eff * factor);
  }
  return traj;
}

}  // namespace colbreak
