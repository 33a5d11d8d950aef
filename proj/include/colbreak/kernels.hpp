#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "colbreak/errors.hpp"

namespace colbreak {

// Probability split of a binary collision outcome: the pair coalesces with
// efficiency E and breaks up with efficiency E1 = 1 - E. All models are
// symmetric, continuous on [0,inf)^2 and take values in [0,1].
enum class EfficiencyKind { Constant, RatioBounded, PureCoagulation };

struct EfficiencyModel {
  EfficiencyKind kind = EfficiencyKind::Constant;
  double e0 = 0.5;  // coalescence probability, Constant model only

  static EfficiencyModel constant(double e0) {
    if (!(e0 >= 0.0 && e0 <= 1.0))
      throw ConstraintError("efficiency e0 must lie in [0, 1]");
    return EfficiencyModel{EfficiencyKind::Constant, e0};
  }
  // E(z, z1) = z z1 / (1 + z z1)
  static EfficiencyModel ratio_bounded() {
    return EfficiencyModel{EfficiencyKind::RatioBounded, 0.0};
  }
  // E == 1: collisions always coalesce (classical Smoluchowski limit).
  static EfficiencyModel pure_coagulation() {
    return EfficiencyModel{EfficiencyKind::PureCoagulation, 1.0};
  }
};

struct EfficiencyPair {
  double coalesce;  // E
  double breakup;   // E1 = 1 - E
};

/// Evaluate (E, E1) for a pair of volumes. Symmetric; E + E1 == 1 exactly.
inline EfficiencyPair efficiency(double z, double z1, const EfficiencyModel& m) {
  switch (m.kind) {
    case EfficiencyKind::Constant:
      return {m.e0, 1.0 - m.e0};
    case EfficiencyKind::RatioBounded: {
      const double p = z * z1;
      const double e = p / (1.0 + p);
      return {e, 1.0 - e};
    }
    case EfficiencyKind::PureCoagulation:
      return {1.0, 0.0};
  }
  return {1.0, 0.0};  // unreachable
}

// Collision kernel Phi(z, z1) = c (z^a z1^a' + z^a' z1^a) together with the
// outcome efficiencies and the breakage distribution shape exponent theta.
// theta = 0 selects binary breakage, P(z | z1; z2) = 2/(z1 + z2).
//
// The admissible exponent range is 0 < a, a' <= 1/2. A "constant collision"
// test mode (a = a' = 0, so Phi == 2c) is allowed only through the dedicated
// factory; it exists for oracle scenarios with textbook closed forms and is
// outside the admissible kernel class.
struct KernelSpec {
  double c = 1.0;
  double alpha = 0.5;
  double alpha_prime = 0.5;
  EfficiencyModel efficiency = EfficiencyModel::constant(0.5);
  double theta = 0.0;
  bool constant_test_mode = false;

  static KernelSpec parametric(double c, double alpha, double alpha_prime,
                               EfficiencyModel eff, double theta = 0.0) {
    KernelSpec s{c, alpha, alpha_prime, eff, theta, false};
    s.validate();
    return s;
  }

  /// Phi == phi0 everywhere. Oracle use only; bypasses the alpha > 0 check.
  static KernelSpec constant_collision(double phi0, EfficiencyModel eff,
                                       double theta = 0.0) {
    if (!(phi0 >= 0.0)) throw ConstraintError("constant kernel value must be >= 0");
    KernelSpec s{phi0 / 2.0, 0.0, 0.0, eff, theta, true};
    s.validate();
    return s;
  }

  void validate() const {
    if (!(c >= 0.0)) throw ConstraintError("kernel constant c must be >= 0");
    if (!(theta >= 0.0)) throw ConstraintError("theta must be >= 0");
    if (constant_test_mode) {
      if (alpha != 0.0 || alpha_prime != 0.0)
        throw ConstraintError("constant test mode requires alpha = alpha' = 0");
      return;
    }
    if (!(alpha > 0.0 && alpha <= 0.5))
      throw ConstraintError("alpha must lie in (0, 1/2]");
    if (!(alpha_prime > 0.0 && alpha_prime <= 0.5))
      throw ConstraintError("alpha_prime must lie in (0, 1/2]");
  }
};

/// Collision rate Phi(z, z1) = c (z^a z1^a' + z^a' z1^a). Symmetric.
inline double phi(double z, double z1, const KernelSpec& spec) {
  if (!(z >= 0.0) || !(z1 >= 0.0))
    throw std::domain_error("phi: volumes must be nonnegative");
  return spec.c * (std::pow(z, spec.alpha) * std::pow(z1, spec.alpha_prime) +
                   std::pow(z, spec.alpha_prime) * std::pow(z1, spec.alpha));
}

/// Truncated kernel Phi_n = chi_(0,n)(z) chi_(0,n)(z1) Phi.
inline double phi_truncated(double z, double z1, double n, const KernelSpec& spec) {
  if (!(n > 0.0)) throw std::domain_error("phi_truncated: cutoff n must be positive");
  if (z <= 0.0 || z >= n || z1 <= 0.0 || z1 >= n) {
    if (!(z >= 0.0) || !(z1 >= 0.0))
      throw std::domain_error("phi_truncated: volumes must be nonnegative");
    return 0.0;
  }
  return phi(z, z1, spec);
}

/// Daughter distribution P(z | z1; z2) = (theta+2) z^theta / (z1+z2)^(theta+1)
/// on 0 <= z <= z1+z2, identically zero above the total volume.
inline double breakage_p(double z, double z1, double z2, double theta) {
  const double s = z1 + z2;
  if (!(s > 0.0))
    throw std::domain_error("breakage_p: z1 + z2 must be positive");
  if (!(z >= 0.0)) throw std::domain_error("breakage_p: z must be nonnegative");
  if (z > s) return 0.0;
  return (theta + 2.0) * std::pow(z, theta) / std::pow(s, theta + 1.0);
}

/// Exact moment of the daughter distribution:
///   integral_0^s z^r P(z | z1; z2) dz = (theta+2)/(r+theta+1) s^r,
/// with s = z1 + z2. Diverges for r <= -(1+theta).
inline double p_moment(double r, double s, double theta) {
  if (!(s > 0.0)) throw std::domain_error("p_moment: total volume s must be positive");
  if (!(theta >= 0.0)) throw std::domain_error("p_moment: theta must be >= 0");
  if (!(r > -1.0 - theta))
    throw std::domain_error("p_moment: integral diverges for r <= -(1+theta)");
  return (theta + 2.0) / (r + theta + 1.0) * std::pow(s, r);
}

/// Sharp constant zeta(r*) with
///   integral z^{-r*} P dz = zeta(r*) (z1+z2)^{-r*},
/// equal to (theta+2)/(theta+1-r*); 2/(1-r*) at theta = 0.
inline double zeta_bound(double r_star, double theta = 0.0) {
  if (!(r_star >= 0.0 && r_star < 1.0))
    throw std::domain_error("zeta_bound: r* must lie in [0, 1)");
  if (!(theta >= 0.0)) throw std::domain_error("zeta_bound: theta must be >= 0");
  return (theta + 2.0) / (theta + 1.0 - r_star);
}

}  // namespace colbreak
