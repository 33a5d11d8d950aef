#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "colbreak/errors.hpp"
#include "colbreak/kernels.hpp"
#include "colbreak/mesh.hpp"
#include "colbreak/parallel.hpp"

namespace colbreak {

// Result of evaluating the three collision operators on a field. All three
// parts are nonnegative for nonnegative input; rhs = gain_coag - loss +
// gain_break elementwise. The two flux scalars account for every unit of
// mass the gains do not redeposit: collisions whose combined volume exceeds
// the truncation n, and breakage daughters born below the resolved z_min.
struct OperatorOutput {
  std::vector<double> gain_coag;
  std::vector<double> loss;
  std::vector<double> gain_break;
  std::vector<double> rhs;
  double mass_flux_out = 0.0;
  double subgrid_mass_loss = 0.0;

  double flux_total() const { return mass_flux_out + subgrid_mass_loss; }
};

namespace detail {

// Daughter-distribution integrals over [a, b], stripped of the pair factor:
// multiply both entries by s^-(theta+1) to obtain the actual number and mass
// for a breakup of total volume s. For theta = 0 the distribution is flat.
struct PieceFactors {
  double number;
  double mass;
};

inline PieceFactors piece_factors(double a, double b, double theta) {
  if (theta == 0.0) return {2.0 * (b - a), b * b - a * a};
  return {(theta + 2.0) / (theta + 1.0) *
              (std::pow(b, theta + 1.0) - std::pow(a, theta + 1.0)),
          std::pow(b, theta + 2.0) - std::pow(a, theta + 2.0)};
}

// Where and how a parcel of particles with centroid zbar lands on the pivot
// grid. Interior parcels split across the bracketing pivots, preserving both
// number and mass; parcels whose centroid falls outside the pivot range are
// deposited mass-preserving onto the boundary pivot.
struct DepositStencil {
  std::size_t idx0;
  std::size_t idx1;  // == idx0 for single-pivot deposits
  double coef0;      // applied to the parcel number
  double coef1;
};

inline DepositStencil resolve_deposit(const Mesh& mesh, double zbar,
                                      double number_unit, double mass_unit) {
  const auto& c = mesh.centers();
  const std::size_t last = mesh.size() - 1;
  if (zbar <= c.front()) return {0, 0, mass_unit / c.front(), 0.0};
  if (zbar >= c.back()) return {last, last, mass_unit / c.back(), 0.0};
  const auto it = std::upper_bound(c.begin(), c.end(), zbar);
  const std::size_t k = static_cast<std::size_t>(it - c.begin()) - 1;
  const double f = (zbar - c[k]) / (c[k + 1] - c[k]);
  return {k, k + 1, number_unit * (1.0 - f), number_unit * f};
}

inline void deposit_point(const Mesh& mesh, double zbar, double number,
                          std::span<double> acc) {
  if (number == 0.0) return;
  const DepositStencil s = resolve_deposit(mesh, zbar, number, number * zbar);
  acc[s.idx0] += s.coef0;
  if (s.idx1 != s.idx0) acc[s.idx1] += s.coef1;
}

}  // namespace detail

// Evaluator for the truncated collision operators on a fixed (mesh, kernel)
// pair. Kernel and efficiency tables and the per-cell daughter deposition
// stencils are precomputed once; apply() is then O(N^2) per call.
//
// Discretization: the operators are assembled collision-wise. Each ordered
// pair of cells (j, k) carries the collision measure
//   G_jk = Phi_n(c_j, c_k) g_j g_k w_j w_k,
// split between coalescence (weight E) and breakage (weight E1 = 1 - E).
// A coalescence deposits one particle of volume s = c_j + c_k, split over
// the two pivots bracketing s so that number and mass are both preserved.
// A breakage deposits the exact daughter-distribution integrals of each
// mesh cell below s at the cell's daughter centroid, again pivot-split.
// Pairs with s > n deposit nothing (their mass is the truncation flux),
// and daughter mass below z_min is dropped and accounted separately. As a
// consequence the discrete mass balance
//   d/dt M1 = -(mass_flux_out + subgrid_mass_loss)
// holds to rounding error, which is what the moment-law checks rely on.
//
// Chunked accumulation keeps results bit-identical for any thread count:
// work is split into fixed-size row chunks merged in index order.
class CollisionOperator {
 public:
  CollisionOperator(std::shared_ptr<const Mesh> mesh, const KernelSpec& spec,
                    int threads = 1)
      : mesh_(std::move(mesh)), spec_(spec), threads_(threads) {
    if (!mesh_) throw std::invalid_argument("CollisionOperator: null mesh");
    spec_.validate();
    const Mesh& m = *mesh_;
    const std::size_t nc = m.size();
    phi_.resize(nc * nc);
    ecoal_.resize(nc * nc);
    for (std::size_t i = 0; i < nc; ++i) {
      for (std::size_t j = i; j < nc; ++j) {
        const double p = phi_truncated(m.center(i), m.center(j), m.n(), spec_);
        const double e =
            efficiency(m.center(i), m.center(j), spec_.efficiency).coalesce;
        phi_[i * nc + j] = phi_[j * nc + i] = p;
        ecoal_[i * nc + j] = ecoal_[j * nc + i] = e;
      }
    }
    stencils_.reserve(nc);
    for (std::size_t i = 0; i < nc; ++i) {
      const auto pf = detail::piece_factors(m.left(i), m.right(i), spec_.theta);
      stencils_.push_back(
          detail::resolve_deposit(m, pf.mass / pf.number, pf.number, pf.mass));
    }
    subgrid_mass_factor_ = std::pow(m.z_min(), spec_.theta + 2.0);
  }

  const Mesh& mesh() const { return *mesh_; }
  const KernelSpec& spec() const { return spec_; }
  int threads() const { return threads_; }

  OperatorOutput apply(const DensityField& g) const {
    check_field(g);
    const Mesh& m = *mesh_;
    const std::size_t nc = m.size();
    const auto& c = m.centers();
    const auto& w = m.widths();
    const double n = m.n();
    const double theta = spec_.theta;

    std::vector<double> u(nc);
    for (std::size_t i = 0; i < nc; ++i) u[i] = g.values[i] * w[i];

    OperatorOutput out;
    out.gain_coag.assign(nc, 0.0);
    out.loss.assign(nc, 0.0);
    out.gain_break.assign(nc, 0.0);
    out.rhs.assign(nc, 0.0);

    // Collision loss: g(z) * integral_0^n Phi_n(z, z1) g(z1) dz1. Output
    // cells are disjoint, so this parallelizes without merge.
    for_each_chunk(nc, threads_, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const double* row = phi_.data() + i * nc;
        double acc = 0.0;
        for (std::size_t j = 0; j < nc; ++j) acc += row[j] * u[j];
        out.loss[i] = g.values[i] * acc;
      }
    });

    // Pair pass over j <= k, chunked by row and merged in chunk order.
    struct ChunkAcc {
      std::vector<double> coag;
      std::vector<double> top;
      std::vector<double> bucket;
      double flux = 0.0;
      double sub = 0.0;
    };
    const std::size_t nchunks = chunk_count(nc);
    std::vector<ChunkAcc> accs(nchunks);
    for_each_chunk(nc, threads_, [&](std::size_t ci, std::size_t b, std::size_t e) {
      ChunkAcc& a = accs[ci];
      a.coag.assign(nc, 0.0);
      a.top.assign(nc, 0.0);
      a.bucket.assign(nc, 0.0);
      for (std::size_t j = b; j < e; ++j) {
        if (u[j] == 0.0) continue;
        const double* row = phi_.data() + j * nc;
        const double* erow = ecoal_.data() + j * nc;
        for (std::size_t k = j; k < nc; ++k) {
          const double mult =
              (j == k ? 0.5 : 1.0) * row[k] * u[j] * u[k];
          if (mult == 0.0) continue;
          const double s = c[j] + c[k];
          if (s > n) {
            a.flux += s * mult;
            continue;
          }
          const double ec = erow[k];
          if (ec != 0.0) detail::deposit_point(m, s, ec * mult, a.coag);
          const double eb = 1.0 - ec;
          if (eb != 0.0) {
            const double q = eb * mult *
                             (theta == 0.0 ? 1.0 / s : std::pow(s, -(theta + 1.0)));
            const std::size_t ms = m.locate(s);
            a.bucket[ms] += q;
            const auto pf = detail::piece_factors(m.left(ms), s, theta);
            if (pf.number != 0.0)
              detail::deposit_point(m, pf.mass / pf.number, pf.number * q, a.top);
            a.sub += q * subgrid_mass_factor_;
          }
        }
      }
    });

    std::vector<double> y_coag(nc, 0.0);
    std::vector<double> y_break(nc, 0.0);
    std::vector<double> bucket(nc, 0.0);
    for (const ChunkAcc& a : accs) {
      for (std::size_t i = 0; i < nc; ++i) {
        y_coag[i] += a.coag[i];
        y_break[i] += a.top[i];
        bucket[i] += a.bucket[i];
      }
      out.mass_flux_out += a.flux;
      out.subgrid_mass_loss += a.sub;
    }

    // Bulk daughters: every cell strictly below a pair's top cell receives
    // its full distribution integral. Suffix-summed per top cell.
    double suffix = 0.0;
    for (std::size_t i = nc; i-- > 0;) {
      if (suffix != 0.0) {
        const detail::DepositStencil& st = stencils_[i];
        y_break[st.idx0] += st.coef0 * suffix;
        if (st.idx1 != st.idx0) y_break[st.idx1] += st.coef1 * suffix;
      }
      suffix += bucket[i];
    }

    for (std::size_t i = 0; i < nc; ++i) {
      out.gain_coag[i] = y_coag[i] / w[i];
      out.gain_break[i] = y_break[i] / w[i];
      out.rhs[i] = out.gain_coag[i] - out.loss[i] + out.gain_break[i];
    }
    return out;
  }

  // Moment rate d/dt M_r in the symmetrized weak form: collision-wise
  //   1/2 sum sum [ indicator(s <= n) (E s^r + E1 pm(r, s)) - c_j^r - c_k^r ] G_jk
  // with pm the closed-form daughter moment. This is the form the a-priori
  // moment estimates manipulate; it is not assembled from apply().
  double weak_moment_rate(const DensityField& g, double r) const {
    check_field(g);
    const Mesh& m = *mesh_;
    const std::size_t nc = m.size();
    const auto& c = m.centers();
    const auto& w = m.widths();
    const double n = m.n();
    const double theta = spec_.theta;
    if (!(r > -1.0 - theta))
      throw std::domain_error(
          "weak_moment_rate: breakage moment diverges for r <= -(1+theta)");
    const double pm_coef = (theta + 2.0) / (r + theta + 1.0);

    std::vector<double> cr(nc);
    for (std::size_t i = 0; i < nc; ++i) cr[i] = std::pow(c[i], r);

    double acc = 0.0;
    for (std::size_t j = 0; j < nc; ++j) {
      const double uj = g.values[j] * w[j];
      if (uj == 0.0) continue;
      const double* row = phi_.data() + j * nc;
      const double* erow = ecoal_.data() + j * nc;
      for (std::size_t k = j; k < nc; ++k) {
        const double mult = (j == k ? 0.5 : 1.0) * row[k] * uj * g.values[k] * w[k];
        if (mult == 0.0) continue;
        const double s = c[j] + c[k];
        double term = -(cr[j] + cr[k]) * mult;
        if (s <= n) {
          const double sr = std::pow(s, r);
          const double ec = erow[k];
          term += (ec * sr + (1.0 - ec) * pm_coef * sr) * mult;
        }
        acc += term;
      }
    }
    return acc;
  }

 private:
  void check_field(const DensityField& g) const {
    if (!g.mesh) throw std::invalid_argument("operator: field has null mesh");
    if (g.mesh.get() != mesh_.get() && !g.mesh->same_grid(*mesh_))
      throw std::invalid_argument("operator: field mesh does not match");
    if (g.values.size() != mesh_->size())
      throw std::invalid_argument("operator: field size does not match mesh");
  }

  std::shared_ptr<const Mesh> mesh_;
  KernelSpec spec_;
  int threads_;
  std::vector<double> phi_;
  std::vector<double> ecoal_;
  std::vector<detail::DepositStencil> stencils_;
  double subgrid_mass_factor_ = 0.0;
};

// Reference evaluation: the same collision-wise quadrature computed by
// direct nested loops over cells, with no kernel tables, no suffix
// accumulation and no chunking. Serves as the correctness oracle for
// CollisionOperator::apply.
inline OperatorOutput brute_force_rhs(const DensityField& g, const KernelSpec& spec) {
  spec.validate();
  if (!g.mesh) throw std::invalid_argument("brute_force_rhs: field has null mesh");
  const Mesh& m = *g.mesh;
  const std::size_t nc = m.size();
  if (nc > 512)
    throw ConstraintError("brute_force_rhs: refusing meshes larger than 512 cells");
  const auto& c = m.centers();
  const auto& w = m.widths();
  const double n = m.n();
  const double theta = spec.theta;
  const double subgrid_mass = std::pow(m.z_min(), theta + 2.0);

  OperatorOutput out;
  out.gain_coag.assign(nc, 0.0);
  out.loss.assign(nc, 0.0);
  out.gain_break.assign(nc, 0.0);
  out.rhs.assign(nc, 0.0);

  std::vector<double> y_coag(nc, 0.0);
  std::vector<double> y_break(nc, 0.0);

  for (std::size_t i = 0; i < nc; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < nc; ++j)
      acc += phi_truncated(c[i], c[j], n, spec) * g.values[j] * w[j];
    out.loss[i] = g.values[i] * acc;
  }

  for (std::size_t j = 0; j < nc; ++j) {
    for (std::size_t k = j; k < nc; ++k) {
      const double mult = (j == k ? 0.5 : 1.0) *
                          phi_truncated(c[j], c[k], n, spec) * g.values[j] *
                          w[j] * g.values[k] * w[k];
      if (mult == 0.0) continue;
      const double s = c[j] + c[k];
      if (s > n) {
        out.mass_flux_out += s * mult;
        continue;
      }
      const auto eff = efficiency(c[j], c[k], spec.efficiency);
      if (eff.coalesce != 0.0)
        detail::deposit_point(m, s, eff.coalesce * mult, y_coag);
      if (eff.breakup != 0.0) {
        const double rate = eff.breakup * mult;
        const double q = rate * (theta == 0.0 ? 1.0 / s : std::pow(s, -(theta + 1.0)));
        const std::size_t ms = m.locate(s);
        for (std::size_t i = 0; i < ms; ++i) {
          const auto pf = detail::piece_factors(m.left(i), m.right(i), theta);
          detail::deposit_point(m, pf.mass / pf.number, pf.number * q, y_break);
        }
        const auto pf = detail::piece_factors(m.left(ms), s, theta);
        if (pf.number != 0.0)
          detail::deposit_point(m, pf.mass / pf.number, pf.number * q, y_break);
        out.subgrid_mass_loss += q * subgrid_mass;
      }
    }
  }

  for (std::size_t i = 0; i < nc; ++i) {
    out.gain_coag[i] = y_coag[i] / w[i];
    out.gain_break[i] = y_break[i] / w[i];
    out.rhs[i] = out.gain_coag[i] - out.loss[i] + out.gain_break[i];
  }
  return out;
}

inline OperatorOutput rhs(const DensityField& g, const KernelSpec& spec,
                          int threads = 1) {
  return CollisionOperator(g.mesh, spec, threads).apply(g);
}

inline std::vector<double> coag_gain(const DensityField& g, const KernelSpec& spec) {
  return rhs(g, spec).gain_coag;
}

inline std::vector<double> collision_loss(const DensityField& g,
                                          const KernelSpec& spec) {
  return rhs(g, spec).loss;
}

inline std::vector<double> breakage_gain(const DensityField& g,
                                         const KernelSpec& spec) {
  return rhs(g, spec).gain_break;
}

inline double weak_moment_rate(const DensityField& g, const KernelSpec& spec,
                               double r) {
  return CollisionOperator(g.mesh, spec).weak_moment_rate(g, r);
}

}  // namespace colbreak
