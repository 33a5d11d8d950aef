#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "colbreak/errors.hpp"

namespace colbreak {

enum class MeshKind { Uniform, Geometric };

// Discretization of the truncated volume range [z_min, n]. Cell centers act
// as pivots; quadrature is the midpoint rule. Immutable after construction.
class Mesh {
 public:
  Mesh(double z_min, double n, std::size_t cells, MeshKind kind)
      : z_min_(z_min), n_(n), kind_(kind) {
    if (!(z_min > 0.0) || !(z_min < n))
      throw ConstraintError("mesh requires 0 < z_min < n");
    if (cells < 1) throw ConstraintError("mesh requires at least one cell");
    edges_.resize(cells + 1);
    if (kind == MeshKind::Uniform) {
      const double h = (n - z_min) / static_cast<double>(cells);
      for (std::size_t i = 0; i <= cells; ++i)
        edges_[i] = z_min + h * static_cast<double>(i);
    } else {
      const double lg0 = std::log(z_min);
      const double step = (std::log(n) - lg0) / static_cast<double>(cells);
      for (std::size_t i = 0; i <= cells; ++i)
        edges_[i] = std::exp(lg0 + step * static_cast<double>(i));
    }
    edges_.front() = z_min;
    edges_.back() = n;
    centers_.resize(cells);
    widths_.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      if (!(edges_[i + 1] > edges_[i]))
        throw ConstraintError("mesh edges are not strictly increasing");
      centers_[i] = 0.5 * (edges_[i] + edges_[i + 1]);
      widths_[i] = edges_[i + 1] - edges_[i];
    }
  }

  std::size_t size() const { return centers_.size(); }
  double z_min() const { return z_min_; }
  double n() const { return n_; }
  MeshKind kind() const { return kind_; }
  const std::vector<double>& edges() const { return edges_; }
  const std::vector<double>& centers() const { return centers_; }
  const std::vector<double>& widths() const { return widths_; }
  double left(std::size_t i) const { return edges_[i]; }
  double right(std::size_t i) const { return edges_[i + 1]; }
  double center(std::size_t i) const { return centers_[i]; }
  double width(std::size_t i) const { return widths_[i]; }

  /// Index of the cell whose half-open interval (left, right] contains z.
  /// Precondition: z_min < z <= n.
  std::size_t locate(double z) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), z);
    std::size_t idx = static_cast<std::size_t>(it - edges_.begin());
    if (idx == 0) return 0;
    idx -= 1;
    return std::min(idx, size() - 1);
  }

  bool same_grid(const Mesh& other) const {
    return z_min_ == other.z_min_ && n_ == other.n_ && edges_ == other.edges_;
  }

 private:
  double z_min_;
  double n_;
  MeshKind kind_;
  std::vector<double> edges_;
  std::vector<double> centers_;
  std::vector<double> widths_;
};

inline std::shared_ptr<const Mesh> build_mesh(double z_min, double n,
                                              std::size_t cell_count,
                                              MeshKind kind) {
  return std::make_shared<const Mesh>(z_min, n, cell_count, kind);
}

/// Midpoint quadrature: sum_i values[i] * width[i]. Deterministic
/// left-to-right accumulation.
inline double quad(std::span<const double> values, const Mesh& mesh) {
  if (values.size() != mesh.size())
    throw std::invalid_argument("quad: value count does not match cell count");
  double acc = 0.0;
  const auto& w = mesh.widths();
  for (std::size_t i = 0; i < values.size(); ++i) acc += values[i] * w[i];
  return acc;
}

// A sampled particle-size distribution g(., t) on a mesh at one time.
struct DensityField {
  std::shared_ptr<const Mesh> mesh;
  std::vector<double> values;
  double time = 0.0;

  DensityField() = default;
  DensityField(std::shared_ptr<const Mesh> m, std::vector<double> v, double t)
      : mesh(std::move(m)), values(std::move(v)), time(t) {
    if (!mesh) throw std::invalid_argument("DensityField: null mesh");
    if (values.size() != mesh->size())
      throw std::invalid_argument("DensityField: value count does not match cell count");
  }

  static DensityField zero(std::shared_ptr<const Mesh> m, double t = 0.0) {
    std::vector<double> v(m->size(), 0.0);
    return DensityField(std::move(m), std::move(v), t);
  }
};

/// Moment M_r = integral z^r g dz over [z_min, n], midpoint rule.
inline double moment(const DensityField& field, double r) {
  const Mesh& m = *field.mesh;
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    acc += std::pow(m.center(i), r) * field.values[i] * m.width(i);
  return acc;
}

/// Point evaluation of a field: zero outside [z_min, n] (the zero extension
/// of the truncated solution), clamped to the first/last center value in the
/// boundary half-cells, linear interpolation between centers elsewhere.
inline double sample(const DensityField& field, double z) {
  const Mesh& m = *field.mesh;
  if (z < m.z_min() || z > m.n()) return 0.0;
  const auto& c = m.centers();
  if (z <= c.front()) return field.values.front();
  if (z >= c.back()) return field.values.back();
  auto it = std::upper_bound(c.begin(), c.end(), z);
  const std::size_t k = static_cast<std::size_t>(it - c.begin()) - 1;
  const double f = (z - c[k]) / (c[k + 1] - c[k]);
  return field.values[k] + f * (field.values[k + 1] - field.values[k]);
}

}  // namespace colbreak
