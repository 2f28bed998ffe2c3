// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFSBM_GEOMETRY_HPP
#define MFSBM_GEOMETRY_HPP

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mfsbm/common.hpp"
#include "mfsbm/mesh.hpp"
#include "mfsbm/tensor_basis.hpp"

namespace mfsbm {

/// Implicit geometry: the domain is { phi < 0 }, its boundary the zero set.
class LevelSet {
 public:
  virtual ~LevelSet() = default;

  virtual int dim() const = 0;
  virtual double phi(const Point &x) const = 0;
  virtual Point grad_phi(const Point &x) const = 0;

  /// Analytic closest-point projection where the shape provides one;
  /// std::nullopt falls back to the Newton path.
  virtual std::optional<Point> analytic_projection(const Point &) const { return std::nullopt; }

  /// Shapes with resolution requirements reject meshes that cannot separate
  /// their features; h is the smallest cell extent.
  virtual void validate_resolution(double /*h*/) const {}
};

class Ball final : public LevelSet {
 public:
  Ball(int dim, const Point &center, double radius);

  int dim() const override { return dim_; }
  double phi(const Point &x) const override;
  Point grad_phi(const Point &x) const override;
  std::optional<Point> analytic_projection(const Point &x) const override;

  const Point &center() const { return center_; }
  double radius() const { return radius_; }

 private:
  int dim_;
  Point center_;
  double radius_;
};

/// min over balls of (|x - c_i| - R_i); gradient and projection from the
/// arg-min ball, ties broken by lowest index. Projection is valid for balls
/// whose surfaces are well separated.
class UnionOfBalls final : public LevelSet {
 public:
  explicit UnionOfBalls(std::vector<Ball> balls);

  int dim() const override;
  double phi(const Point &x) const override;
  Point grad_phi(const Point &x) const override;
  std::optional<Point> analytic_projection(const Point &x) const override;
  /// Nearest-surface projection needs ball surfaces separated by more than
  /// 2h; closer configurations are rejected.
  void validate_resolution(double h) const override;

  std::span<const Ball> balls() const { return balls_; }

 private:
  int nearest_surface(const Point &x) const;
  std::vector<Ball> balls_;
};

/// Damped Newton iteration on (phi(y) = 0, tangential residual = 0). Steps
/// halve up to 8 times on residual increase; at most 50 iterations. Throws
/// ProjectionFailedError when the residual conditions |phi(y)| <= 1e-12 and
/// angle(y - x, grad phi(y)) <= 1e-8 are not met at the iteration cap.
Point closest_point_newton(const LevelSet &levelset, const Point &x);

/// Closest point on the zero level set: the analytic formula when the shape
/// provides one, the Newton path otherwise.
Point closest_point_projection(const LevelSet &levelset, const Point &x);

/// Precomputed geometric data for one surrogate boundary face: everything the
/// boundary kernel needs per quadrature point, stored so that the level set
/// is not consulted again after setup.
struct SurrogateFaceData {
  int face = 0;   // index into the face list
  int owner = 0;  // owner cell
  int axis = 0;
  int side = 0;
  int num_points = 0;
  // Per-point arrays; vector-valued entries use [q * dim + c] layout.
  std::vector<double> phys_point;      // surrogate point on the face
  std::vector<double> normal;          // outward surrogate normal
  std::vector<double> shift;           // projection(x) - x
  std::vector<double> ref_coords;      // projected point in owner reference frame
  std::vector<double> boundary_value;  // g at the projected point
  std::vector<double> weight;          // face measure times quadrature weight

  Point point(int q, int dim) const;
  Point shift_vector(int q, int dim) const;
  Point reference_coords(int q, int dim) const;

  /// Stored doubles per quadrature point: 4*dim + 2.
  static int doubles_per_point(int dim) { return 4 * dim + 2; }
};

/// Closest-point projections and reference coordinates for every quadrature
/// point of every surrogate face. Throws ShiftTooLargeError when a shift
/// exceeds 2 h sqrt(d) (under-resolved geometry) and propagates projection
/// failures. Output order follows the input face order.
std::vector<SurrogateFaceData> precompute_surrogate_data(
    const CartesianMesh &mesh, std::span<const FaceRecord> faces, const LevelSet &levelset,
    const Quadrature1D &face_quadrature, const std::function<double(const Point &)> &g);

/// The manufactured Poisson solution u = 2 cos(x1) sin(x2) with its gradient
/// and source f = -lap u.
struct ManufacturedSolution {
  std::function<double(const Point &)> u;
  std::function<Point(const Point &)> grad_u;
  std::function<double(const Point &)> f;
};

ManufacturedSolution manufactured_poisson_2d();

}  // namespace mfsbm

#endif  // MFSBM_GEOMETRY_HPP
