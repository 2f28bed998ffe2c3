// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsbm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mfsbm {

Ball::Ball(int dim, const Point &center, double radius)
    : dim_(dim), center_(center), radius_(radius) {
  if (dim < 2 || dim > 3) {
    throw std::invalid_argument("Ball: dimension must be 2 or 3");
  }
  if (!(radius > 0.0)) {
    throw std::invalid_argument("Ball: radius must be positive");
  }
  for (int a = dim; a < 3; ++a) {
    center_[a] = 0.0;
  }
}

double Ball::phi(const Point &x) const {
  Point d = {0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) {
    d[a] = x[a] - center_[a];
  }
  return norm(d, dim_) - radius_;
}

Point Ball::grad_phi(const Point &x) const {
  Point d = {0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) {
    d[a] = x[a] - center_[a];
  }
  const double r = norm(d, dim_);
  if (r == 0.0) {
    // Gradient is undefined at the center; any unit vector serves callers in
    // the projection band, which excludes the center.
    Point g = {0.0, 0.0, 0.0};
    g[0] = 1.0;
    return g;
  }
  for (int a = 0; a < dim_; ++a) {
    d[a] /= r;
  }
  return d;
}

std::optional<Point> Ball::analytic_projection(const Point &x) const {
  Point d = {0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) {
    d[a] = x[a] - center_[a];
  }
  const double r = norm(d, dim_);
  if (r == 0.0) {
    throw ProjectionFailedError(x, radius_, "Ball projection undefined at the center");
  }
  Point y = center_;
  for (int a = 0; a < dim_; ++a) {
    y[a] += radius_ * d[a] / r;
  }
  return y;
}

UnionOfBalls::UnionOfBalls(std::vector<Ball> balls) : balls_(std::move(balls)) {
  if (balls_.empty()) {
    throw std::invalid_argument("UnionOfBalls: needs at least one ball");
  }
  for (const auto &ball : balls_) {
    if (ball.dim() != balls_.front().dim()) {
      throw std::invalid_argument("UnionOfBalls: mixed dimensions");
    }
  }
}

int UnionOfBalls::dim() const { return balls_.front().dim(); }

double UnionOfBalls::phi(const Point &x) const {
  double value = balls_.front().phi(x);
  for (std::size_t i = 1; i < balls_.size(); ++i) {
    value = std::min(value, balls_[i].phi(x));
  }
  return value;
}

Point UnionOfBalls::grad_phi(const Point &x) const {
  int arg_min = 0;
  double value = balls_.front().phi(x);
  for (std::size_t i = 1; i < balls_.size(); ++i) {
    const double v = balls_[i].phi(x);
    if (v < value) {
      value = v;
      arg_min = static_cast<int>(i);
    }
  }
  return balls_[arg_min].grad_phi(x);
}

int UnionOfBalls::nearest_surface(const Point &x) const {
  int best = 0;
  double best_distance = std::abs(balls_.front().phi(x));
  for (std::size_t i = 1; i < balls_.size(); ++i) {
    const double d = std::abs(balls_[i].phi(x));
    if (d < best_distance) {
      best_distance = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::optional<Point> UnionOfBalls::analytic_projection(const Point &x) const {
  return balls_[nearest_surface(x)].analytic_projection(x);
}

void UnionOfBalls::validate_resolution(double h) const {
  for (std::size_t i = 0; i < balls_.size(); ++i) {
    for (std::size_t j = i + 1; j < balls_.size(); ++j) {
      Point d = {0.0, 0.0, 0.0};
      for (int a = 0; a < dim(); ++a) {
        d[a] = balls_[i].center()[a] - balls_[j].center()[a];
      }
      const double gap = norm(d, dim()) - balls_[i].radius() - balls_[j].radius();
      if (gap <= 2.0 * h) {
        std::ostringstream msg;
        msg << "union of balls: surfaces of balls " << i << " and " << j << " are "
            << gap << " apart, needs more than 2h = " << 2.0 * h;
        throw ConfigError(msg.str());
      }
    }
  }
}

namespace {

// Residual components of the projection system: phi(y) and the tangential
// part of y - x (the normal-parallelism defect).
struct ProjectionResidual {
  double phi;
  Point tangential;
  double norm_inf;
};

ProjectionResidual projection_residual(const LevelSet &levelset, const Point &x, const Point &y) {
  const int dim = levelset.dim();
  ProjectionResidual r{};
  r.phi = levelset.phi(y);
  Point n = levelset.grad_phi(y);
  const double n_norm = norm(n, dim);
  for (int a = 0; a < dim; ++a) {
    n[a] /= n_norm;
  }
  Point d = {0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    d[a] = y[a] - x[a];
  }
  const double dn = dot(d, n, dim);
  r.tangential = {0.0, 0.0, 0.0};
  r.norm_inf = std::abs(r.phi);
  for (int a = 0; a < dim; ++a) {
    r.tangential[a] = d[a] - dn * n[a];
    r.norm_inf = std::max(r.norm_inf, std::abs(r.tangential[a]));
  }
  return r;
}

}  // namespace

Point closest_point_newton(const LevelSet &levelset, const Point &x) {
  const int dim = levelset.dim();
  constexpr int max_iterations = 50;
  constexpr int max_halvings = 8;
  constexpr double residual_tolerance = 1e-13;

  Point y = x;
  ProjectionResidual residual = projection_residual(levelset, x, y);
  for (int iter = 0; iter < max_iterations; ++iter) {
    if (residual.norm_inf <= residual_tolerance) {
      break;
    }
    Point n = levelset.grad_phi(y);
    const double n_norm = norm(n, dim);
    for (int a = 0; a < dim; ++a) {
      n[a] /= n_norm;
    }
    // Newton step for phi along the normal, plus removal of the tangential
    // defect.
    Point step = {0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
      step[a] = -(residual.phi / n_norm) * n[a] - residual.tangential[a];
    }

    double scale = 1.0;
    Point y_next = y;
    ProjectionResidual next{};
    for (int halving = 0; halving <= max_halvings; ++halving) {
      for (int a = 0; a < dim; ++a) {
        y_next[a] = y[a] + scale * step[a];
      }
      next = projection_residual(levelset, x, y_next);
      if (next.norm_inf < residual.norm_inf || halving == max_halvings) {
        break;
      }
      scale *= 0.5;
    }
    y = y_next;
    residual = next;
  }

  // Exit conditions: on the boundary and normal-parallel within tolerance.
  const double angle_defect = [&] {
    Point d = {0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
      d[a] = y[a] - x[a];
    }
    const double d_norm = norm(d, dim);
    if (d_norm < 1e-12) {
      return 0.0;  // x is on the boundary; direction unconstrained
    }
    Point n = levelset.grad_phi(y);
    const double n_norm = norm(n, dim);
    const double cosine = std::abs(dot(d, n, dim)) / (d_norm * n_norm);
    return std::max(0.0, 1.0 - cosine);
  }();

  if (std::abs(levelset.phi(y)) > 1e-12 || angle_defect > 1e-8) {
    std::ostringstream msg;
    msg << "closest-point projection did not converge at (" << x[0] << ", " << x[1] << ", "
        << x[2] << "): residual " << residual.norm_inf;
    throw ProjectionFailedError(x, residual.norm_inf, msg.str());
  }
  return y;
}

Point closest_point_projection(const LevelSet &levelset, const Point &x) {
  if (auto projected = levelset.analytic_projection(x)) {
    return *projected;
  }
  return closest_point_newton(levelset, x);
}

Point SurrogateFaceData::point(int q, int dim) const {
  Point p = {0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    p[a] = phys_point[static_cast<std::size_t>(q) * dim + a];
  }
  return p;
}

Point SurrogateFaceData::shift_vector(int q, int dim) const {
  Point p = {0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    p[a] = shift[static_cast<std::size_t>(q) * dim + a];
  }
  return p;
}

Point SurrogateFaceData::reference_coords(int q, int dim) const {
  Point p = {0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    p[a] = ref_coords[static_cast<std::size_t>(q) * dim + a];
  }
  return p;
}

std::vector<SurrogateFaceData> precompute_surrogate_data(
    const CartesianMesh &mesh, std::span<const FaceRecord> faces, const LevelSet &levelset,
    const Quadrature1D &face_quadrature, const std::function<double(const Point &)> &g) {
  const int dim = mesh.dim();
  const int nq_1d = face_quadrature.size();
  int face_points = 1;
  for (int a = 0; a < dim - 1; ++a) {
    face_points *= nq_1d;
  }
  const double max_shift = 2.0 * mesh.min_cell_size() * std::sqrt(static_cast<double>(dim));

  std::vector<SurrogateFaceData> result;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const FaceRecord &face = faces[f];
    if (face.kind != FaceKind::surrogate) {
      continue;
    }
    SurrogateFaceData data;
    data.face = static_cast<int>(f);
    data.owner = face.owner;
    data.axis = face.axis;
    data.side = face.side;
    data.num_points = face_points;
    data.phys_point.resize(static_cast<std::size_t>(face_points) * dim);
    data.normal.resize(static_cast<std::size_t>(face_points) * dim);
    data.shift.resize(static_cast<std::size_t>(face_points) * dim);
    data.ref_coords.resize(static_cast<std::size_t>(face_points) * dim);
    data.boundary_value.resize(face_points);
    data.weight.resize(face_points);

    const Point normal = face.surrogate_normal(dim);
    const double area = mesh.face_area(face.axis);

    std::array<int, 2> tangential = {-1, -1};
    int t = 0;
    for (int a = 0; a < dim; ++a) {
      if (a != face.axis) {
        tangential[t++] = a;
      }
    }

    for (int q = 0; q < face_points; ++q) {
      // Tangential axes in ascending order, the first one fastest, matching
      // the face trace layout of the tensor kernels.
      Point ref = {0.0, 0.0, 0.0};
      ref[face.axis] = static_cast<double>(face.side);
      double quad_weight = 1.0;
      int rest = q;
      for (int k = 0; k < dim - 1; ++k) {
        const int node = rest % nq_1d;
        rest /= nq_1d;
        ref[tangential[k]] = face_quadrature.nodes[node];
        quad_weight *= face_quadrature.weights[node];
      }
      const Point surrogate_point = mesh.to_physical(face.owner, ref);
      const Point projected = closest_point_projection(levelset, surrogate_point);

      Point shift = {0.0, 0.0, 0.0};
      for (int a = 0; a < dim; ++a) {
        shift[a] = projected[a] - surrogate_point[a];
      }
      if (norm(shift, dim) > max_shift) {
        std::ostringstream msg;
        msg << "surrogate shift " << norm(shift, dim) << " exceeds resolution guard "
            << max_shift << " on face " << f << " point " << q;
        throw ShiftTooLargeError(msg.str());
      }

      const Point ref_projected = mesh.to_reference(face.owner, projected);
      for (int a = 0; a < dim; ++a) {
        data.phys_point[static_cast<std::size_t>(q) * dim + a] = surrogate_point[a];
        data.normal[static_cast<std::size_t>(q) * dim + a] = normal[a];
        data.shift[static_cast<std::size_t>(q) * dim + a] = shift[a];
        data.ref_coords[static_cast<std::size_t>(q) * dim + a] = ref_projected[a];
      }
      data.boundary_value[q] = g ? g(projected) : 0.0;
      data.weight[q] = quad_weight * area;
    }
    result.push_back(std::move(data));
  }
  return result;
}

ManufacturedSolution manufactured_poisson_2d() {
  ManufacturedSolution sol;
  sol.u = [](const Point &x) { return 2.0 * std::cos(x[0]) * std::sin(x[1]); };
  sol.grad_u = [](const Point &x) {
    return Point{-2.0 * std::sin(x[0]) * std::sin(x[1]), 2.0 * std::cos(x[0]) * std::cos(x[1]),
                 0.0};
  };
  sol.f = [](const Point &x) { return 4.0 * std::cos(x[0]) * std::sin(x[1]); };
  return sol;
}

}  // namespace mfsbm
