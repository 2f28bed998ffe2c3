// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFSBM_COMMON_HPP
#define MFSBM_COMMON_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mfsbm {

// Spatial points and vectors are padded to three components; entries past the
// active dimension are zero.
using Point = std::array<double, 3>;

inline double dot(const Point &a, const Point &b, int dim) {
  double s = 0.0;
  for (int c = 0; c < dim; ++c) {
    s += a[c] * b[c];
  }
  return s;
}

inline double norm(const Point &a, int dim) {
  double s = 0.0;
  for (int c = 0; c < dim; ++c) {
    s += a[c] * a[c];
  }
  return std::sqrt(s);
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cell classification produced no active cells; the geometry does not
/// intersect the background mesh in a usable way.
class NoActiveCellsError : public Error {
 public:
  using Error::Error;
};

/// Closest-point projection did not converge. Carries the query point and the
/// final residual for diagnosis.
class ProjectionFailedError : public Error {
 public:
  ProjectionFailedError(const Point &point, double residual, const std::string &what)
      : Error(what), point(point), residual(residual) {}
  Point point;
  double residual;
};

/// A surrogate-face quadrature point projects farther than the resolution
/// guard allows; the geometry is under-resolved by the mesh.
class ShiftTooLargeError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration (unknown keys, missing fields, bad values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfsbm

#endif  // MFSBM_COMMON_HPP
