// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFSBM_TENSOR_BASIS_HPP
#define MFSBM_TENSOR_BASIS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "mfsbm/common.hpp"

namespace mfsbm {

/// One-dimensional Gauss-Legendre rule mapped to [0,1]. Nodes are strictly
/// increasing and interior; weights are positive and sum to one.
struct Quadrature1D {
  std::vector<double> nodes;
  std::vector<double> weights;

  int size() const { return static_cast<int>(nodes.size()); }
};

/// n-point Gauss-Legendre rule on [0,1], exact for polynomials of degree
/// 2n-1. Nodes and weights are converged to machine precision by Newton
/// iteration on the Legendre recurrence.
Quadrature1D gauss_quadrature_1d(int n);

/// The p+1 Gauss-Lobatto points on [0,1] (endpoints included), used as
/// Lagrange support points of the degree-p basis.
std::vector<double> gauss_lobatto_points(int degree);

/// Values and derivatives of the 1D Lagrange basis (on Gauss-Lobatto support
/// points) tabulated at the quadrature points: N[q][i] = phi_i(x_q),
/// D[q][i] = phi_i'(x_q). Immutable after construction and shareable across
/// threads.
class ShapeMatrices1D {
 public:
  ShapeMatrices1D(int degree, Quadrature1D quadrature);

  int degree() const { return degree_; }
  int num_basis() const { return degree_ + 1; }
  int num_points() const { return quadrature_.size(); }
  const Quadrature1D &quadrature() const { return quadrature_; }
  std::span<const double> support_points() const { return support_points_; }

  double value(int q, int i) const { return values_[q * num_basis() + i]; }
  double derivative(int q, int i) const { return derivatives_[q * num_basis() + i]; }
  std::span<const double> value_row(int q) const {
    return {values_.data() + q * num_basis(), static_cast<std::size_t>(num_basis())};
  }
  std::span<const double> values() const { return values_; }
  std::span<const double> derivatives() const { return derivatives_; }

  /// Basis values at the face coordinate 0 or 1.
  std::span<const double> boundary_values(int side) const { return boundary_values_[side]; }
  /// Basis derivatives at the face coordinate 0 or 1.
  std::span<const double> boundary_derivatives(int side) const {
    return boundary_derivatives_[side];
  }

  /// Basis values at an arbitrary coordinate, which may lie outside [0,1]
  /// (polynomial extrapolation). out must hold degree+1 entries.
  void values_at(double x, std::span<double> out) const;
  /// Basis derivatives at an arbitrary coordinate.
  void derivatives_at(double x, std::span<double> out) const;

 private:
  int degree_;
  Quadrature1D quadrature_;
  std::vector<double> support_points_;
  std::vector<double> values_;       // num_points x num_basis, row-major
  std::vector<double> derivatives_;  // num_points x num_basis, row-major
  std::array<std::vector<double>, 2> boundary_values_;
  std::array<std::vector<double>, 2> boundary_derivatives_;
};

/// Coefficients of a tensor-product polynomial on the reference cell
/// [0,1]^dim, stored lexicographically (first coordinate index fastest).
struct CellTensor {
  int degree = 0;
  int dim = 0;
  std::vector<double> coefficients;

  CellTensor() = default;
  CellTensor(int degree, int dim);

  int size() const { return static_cast<int>(coefficients.size()); }
};

/// Returns (degree+1)^dim.
int tensor_size(int degree, int dim);

/// Values and reference-cell gradients at tensor quadrature points, stored
/// lexicographically. Gradients use component-major layout:
/// gradients[c * num_points + q]. Either array may be empty when the
/// corresponding data was not requested or not provided.
struct QuadPointField {
  int dim = 0;
  int num_points = 0;
  std::vector<double> values;
  std::vector<double> gradients;

  double gradient(int component, int q) const { return gradients[component * num_points + q]; }
};

/// Operation counter following the fused multiply-add convention: one madd is
/// one operation; gather/scatter and index arithmetic are not counted.
using OpCount = std::uint64_t;

/// Evaluate a cell tensor at all tensor quadrature points by dim sequential
/// one-dimensional contractions (sum factorization). Reference-cell
/// gradients are produced when requested. The madd count is accumulated into
/// *ops when non-null.
QuadPointField evaluate_cell(const CellTensor &coefficients, const ShapeMatrices1D &sm,
                             bool want_gradients, OpCount *ops = nullptr,
                             bool want_values = true);

/// Transpose of evaluate_cell: tests the submitted integrand against basis
/// values (field.values) and basis gradients (field.gradients). The caller
/// premultiplies quadrature weights and Jacobian factors.
CellTensor integrate_cell(const QuadPointField &field, const ShapeMatrices1D &sm,
                          OpCount *ops = nullptr);

/// Traces of values and full reference gradients at the (degree+1)^(dim-1)
/// quadrature points of the face {x_face_axis = face_side}. Face points are
/// ordered lexicographically over the tangential axes in ascending axis
/// order.
QuadPointField evaluate_face_traces(const CellTensor &coefficients, const ShapeMatrices1D &sm,
                                    int face_axis, int face_side, OpCount *ops = nullptr);

/// Transpose of evaluate_face_traces restricted to the two slots the face
/// kernels use: value_terms are tested against phi_i on the face and
/// normal_deriv_terms against the outward normal derivative of phi_i (in
/// reference coordinates; the outward normal is -e_axis on side 0 and
/// +e_axis on side 1). Terms are premultiplied by face weights and surface
/// Jacobian by the caller. Either span may be empty.
CellTensor integrate_face(std::span<const double> value_terms,
                          std::span<const double> normal_deriv_terms, const ShapeMatrices1D &sm,
                          int dim, int face_axis, int face_side, OpCount *ops = nullptr);

/// Exact evaluation of the tensor-product polynomial at an arbitrary
/// reference point, which may lie outside [0,1]^dim (extrapolation). Records
/// (degree+1)^dim operations for a value evaluation, the cost model of a
/// standard point evaluation; (1+dim)x that when the gradient is requested.
/// The gradient output is in reference coordinates.
double point_evaluate(const CellTensor &coefficients, const ShapeMatrices1D &sm,
                      const Point &ref_point, Point *gradient = nullptr, OpCount *ops = nullptr);

}  // namespace mfsbm

#endif  // MFSBM_TENSOR_BASIS_HPP
