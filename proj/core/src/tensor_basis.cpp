// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsbm/tensor_basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mfsbm {

namespace {

// Legendre polynomial P_n and its derivative on [-1,1] via the three-term
// recurrence. The derivative formula requires |x| != 1.
std::pair<double, double> legendre(int n, double x) {
  if (n == 0) {
    return {1.0, 0.0};
  }
  double p_prev = 1.0;
  double p = x;
  for (int k = 2; k <= n; ++k) {
    const double p_next = ((2 * k - 1) * x * p - (k - 1) * p_prev) / k;
    p_prev = p;
    p = p_next;
  }
  const double dp = n * (x * p - p_prev) / (x * x - 1.0);
  return {p, dp};
}

// Second derivative from the Legendre differential equation.
double legendre_second_derivative(int n, double x, double p, double dp) {
  return (2.0 * x * dp - n * (n + 1) * p) / (1.0 - x * x);
}

}  // namespace

Quadrature1D gauss_quadrature_1d(int n) {
  if (n < 1) {
    throw std::invalid_argument("gauss_quadrature_1d: n must be >= 1");
  }
  Quadrature1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Root approximations descend in x as i grows, so filling from the back
    // yields ascending nodes on [0,1].
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        break;
      }
    }
    const double dp = legendre(n, x).second;
    const double weight = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 0.5 * weight;
  }
  return rule;
}

std::vector<double> gauss_lobatto_points(int degree) {
  if (degree < 1) {
    throw std::invalid_argument("gauss_lobatto_points: degree must be >= 1");
  }
  std::vector<double> points(degree + 1);
  points.front() = 0.0;
  points.back() = 1.0;
  // Interior points are the roots of P'_degree.
  for (int i = 1; i < degree; ++i) {
    double x = std::cos(std::numbers::pi * i / degree);
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(degree, x);
      const double ddp = legendre_second_derivative(degree, x, p, dp);
      const double dx = dp / ddp;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        break;
      }
    }
    points[degree - i] = 0.5 * (x + 1.0);
  }
  return points;
}

ShapeMatrices1D::ShapeMatrices1D(int degree, Quadrature1D quadrature)
    : degree_(degree), quadrature_(std::move(quadrature)) {
  if (degree < 1) {
    throw std::invalid_argument("ShapeMatrices1D: degree must be >= 1");
  }
  if (quadrature_.size() < 1) {
    throw std::invalid_argument("ShapeMatrices1D: quadrature must have >= 1 point");
  }
  support_points_ = gauss_lobatto_points(degree);

  const int n = num_basis();
  values_.resize(static_cast<std::size_t>(num_points()) * n);
  derivatives_.resize(static_cast<std::size_t>(num_points()) * n);
  for (int q = 0; q < num_points(); ++q) {
    values_at(quadrature_.nodes[q], {values_.data() + q * n, static_cast<std::size_t>(n)});
    derivatives_at(quadrature_.nodes[q],
                   {derivatives_.data() + q * n, static_cast<std::size_t>(n)});
  }
  for (int side = 0; side < 2; ++side) {
    boundary_values_[side].resize(n);
    boundary_derivatives_[side].resize(n);
    values_at(static_cast<double>(side), boundary_values_[side]);
    derivatives_at(static_cast<double>(side), boundary_derivatives_[side]);
  }
}

void ShapeMatrices1D::values_at(double x, std::span<double> out) const {
  const int n = num_basis();
  for (int i = 0; i < n; ++i) {
    double v = 1.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) {
        v *= (x - support_points_[j]) / (support_points_[i] - support_points_[j]);
      }
    }
    out[i] = v;
  }
}

void ShapeMatrices1D::derivatives_at(double x, std::span<double> out) const {
  const int n = num_basis();
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int m = 0; m < n; ++m) {
      if (m == i) {
        continue;
      }
      double term = 1.0 / (support_points_[i] - support_points_[m]);
      for (int j = 0; j < n; ++j) {
        if (j != i && j != m) {
          term *= (x - support_points_[j]) / (support_points_[i] - support_points_[j]);
        }
      }
      sum += term;
    }
    out[i] = sum;
  }
}

int tensor_size(int degree, int dim) {
  int size = 1;
  for (int a = 0; a < dim; ++a) {
    size *= degree + 1;
  }
  return size;
}

CellTensor::CellTensor(int degree, int dim)
    : degree(degree), dim(dim), coefficients(tensor_size(degree, dim), 0.0) {}

namespace {

struct TensorShape {
  int dim = 0;
  std::array<int, 3> extent = {1, 1, 1};

  int size() const {
    int s = 1;
    for (int a = 0; a < dim; ++a) {
      s *= extent[a];
    }
    return s;
  }
};

// dst[..., r, ...] = sum_c M[r * n_cols + c] * src[..., c, ...] along `axis`.
// src has extent n_cols along axis; dst gets extent n_rows. Returns the madd
// count. src and dst must not alias.
OpCount contract_axis(const double *M, int n_rows, int n_cols, const TensorShape &src_shape,
                      int axis, const double *src, double *dst) {
  int inner = 1;
  for (int a = 0; a < axis; ++a) {
    inner *= src_shape.extent[a];
  }
  int outer = 1;
  for (int a = axis + 1; a < src_shape.dim; ++a) {
    outer *= src_shape.extent[a];
  }
  for (int o = 0; o < outer; ++o) {
    const double *src_block = src + static_cast<std::size_t>(o) * n_cols * inner;
    double *dst_block = dst + static_cast<std::size_t>(o) * n_rows * inner;
    for (int r = 0; r < n_rows; ++r) {
      double *dst_slice = dst_block + static_cast<std::size_t>(r) * inner;
      std::fill(dst_slice, dst_slice + inner, 0.0);
      for (int c = 0; c < n_cols; ++c) {
        const double m = M[r * n_cols + c];
        const double *src_slice = src_block + static_cast<std::size_t>(c) * inner;
        for (int k = 0; k < inner; ++k) {
          dst_slice[k] += m * src_slice[k];
        }
      }
    }
  }
  return static_cast<OpCount>(outer) * n_rows * n_cols * inner;
}

// dst[..., r, ...] += row[r] * src[...]: inverse of a face collapse, placing a
// (dim-1)-tensor back into a dim-tensor along `axis`.
OpCount expand_axis(std::span<const double> row, double sign, const TensorShape &dst_shape,
                    int axis, const double *src, double *dst) {
  int inner = 1;
  for (int a = 0; a < axis; ++a) {
    inner *= dst_shape.extent[a];
  }
  int outer = 1;
  for (int a = axis + 1; a < dst_shape.dim; ++a) {
    outer *= dst_shape.extent[a];
  }
  const int n = dst_shape.extent[axis];
  for (int o = 0; o < outer; ++o) {
    const double *src_block = src + static_cast<std::size_t>(o) * inner;
    double *dst_block = dst + static_cast<std::size_t>(o) * n * inner;
    for (int r = 0; r < n; ++r) {
      const double m = sign * row[r];
      double *dst_slice = dst_block + static_cast<std::size_t>(r) * inner;
      for (int k = 0; k < inner; ++k) {
        dst_slice[k] += m * src_block[k];
      }
    }
  }
  return static_cast<OpCount>(outer) * n * inner;
}

struct Workspace {
  std::vector<double> cur;
  std::vector<double> tmp_a;
  std::vector<double> tmp_b;
  std::vector<double> acc;

  void ensure(std::size_t size) {
    if (cur.size() < size) {
      cur.resize(size);
      tmp_a.resize(size);
      tmp_b.resize(size);
      acc.resize(size);
    }
  }
};

Workspace &tls_workspace() {
  thread_local Workspace w;
  return w;
}

// Transposed shape matrices (basis-major) are needed for the integration
// (test-and-sum) sweeps; cached per (matrix pointer, sizes) in thread-local
// scratch would be fragile, so they are rebuilt on the fly into the caller's
// buffer. The matrices are tiny ((p+1) x (p+2) at most in practice).
void transpose_into(std::span<const double> M, int rows, int cols, std::vector<double> &out) {
  out.resize(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      out[static_cast<std::size_t>(c) * rows + r] = M[static_cast<std::size_t>(r) * cols + c];
    }
  }
}

struct TransposedMatrices {
  std::vector<double> values_t;
  std::vector<double> derivatives_t;
};

TransposedMatrices &tls_transposed(const ShapeMatrices1D &sm) {
  thread_local TransposedMatrices t;
  transpose_into(sm.values(), sm.num_points(), sm.num_basis(), t.values_t);
  transpose_into(sm.derivatives(), sm.num_points(), sm.num_basis(), t.derivatives_t);
  return t;
}

void check_cell_tensor(const CellTensor &coefficients, const ShapeMatrices1D &sm) {
  if (coefficients.degree != sm.degree()) {
    throw std::invalid_argument("cell tensor degree does not match shape matrices");
  }
  if (coefficients.dim < 1 || coefficients.dim > 3) {
    throw std::invalid_argument("cell tensor dimension must be 1, 2, or 3");
  }
  if (coefficients.size() != tensor_size(coefficients.degree, coefficients.dim)) {
    throw std::invalid_argument("cell tensor has inconsistent coefficient count");
  }
}

}  // namespace

QuadPointField evaluate_cell(const CellTensor &coefficients, const ShapeMatrices1D &sm,
                             bool want_gradients, OpCount *ops, bool want_values) {
  check_cell_tensor(coefficients, sm);
  const int dim = coefficients.dim;
  const int n = sm.num_basis();
  const int nq = sm.num_points();

  TensorShape shape{dim, {1, 1, 1}};
  int num_points = 1;
  std::size_t max_size = 1;
  for (int a = 0; a < dim; ++a) {
    shape.extent[a] = n;
    num_points *= nq;
    max_size *= static_cast<std::size_t>(std::max(n, nq));
  }

  QuadPointField field;
  field.dim = dim;
  field.num_points = num_points;
  if (want_values) {
    field.values.resize(num_points);
  }
  if (want_gradients) {
    field.gradients.resize(static_cast<std::size_t>(dim) * num_points);
  }

  Workspace &ws = tls_workspace();
  ws.ensure(max_size);
  OpCount count = 0;

  // `cur` walks the prefix contractions N_{a-1} ... N_0 u; gradient component
  // a is peeled off before axis a is advanced.
  const double *cur = coefficients.coefficients.data();
  TensorShape cur_shape = shape;
  for (int a = 0; a < dim; ++a) {
    if (want_gradients) {
      // Peel the gradient component off the current prefix: D on axis a, N on
      // the remaining axes, with the last sweep landing in the output slice.
      TensorShape g_shape = cur_shape;
      const double *src = cur;
      for (int b = a; b < dim; ++b) {
        double *dst = (b == dim - 1)
                          ? field.gradients.data() + static_cast<std::size_t>(a) * num_points
                          : (src == ws.tmp_a.data() ? ws.tmp_b.data() : ws.tmp_a.data());
        const double *matrix = (b == a) ? sm.derivatives().data() : sm.values().data();
        count += contract_axis(matrix, nq, g_shape.extent[b], g_shape, b, src, dst);
        g_shape.extent[b] = nq;
        src = dst;
      }
    }
    if (a == dim - 1 && !want_values) {
      break;  // the last prefix only feeds the value output
    }
    double *dst = (a == dim - 1) ? field.values.data()
                                 : (cur == ws.cur.data() ? ws.acc.data() : ws.cur.data());
    count += contract_axis(sm.values().data(), nq, cur_shape.extent[a], cur_shape, a, cur, dst);
    cur_shape.extent[a] = nq;
    cur = dst;
  }

  if (ops != nullptr) {
    *ops += count;
  }
  return field;
}

CellTensor integrate_cell(const QuadPointField &field, const ShapeMatrices1D &sm, OpCount *ops) {
  const int dim = field.dim;
  if (dim < 1 || dim > 3) {
    throw std::invalid_argument("integrate_cell: field dimension must be 1, 2, or 3");
  }
  const int n = sm.num_basis();
  const int nq = sm.num_points();
  int expected_points = 1;
  std::size_t max_size = 1;
  for (int a = 0; a < dim; ++a) {
    expected_points *= nq;
    max_size *= static_cast<std::size_t>(std::max(n, nq));
  }
  const bool has_values = !field.values.empty();
  const bool has_gradients = !field.gradients.empty();
  if (has_values && static_cast<int>(field.values.size()) != expected_points) {
    throw std::invalid_argument("integrate_cell: value array size mismatch");
  }
  if (has_gradients &&
      static_cast<int>(field.gradients.size()) != dim * expected_points) {
    throw std::invalid_argument("integrate_cell: gradient array size mismatch");
  }

  CellTensor result(sm.degree(), dim);
  Workspace &ws = tls_workspace();
  ws.ensure(2 * max_size);
  TransposedMatrices &tm = tls_transposed(sm);
  OpCount count = 0;

  // Mirror of evaluate_cell: running R_d = V; R_a = D_a^T(N^T... G_a) +
  // N_a^T R_{a+1}; the result is R_0.
  std::vector<double> &running = ws.cur;
  TensorShape running_shape{dim, {1, 1, 1}};
  bool have_running = false;
  if (has_values) {
    for (int a = 0; a < dim; ++a) {
      running_shape.extent[a] = nq;
    }
    std::copy(field.values.begin(), field.values.end(), running.begin());
    have_running = true;
  }

  for (int a = dim - 1; a >= 0; --a) {
    if (have_running) {
      // running extent along axis a: nq -> n
      count += contract_axis(tm.values_t.data(), n, nq, running_shape, a, running.data(),
                             ws.acc.data());
      running_shape.extent[a] = n;
      std::copy(ws.acc.begin(), ws.acc.begin() + running_shape.size(), running.begin());
    }
    if (has_gradients) {
      // t_a = D_a^T ( N_{a+1}^T ... N_{d-1}^T G_a )
      TensorShape t_shape{dim, {1, 1, 1}};
      for (int b = 0; b < dim; ++b) {
        t_shape.extent[b] = nq;
      }
      const double *src = field.gradients.data() + static_cast<std::size_t>(a) * expected_points;
      double *dst = ws.tmp_a.data();
      for (int b = dim - 1; b > a; --b) {
        count += contract_axis(tm.values_t.data(), n, nq, t_shape, b, src, dst);
        t_shape.extent[b] = n;
        src = dst;
        dst = (dst == ws.tmp_a.data()) ? ws.tmp_b.data() : ws.tmp_a.data();
      }
      count += contract_axis(tm.derivatives_t.data(), n, nq, t_shape, a, src, dst);
      t_shape.extent[a] = n;
      if (have_running) {
        const int sz = t_shape.size();
        for (int k = 0; k < sz; ++k) {
          running[k] += dst[k];
        }
      } else {
        running_shape = t_shape;
        std::copy(dst, dst + t_shape.size(), running.begin());
        have_running = true;
      }
    }
  }

  if (have_running) {
    std::copy(running.begin(), running.begin() + result.size(), result.coefficients.begin());
  }
  if (ops != nullptr) {
    *ops += count;
  }
  return result;
}

QuadPointField evaluate_face_traces(const CellTensor &coefficients, const ShapeMatrices1D &sm,
                                    int face_axis, int face_side, OpCount *ops) {
  check_cell_tensor(coefficients, sm);
  const int dim = coefficients.dim;
  if (face_axis < 0 || face_axis >= dim) {
    throw std::invalid_argument("evaluate_face_traces: invalid face axis");
  }
  if (face_side != 0 && face_side != 1) {
    throw std::invalid_argument("evaluate_face_traces: face side must be 0 or 1");
  }
  const int n = sm.num_basis();

  TensorShape shape{dim, {1, 1, 1}};
  for (int a = 0; a < dim; ++a) {
    shape.extent[a] = n;
  }
  OpCount count = 0;

  // Collapse the face axis with boundary rows; the remaining axes form a
  // (dim-1)-tensor in ascending axis order.
  CellTensor line_vals(sm.degree(), dim - 1);
  CellTensor line_ders(sm.degree(), dim - 1);
  count += contract_axis(sm.boundary_values(face_side).data(), 1, n, shape, face_axis,
                         coefficients.coefficients.data(), line_vals.coefficients.data());
  count += contract_axis(sm.boundary_derivatives(face_side).data(), 1, n, shape, face_axis,
                         coefficients.coefficients.data(), line_ders.coefficients.data());

  // Tangential interpolation is a (dim-1)-dimensional cell evaluation.
  QuadPointField tangential = evaluate_cell(line_vals, sm, true, &count);
  QuadPointField normal = evaluate_cell(line_ders, sm, false, &count);

  QuadPointField field;
  field.dim = dim;
  field.num_points = tangential.num_points;
  field.values = std::move(tangential.values);
  field.gradients.resize(static_cast<std::size_t>(dim) * field.num_points);
  int t = 0;
  for (int c = 0; c < dim; ++c) {
    if (c == face_axis) {
      std::copy(normal.values.begin(), normal.values.end(),
                field.gradients.begin() + static_cast<std::size_t>(c) * field.num_points);
    } else {
      std::copy(tangential.gradients.begin() + static_cast<std::size_t>(t) * field.num_points,
                tangential.gradients.begin() + static_cast<std::size_t>(t + 1) * field.num_points,
                field.gradients.begin() + static_cast<std::size_t>(c) * field.num_points);
      ++t;
    }
  }

  if (ops != nullptr) {
    *ops += count;
  }
  return field;
}

CellTensor integrate_face(std::span<const double> value_terms,
                          std::span<const double> normal_deriv_terms, const ShapeMatrices1D &sm,
                          int dim, int face_axis, int face_side, OpCount *ops) {
  if (face_axis < 0 || face_axis >= dim) {
    throw std::invalid_argument("integrate_face: invalid face axis");
  }
  if (face_side != 0 && face_side != 1) {
    throw std::invalid_argument("integrate_face: face side must be 0 or 1");
  }
  const int nq = sm.num_points();
  int face_points = 1;
  for (int a = 0; a < dim - 1; ++a) {
    face_points *= nq;
  }
  if (!value_terms.empty() && static_cast<int>(value_terms.size()) != face_points) {
    throw std::invalid_argument("integrate_face: value term size mismatch");
  }
  if (!normal_deriv_terms.empty() &&
      static_cast<int>(normal_deriv_terms.size()) != face_points) {
    throw std::invalid_argument("integrate_face: normal derivative term size mismatch");
  }

  CellTensor result(sm.degree(), dim);
  TensorShape full_shape{dim, {1, 1, 1}};
  for (int a = 0; a < dim; ++a) {
    full_shape.extent[a] = sm.num_basis();
  }
  OpCount count = 0;
  const double outward_sign = (face_side == 1) ? 1.0 : -1.0;

  const auto accumulate_slot = [&](std::span<const double> terms,
                                   std::span<const double> boundary_row, double sign) {
    if (terms.empty()) {
      return;
    }
    QuadPointField face_field;
    face_field.dim = dim - 1;
    face_field.num_points = face_points;
    face_field.values.assign(terms.begin(), terms.end());
    CellTensor face_cell = integrate_cell(face_field, sm, &count);
    count += expand_axis(boundary_row, sign, full_shape, face_axis,
                         face_cell.coefficients.data(), result.coefficients.data());
  };

  accumulate_slot(value_terms, sm.boundary_values(face_side), 1.0);
  accumulate_slot(normal_deriv_terms, sm.boundary_derivatives(face_side), outward_sign);

  if (ops != nullptr) {
    *ops += count;
  }
  return result;
}

double point_evaluate(const CellTensor &coefficients, const ShapeMatrices1D &sm,
                      const Point &ref_point, Point *gradient, OpCount *ops) {
  check_cell_tensor(coefficients, sm);
  const int dim = coefficients.dim;
  const int n = sm.num_basis();

  std::array<std::array<double, 16>, 3> basis_values{};
  std::array<std::array<double, 16>, 3> basis_derivatives{};
  if (n > 16) {
    throw std::invalid_argument("point_evaluate: degree too high (max 15)");
  }
  for (int a = 0; a < dim; ++a) {
    sm.values_at(ref_point[a], {basis_values[a].data(), static_cast<std::size_t>(n)});
    if (gradient != nullptr) {
      sm.derivatives_at(ref_point[a], {basis_derivatives[a].data(), static_cast<std::size_t>(n)});
    }
  }

  double value = 0.0;
  Point grad = {0.0, 0.0, 0.0};
  const double *u = coefficients.coefficients.data();
  const int n1 = n;
  const int n2 = dim > 1 ? n : 1;
  const int n3 = dim > 2 ? n : 1;
  std::size_t idx = 0;
  for (int k = 0; k < n3; ++k) {
    const double vz = dim > 2 ? basis_values[2][k] : 1.0;
    const double dz = dim > 2 ? basis_derivatives[2][k] : 0.0;
    for (int j = 0; j < n2; ++j) {
      const double vy = dim > 1 ? basis_values[1][j] : 1.0;
      const double dy = dim > 1 ? basis_derivatives[1][j] : 0.0;
      const double vyz = vy * vz;
      for (int i = 0; i < n1; ++i, ++idx) {
        const double c = u[idx];
        const double vx = basis_values[0][i];
        value += c * vx * vyz;
        if (gradient != nullptr) {
          grad[0] += c * basis_derivatives[0][i] * vyz;
          if (dim > 1) {
            grad[1] += c * vx * dy * vz;
          }
          if (dim > 2) {
            grad[2] += c * vx * vy * dz;
          }
        }
      }
    }
  }

  if (gradient != nullptr) {
    *gradient = grad;
  }
  if (ops != nullptr) {
    // Cost model of a standard point evaluation: one operation per basis
    // function for the value, dim more when the gradient is formed.
    const OpCount per_basis = (gradient != nullptr) ? static_cast<OpCount>(1 + dim) : 1;
    *ops += per_basis * static_cast<OpCount>(coefficients.size());
  }
  return value;
}

}  // namespace mfsbm
