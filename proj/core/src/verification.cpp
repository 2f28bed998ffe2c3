// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsbm/verification.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace mfsbm {

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double *row = data.data() + static_cast<std::size_t>(i) * n;
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      s += row[j] * x[j];
    }
    y[i] = s;
  }
  return y;
}

DenseMatrix assemble_by_probing(
    const std::function<void(std::span<const double>, std::span<double>)> &apply_fn, int n) {
  if (n > 20000) {
    throw std::invalid_argument("assemble_by_probing: size exceeds the desk-scale guard (20000)");
  }
  DenseMatrix matrix(n);
  std::vector<double> e(n, 0.0);
  std::vector<double> column(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    apply_fn(e, column);
    e[j] = 0.0;
    for (int i = 0; i < n; ++i) {
      matrix.at(i, j) = column[i];
    }
  }
  return matrix;
}

DenseMatrix assemble_by_probing(SbmOperator &op, TermMask mask) {
  return assemble_by_probing(
      [&op, mask](std::span<const double> u, std::span<double> w) { op.apply(u, w, mask); },
      op.num_dofs());
}

namespace {

// Plain product-form Lagrange basis on the layout's support points. These
// helpers are deliberately self-contained: the naive path must not share the
// d-dimensional evaluation machinery it is checking.
double lagrange_value(std::span<const double> pts, int i, double x) {
  double v = 1.0;
  const int n = static_cast<int>(pts.size());
  for (int j = 0; j < n; ++j) {
    if (j != i) {
      v *= (x - pts[j]) / (pts[i] - pts[j]);
    }
  }
  return v;
}

double lagrange_derivative(std::span<const double> pts, int i, double x) {
  double sum = 0.0;
  const int n = static_cast<int>(pts.size());
  for (int m = 0; m < n; ++m) {
    if (m == i) {
      continue;
    }
    double term = 1.0 / (pts[i] - pts[m]);
    for (int j = 0; j < n; ++j) {
      if (j != i && j != m) {
        term *= (x - pts[j]) / (pts[i] - pts[j]);
      }
    }
    sum += term;
  }
  return sum;
}

std::array<int, 3> decode(int idx, int n, int dim) {
  std::array<int, 3> multi = {0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    multi[a] = idx % n;
    idx /= n;
  }
  return multi;
}

struct NaiveBasis {
  std::span<const double> support;
  int dim;
  int n1;

  double value(int local, const Point &ref) const {
    const auto multi = decode(local, n1, dim);
    double v = 1.0;
    for (int a = 0; a < dim; ++a) {
      v *= lagrange_value(support, multi[a], ref[a]);
    }
    return v;
  }

  // Reference-coordinate gradient.
  Point gradient(int local, const Point &ref) const {
    const auto multi = decode(local, n1, dim);
    Point g = {0.0, 0.0, 0.0};
    for (int c = 0; c < dim; ++c) {
      double d = 1.0;
      for (int a = 0; a < dim; ++a) {
        d *= (a == c) ? lagrange_derivative(support, multi[a], ref[a])
                      : lagrange_value(support, multi[a], ref[a]);
      }
      g[c] = d;
    }
    return g;
  }
};

}  // namespace

std::vector<double> naive_apply(const SbmOperator &op, std::span<const double> u,
                                TermMask mask) {
  const int n = op.num_dofs();
  if (static_cast<int>(u.size()) != n) {
    throw std::invalid_argument("naive_apply: vector size mismatch");
  }
  const CartesianMesh &mesh = op.mesh();
  const DofLayout &layout = op.layout();
  const OperatorConfig &config = op.config();
  const int dim = mesh.dim();
  const int p = config.degree;
  const int n1 = p + 1;
  const int dofs_per_cell = layout.dofs_per_cell();
  const auto &quad = op.shape_matrices().quadrature();
  const int nq = quad.size();
  const NaiveBasis basis{op.shape_matrices().support_points(), dim, n1};

  std::vector<double> w(n, 0.0);

  // Tensor quadrature points on the reference cell.
  int cell_points = 1;
  for (int a = 0; a < dim; ++a) {
    cell_points *= nq;
  }
  const double volume = mesh.cell_volume();

  if (has_term(mask, TermMask::cells)) {
    for (int cell : op.classification().active_cells) {
      const auto dofs = layout.cell_dofs(cell);
      for (int q = 0; q < cell_points; ++q) {
        Point ref = {0.0, 0.0, 0.0};
        double weight = 1.0;
        int rest = q;
        for (int a = 0; a < dim; ++a) {
          const int node = rest % nq;
          rest /= nq;
          ref[a] = quad.nodes[node];
          weight *= quad.weights[node];
        }
        // grad u at this point, physical coordinates.
        Point grad_u = {0.0, 0.0, 0.0};
        for (int j = 0; j < dofs_per_cell; ++j) {
          const Point g = basis.gradient(j, ref);
          for (int c = 0; c < dim; ++c) {
            grad_u[c] += u[dofs[j]] * g[c] / mesh.cell_size()[c];
          }
        }
        for (int i = 0; i < dofs_per_cell; ++i) {
          const Point g = basis.gradient(i, ref);
          double contraction = 0.0;
          for (int c = 0; c < dim; ++c) {
            contraction += grad_u[c] * g[c] / mesh.cell_size()[c];
          }
          w[dofs[i]] += weight * volume * contraction;
        }
      }
    }
  }

  int face_points = 1;
  for (int a = 0; a < dim - 1; ++a) {
    face_points *= nq;
  }

  const auto face_ref_point = [&](const FaceRecord &face, int q, double *weight) {
    Point ref = {0.0, 0.0, 0.0};
    ref[face.axis] = static_cast<double>(face.side);
    double qw = 1.0;
    int rest = q;
    for (int a = 0; a < dim; ++a) {
      if (a == face.axis) {
        continue;
      }
      const int node = rest % nq;
      rest /= nq;
      ref[a] = quad.nodes[node];
      qw *= quad.weights[node];
    }
    if (weight != nullptr) {
      *weight = qw;
    }
    return ref;
  };

  const bool dg = config.discretization == Discretization::dg;
  if (dg && has_term(mask, TermMask::interior_faces)) {
    const double sigma = sigma_f(mesh.min_cell_size(), p, config.gamma_f);
    for (const auto &face : op.faces()) {
      if (face.kind != FaceKind::interior) {
        continue;
      }
      const auto dofs1 = layout.cell_dofs(face.owner);
      const auto dofs2 = layout.cell_dofs(face.neighbor);
      const double h_n = mesh.cell_size()[face.axis];
      const double area = mesh.face_area(face.axis);
      for (int q = 0; q < face_points; ++q) {
        double qw = 1.0;
        const Point ref1 = face_ref_point(face, q, &qw);  // side 1 of the owner
        Point ref2 = ref1;
        ref2[face.axis] = 0.0;

        double jump = 0.0;
        double avg_normal = 0.0;
        for (int j = 0; j < dofs_per_cell; ++j) {
          const double v1 = basis.value(j, ref1);
          const double v2 = basis.value(j, ref2);
          const double d1 = basis.gradient(j, ref1)[face.axis] / h_n;
          const double d2 = basis.gradient(j, ref2)[face.axis] / h_n;
          jump += u[dofs1[j]] * v1 - u[dofs2[j]] * v2;
          avg_normal += 0.5 * (u[dofs1[j]] * d1 + u[dofs2[j]] * d2);
        }
        const double t_value = sigma * jump - avg_normal;
        for (int i = 0; i < dofs_per_cell; ++i) {
          const double v1 = basis.value(i, ref1);
          const double v2 = basis.value(i, ref2);
          const double d1 = basis.gradient(i, ref1)[face.axis] / h_n;
          const double d2 = basis.gradient(i, ref2)[face.axis] / h_n;
          w[dofs1[i]] += qw * area * (t_value * v1 - 0.5 * jump * d1);
          w[dofs2[i]] += qw * area * (-t_value * v2 - 0.5 * jump * d2);
        }
      }
    }
  }

  if (has_term(mask, TermMask::surrogate_faces)) {
    const double sigma = sigma_gamma(mesh.min_cell_size(), p, config.beta);
    for (const auto &data : op.surrogate_data()) {
      const auto dofs = layout.cell_dofs(data.owner);
      const double h_n = mesh.cell_size()[data.axis];
      const double outward = (data.side == 1) ? 1.0 : -1.0;
      for (int q = 0; q < data.num_points; ++q) {
        const Point surrogate_ref = mesh.to_reference(data.owner, data.point(q, dim));
        const Point projected_ref = data.reference_coords(q, dim);

        double normal_derivative = 0.0;
        double extended = 0.0;
        for (int j = 0; j < dofs_per_cell; ++j) {
          const double uj = u[dofs[j]];
          normal_derivative +=
              uj * outward * basis.gradient(j, surrogate_ref)[data.axis] / h_n;
          if (config.extension == ExtensionMode::direct_point_eval) {
            extended += uj * basis.value(j, projected_ref);
          } else {
            double taylor = basis.value(j, surrogate_ref);
            const Point g = basis.gradient(j, surrogate_ref);
            for (int c = 0; c < dim; ++c) {
              taylor += data.shift[static_cast<std::size_t>(q) * dim + c] * g[c] /
                        mesh.cell_size()[c];
            }
            extended += uj * taylor;
          }
        }
        for (int i = 0; i < dofs_per_cell; ++i) {
          const double v = basis.value(i, surrogate_ref);
          const double dn = outward * basis.gradient(i, surrogate_ref)[data.axis] / h_n;
          w[dofs[i]] += data.weight[q] * ((-normal_derivative + sigma * extended) * v -
                                          extended * dn);
        }
      }
    }
  }

  return w;
}

DenseMatrix assemble_naive(SbmOperator &op, TermMask mask) {
  return assemble_by_probing(
      [&op, mask](std::span<const double> u, std::span<double> w) {
        const auto result = naive_apply(op, u, mask);
        std::copy(result.begin(), result.end(), w.begin());
      },
      op.num_dofs());
}

void write_dense_csv(std::ostream &out, const DenseMatrix &matrix) {
  for (int i = 0; i < matrix.n; ++i) {
    for (int j = 0; j < matrix.n; ++j) {
      if (j > 0) {
        out << ',';
      }
      out << matrix.at(i, j);
    }
    out << '\n';
  }
}

}  // namespace mfsbm
