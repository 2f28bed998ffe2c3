// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsbm/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace mfsbm {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) {
    s += x * x;
  }
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

}  // namespace

std::pair<std::vector<double>, SolveReport> gmres_solve(const ApplyFn &apply_fn,
                                                        std::span<const double> b,
                                                        const GmresOptions &options,
                                                        std::span<const double> diagonal,
                                                        std::span<const double> initial_guess) {
  const auto start = std::chrono::steady_clock::now();
  const int n = static_cast<int>(b.size());
  if (!(options.tol > 0.0)) {
    throw std::invalid_argument("gmres_solve: tolerance must be positive");
  }
  const bool preconditioned = !diagonal.empty();
  if (preconditioned && static_cast<int>(diagonal.size()) != n) {
    throw std::invalid_argument("gmres_solve: diagonal size mismatch");
  }

  std::vector<double> inv_diag;
  if (preconditioned) {
    inv_diag.resize(n);
    for (int i = 0; i < n; ++i) {
      inv_diag[i] = diagonal[i] != 0.0 ? 1.0 / diagonal[i] : 1.0;
    }
  }
  const auto precondition = [&](std::vector<double> &v) {
    if (preconditioned) {
      for (int i = 0; i < n; ++i) {
        v[i] *= inv_diag[i];
      }
    }
  };

  const double b_norm = norm2(b);
  // The Arnoldi recurrence tracks the preconditioned residual; its exit
  // threshold targets tol * |M^-1 b| and the true residual decides at cycle
  // boundaries.
  double b_estimate_norm = b_norm;
  if (preconditioned) {
    std::vector<double> mb(b.begin(), b.end());
    precondition(mb);
    b_estimate_norm = norm2(mb);
  }
  std::vector<double> x(n, 0.0);
  if (static_cast<int>(initial_guess.size()) == n) {
    std::copy(initial_guess.begin(), initial_guess.end(), x.begin());
  }
  SolveReport report;

  const auto finalize = [&](int iterations) {
    std::vector<double> residual(n);
    apply_fn(x, residual);
    for (int i = 0; i < n; ++i) {
      residual[i] = b[i] - residual[i];
    }
    report.iterations = iterations;
    report.final_residual = norm2(residual);
    report.converged = report.final_residual <= options.tol * std::max(b_norm, 1e-300);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return std::make_pair(x, report);
  };

  if (b_norm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return finalize(0);
  }

  const int restart = std::max(1, options.restart);
  std::vector<std::vector<double>> basis;  // Krylov vectors
  std::vector<double> hessenberg(static_cast<std::size_t>(restart + 1) * restart, 0.0);
  const auto H = [&](int i, int j) -> double & {
    return hessenberg[static_cast<std::size_t>(i) * restart + j];
  };
  std::vector<double> cs(restart), sn(restart), g(restart + 1);

  int total_iterations = 0;
  while (total_iterations < options.max_iter) {
    // Residual for this cycle.
    std::vector<double> r(n);
    apply_fn(x, r);
    for (int i = 0; i < n; ++i) {
      r[i] = b[i] - r[i];
    }
    precondition(r);
    const double r_norm = norm2(r);
    if (r_norm == 0.0) {
      return finalize(total_iterations);
    }

    basis.assign(1, r);
    for (double &v : basis[0]) {
      v /= r_norm;
    }
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = r_norm;

    int k = 0;
    for (; k < restart && total_iterations < options.max_iter; ++k, ++total_iterations) {
      std::vector<double> v(n);
      apply_fn(basis[k], v);
      precondition(v);
      // Modified Gram-Schmidt.
      for (int i = 0; i <= k; ++i) {
        H(i, k) = dot(v, basis[i]);
        for (int j = 0; j < n; ++j) {
          v[j] -= H(i, k) * basis[i][j];
        }
      }
      const double next_norm = norm2(v);
      H(k + 1, k) = next_norm;
      if (next_norm > 0.0) {
        for (double &val : v) {
          val /= next_norm;
        }
      }
      basis.push_back(std::move(v));

      // Apply previous Givens rotations to the new column.
      for (int i = 0; i < k; ++i) {
        const double tmp = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = tmp;
      }
      const double denom = std::hypot(H(k, k), H(k + 1, k));
      if (denom == 0.0) {
        cs[k] = 1.0;
        sn[k] = 0.0;
      } else {
        cs[k] = H(k, k) / denom;
        sn[k] = H(k + 1, k) / denom;
      }
      H(k, k) = cs[k] * H(k, k) + sn[k] * H(k + 1, k);
      H(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];

      // A zero subdiagonal is a lucky breakdown.
      if (std::abs(g[k + 1]) <= options.tol * b_estimate_norm || next_norm == 0.0) {
        ++k;
        ++total_iterations;
        break;
      }
    }

    // Back substitution for the cycle's correction.
    std::vector<double> y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) {
        s -= H(i, j) * y[j];
      }
      y[i] = H(i, i) != 0.0 ? s / H(i, i) : 0.0;
    }
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < n; ++j) {
        x[j] += y[i] * basis[i][j];
      }
    }

    // Converged?
    std::vector<double> residual(n);
    apply_fn(x, residual);
    for (int i = 0; i < n; ++i) {
      residual[i] = b[i] - residual[i];
    }
    if (norm2(residual) <= options.tol * b_norm) {
      return finalize(total_iterations);
    }
    if (k == 0) {
      break;  // stagnation: no progress possible
    }
  }
  return finalize(total_iterations);
}

std::pair<std::vector<double>, SolveReport> gmres_solve(SbmOperator &op,
                                                        std::span<const double> b,
                                                        const GmresOptions &options,
                                                        std::span<const double> initial_guess) {
  std::vector<double> diag;
  if (options.precondition == Preconditioner::diagonal) {
    diag = op.diagonal();
  }
  return gmres_solve(
      [&op](std::span<const double> u, std::span<double> w) { op.apply(u, w); }, b, options,
      diag, initial_guess);
}

double l2_error(std::span<const double> u, const std::function<double(const Point &)> &exact,
                const SbmOperator &op) {
  const CartesianMesh &mesh = op.mesh();
  const int dim = mesh.dim();
  const int p = op.config().degree;
  // p+2 points per direction: one more than the operator's own rule, so the
  // error is not sampled only at the operator's quadrature points.
  const ShapeMatrices1D sm(p, gauss_quadrature_1d(p + 2));
  const auto &quad = sm.quadrature();
  const int nq = quad.size();
  const double volume = mesh.cell_volume();

  double error_sq = 0.0;
  for (int cell : op.classification().active_cells) {
    const CellTensor local = gather(u, cell, op.layout(), dim);
    const QuadPointField field = evaluate_cell(local, sm, false);
    for (int q = 0; q < field.num_points; ++q) {
      Point ref = {0.0, 0.0, 0.0};
      double weight = 1.0;
      int rest = q;
      for (int a = 0; a < dim; ++a) {
        const int node = rest % nq;
        rest /= nq;
        ref[a] = quad.nodes[node];
        weight *= quad.weights[node];
      }
      const double diff = field.values[q] - exact(mesh.to_physical(cell, ref));
      error_sq += weight * volume * diff * diff;
    }
  }
  return std::sqrt(error_sq);
}

}  // namespace mfsbm
