// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFSBM_VERIFICATION_HPP
#define MFSBM_VERIFICATION_HPP

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mfsbm/operator.hpp"

namespace mfsbm {

/// Dense operator matrix assembled column by column, row-major by global dof
/// index: column j is apply(e_j).
struct DenseMatrix {
  int n = 0;
  std::vector<double> data;

  explicit DenseMatrix(int n) : n(n), data(static_cast<std::size_t>(n) * n, 0.0) {}

  double &at(int i, int j) { return data[static_cast<std::size_t>(i) * n + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * n + j]; }

  std::vector<double> multiply(std::span<const double> x) const;
};

/// Column probing of an arbitrary operator action. The desk-scale guard
/// rejects n > 20000.
DenseMatrix assemble_by_probing(
    const std::function<void(std::span<const double>, std::span<double>)> &apply_fn, int n);

/// Column probing of the SBM operator (optionally restricted to a term
/// group).
DenseMatrix assemble_by_probing(SbmOperator &op, TermMask mask = TermMask::all);

/// The same SBM operator evaluated with direct nested loops over basis
/// functions and quadrature points: no sum factorization anywhere. This is
/// the independent oracle for the fast path.
std::vector<double> naive_apply(const SbmOperator &op, std::span<const double> u,
                                TermMask mask = TermMask::all);

/// Dense matrix assembled through naive_apply columns.
DenseMatrix assemble_naive(SbmOperator &op, TermMask mask = TermMask::all);

/// Debugging dump, one CSV row per matrix row.
void write_dense_csv(std::ostream &out, const DenseMatrix &matrix);

}  // namespace mfsbm

#endif  // MFSBM_VERIFICATION_HPP
