// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFSBM_SOLVER_HPP
#define MFSBM_SOLVER_HPP

#include <functional>
#include <span>
#include <vector>

#include "mfsbm/operator.hpp"

namespace mfsbm {

struct SolveReport {
  int iterations = 0;
  double final_residual = 0.0;  // true residual norm |b - A x|
  bool converged = false;
  double wall_seconds = 0.0;
};

enum class Preconditioner : std::uint8_t { none = 0, diagonal = 1 };

struct GmresOptions {
  double tol = 1e-10;  // relative to |b|
  int restart = 100;
  int max_iter = 10000;
  Preconditioner precondition = Preconditioner::none;
};

using ApplyFn = std::function<void(std::span<const double>, std::span<double>)>;

/// Restarted GMRES on an abstract operator action. The reported residual is
/// recomputed from an independent apply at exit; non-convergence returns the
/// best iterate with converged = false. A matching-size initial guess seeds
/// the first cycle.
std::pair<std::vector<double>, SolveReport> gmres_solve(
    const ApplyFn &apply_fn, std::span<const double> b, const GmresOptions &options = {},
    std::span<const double> diagonal = {}, std::span<const double> initial_guess = {});

/// GMRES on the SBM operator; the diagonal preconditioner is built from local
/// unit-vector kernel probes.
std::pair<std::vector<double>, SolveReport> gmres_solve(SbmOperator &op,
                                                        std::span<const double> b,
                                                        const GmresOptions &options = {},
                                                        std::span<const double> initial_guess = {});

/// L2 norm of u_h - exact over the active cells, integrated with (p+2) Gauss
/// points per direction.
double l2_error(std::span<const double> u, const std::function<double(const Point &)> &exact,
                const SbmOperator &op);

}  // namespace mfsbm

#endif  // MFSBM_SOLVER_HPP
