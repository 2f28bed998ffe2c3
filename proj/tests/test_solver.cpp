// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsbm/solver.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using namespace mfsbm;

namespace {

SbmOperator make_ball_operator(OperatorConfig config, int cells = 6) {
  auto mesh = CartesianMesh::from_box(2, {-1.3, -1.3, 0.0}, {1.3, 1.3, 0.0}, {cells, cells, 1});
  return SbmOperator(std::move(mesh), Ball(2, {0.0, 0.0, 0.0}, 1.0), config);
}

}  // namespace

TEST_SUITE_BEGIN("solver");

TEST_CASE("gmres: identity operator converges in one iteration") {
  const int n = 12;
  std::vector<double> b(n);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto &x : b) x = dist(rng);

  const auto [x, report] = gmres_solve(
      [](std::span<const double> u, std::span<double> w) {
        std::copy(u.begin(), u.end(), w.begin());
      },
      b);
  CHECK(report.converged);
  CHECK(report.iterations == 1);
  for (int i = 0; i < n; ++i) CHECK(std::abs(x[i] - b[i]) < 1e-12);
}

TEST_CASE("gmres: diagonal operator inverts analytically") {
  const int n = 50;
  std::vector<double> b(n, 1.0);
  const auto apply = [n](std::span<const double> u, std::span<double> w) {
    for (int i = 0; i < n; ++i) w[i] = (i + 1.0) * u[i];
  };
  GmresOptions options;
  options.tol = 1e-12;
  const auto [x, report] = gmres_solve(apply, b, options);
  CHECK(report.converged);
  for (int i = 0; i < n; ++i) {
    CHECK(std::abs(x[i] - 1.0 / (i + 1.0)) < 1e-10);
  }
}

TEST_CASE("gmres: SBM system residual verified by an independent apply") {
  OperatorConfig config;
  config.dim = 2;
  config.degree = 1;
  auto op = make_ball_operator(config, 8);
  const auto sol = manufactured_poisson_2d();
  const auto b = op.assemble_rhs(sol.f, sol.u);

  GmresOptions options;
  options.tol = 1e-10;
  const auto [x, report] = gmres_solve(op, b, options);
  CHECK(report.converged);

  const auto ax = op.apply(x);
  double rnorm = 0.0, bnorm = 0.0;
  for (int i = 0; i < op.num_dofs(); ++i) {
    rnorm += (b[i] - ax[i]) * (b[i] - ax[i]);
    bnorm += b[i] * b[i];
  }
  rnorm = std::sqrt(rnorm);
  bnorm = std::sqrt(bnorm);
  CHECK(rnorm <= 1e-10 * bnorm);
  // The reported residual matches the recomputation.
  CHECK(std::abs(report.final_residual - rnorm) <= 1e-12 * std::max(1.0, rnorm));
}

TEST_CASE("gmres: non-convergence is reported, best iterate returned") {
  OperatorConfig config;
  config.dim = 2;
  config.degree = 2;
  auto op = make_ball_operator(config, 8);
  const auto sol = manufactured_poisson_2d();
  const auto b = op.assemble_rhs(sol.f, sol.u);

  GmresOptions options;
  options.tol = 1e-14;
  options.max_iter = 3;
  const auto [x, report] = gmres_solve(op, b, options);
  CHECK_FALSE(report.converged);
  CHECK(report.iterations == 3);
  CHECK(report.final_residual > 0.0);
}

TEST_CASE("diagonal preconditioner equals the assembled matrix diagonal") {
  for (auto disc : {Discretization::cg, Discretization::dg}) {
    OperatorConfig config;
    config.dim = 2;
    config.degree = 2;
    config.discretization = disc;
    auto op = make_ball_operator(config, 5);

    const auto diag = op.diagonal();
    // Assembled diagonal by probing columns.
    std::vector<double> e(op.num_dofs(), 0.0);
    std::vector<double> column(op.num_dofs(), 0.0);
    for (int j = 0; j < op.num_dofs(); ++j) {
      e[j] = 1.0;
      op.apply(e, column);
      e[j] = 0.0;
      CHECK(std::abs(diag[j] - column[j]) <= 1e-12 * std::max(1.0, std::abs(column[j])));
    }
  }
}

TEST_CASE("gmres: diagonal preconditioning converges") {
  OperatorConfig config;
  config.dim = 2;
  config.degree = 2;
  auto op = make_ball_operator(config, 8);
  const auto sol = manufactured_poisson_2d();
  const auto b = op.assemble_rhs(sol.f, sol.u);

  GmresOptions options;
  options.tol = 1e-10;
  options.precondition = Preconditioner::diagonal;
  const auto [x, report] = gmres_solve(op, b, options);
  CHECK(report.converged);

  const auto ax = op.apply(x);
  double rnorm = 0.0, bnorm = 0.0;
  for (int i = 0; i < op.num_dofs(); ++i) {
    rnorm += (b[i] - ax[i]) * (b[i] - ax[i]);
    bnorm += b[i] * b[i];
  }
  CHECK(std::sqrt(rnorm) <= 1e-10 * std::sqrt(bnorm));
}

TEST_CASE("l2_error: interpolated constant is reproduced exactly") {
  OperatorConfig config;
  config.dim = 2;
  config.degree = 2;
  auto op = make_ball_operator(config);
  const auto u = op.interpolate([](const Point &) { return 3.5; });
  CHECK(l2_error(u, [](const Point &) { return 3.5; }, op) < 1e-14);
}

TEST_CASE("l2_error: zero solution against one gives sqrt(volume)") {
  OperatorConfig config;
  config.dim = 2;
  config.degree = 1;
  auto op = make_ball_operator(config, 8);
  const std::vector<double> zero(op.num_dofs(), 0.0);
  const double volume =
      op.classification().num_active() * op.mesh().cell_volume();
  CHECK(std::abs(l2_error(zero, [](const Point &) { return 1.0; }, op) - std::sqrt(volume)) <
        1e-12);
}

TEST_CASE("l2_error: p=1 interpolation error of x^2 on the unit cell") {
  // Interpolant of x1^2 at the corners is x1; the symbolic error is
  // integral of (x - x^2)^2 = 1/3 - 2/4 + 1/5 = 1/30 over the unit square.
  OperatorConfig config;
  config.dim = 2;
  config.degree = 1;
  auto mesh = CartesianMesh::from_box(2, {0.0, 0.0, 0.0}, {1.0, 1.0, 0.0}, {1, 1, 1});
  SbmOperator op(std::move(mesh), Ball(2, {0.5, 0.5, 0.0}, 2.0), config);

  const auto exact = [](const Point &x) { return x[0] * x[0]; };
  const auto u = op.interpolate(exact);
  const double symbolic = std::sqrt(1.0 / 3.0 - 2.0 / 4.0 + 1.0 / 5.0);
  CHECK(std::abs(l2_error(u, exact, op) - symbolic) < 1e-14);
}

TEST_SUITE_END();
