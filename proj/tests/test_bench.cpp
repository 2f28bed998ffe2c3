// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsbm/bench.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"

using namespace mfsbm;

namespace {

SbmOperator make_ball_operator(int dim, int degree, int cells) {
  OperatorConfig config;
  config.dim = dim;
  config.degree = degree;
  if (dim == 2) {
    auto mesh =
        CartesianMesh::from_box(2, {-1.3, -1.3, 0.0}, {1.3, 1.3, 0.0}, {cells, cells, 1});
    return SbmOperator(std::move(mesh), Ball(2, {0.0, 0.0, 0.0}, 1.0), config);
  }
  auto mesh = CartesianMesh::from_box(3, {-1.3, -1.3, -1.3}, {1.3, 1.3, 1.3},
                                      {cells, cells, cells});
  return SbmOperator(std::move(mesh), Ball(3, {0.0, 0.0, 0.0}, 1.0), config);
}

}  // namespace

TEST_SUITE_BEGIN("bench");

TEST_CASE("bench csv header and row schema") {
  std::ostringstream out;
  write_bench_csv_header(out);
  CHECK(out.str() == "kind,d,p,threads,reps,median_seconds,ops,mem_doubles,dofs_per_sec\n");

  BenchRecord record;
  record.kind = "cell";
  record.d = 2;
  record.p = 3;
  record.threads = 1;
  record.repetitions = 30;
  record.median_seconds = 0.5;
  record.ops = 1234;
  std::ostringstream row;
  write_bench_csv_row(row, record);
  CHECK(row.str() == "cell,2,3,1,30,0.5,1234,0,0\n");
}

TEST_CASE("entity kernel records: self-normalization and reliability flag") {
  const auto records = bench_entity_kernels(2, 1, 2, 5);
  REQUIRE(records.size() == 6);
  CHECK(records[0].kind == "cell");
  CHECK(records[0].p == 1);
  CHECK(records[0].relative_time == 1.0);
  for (const auto &record : records) {
    CHECK_FALSE(record.reliable);  // 5 < 30 repetitions
    CHECK(record.median_seconds > 0.0);
  }
  const auto reliable = bench_entity_kernels(2, 1, 1, 30);
  for (const auto &record : reliable) {
    CHECK(record.reliable);
  }
}

TEST_CASE("surrogate-face op counters follow the (p+1)^(2d-1) model") {
  // d=3: ops(p)/ops(p-1) = ((p+1)/p)^5; for p=3 vs p=2 that is
  // (4/3)^5 = 1024/243.
  const auto c2 = kernel_op_counts(3, 2);
  const auto c3 = kernel_op_counts(3, 3);
  const double ratio =
      static_cast<double>(c3.surrogate_face_ops) / static_cast<double>(c2.surrogate_face_ops);
  const double model = std::pow(4.0 / 3.0, 5);
  CHECK(ratio > 0.75 * model);
  CHECK(ratio < 1.25 * model);
  CHECK(c3.surrogate_face_ops == 16 * 64);
}

TEST_CASE("op counters are deterministic") {
  for (int dim : {2, 3}) {
    for (int p : {1, 3}) {
      const auto a = kernel_op_counts(dim, p);
      const auto b = kernel_op_counts(dim, p);
      CHECK(a.cell_ops == b.cell_ops);
      CHECK(a.interior_face_ops == b.interior_face_ops);
      CHECK(a.surrogate_face_ops == b.surrogate_face_ops);
      CHECK(a.surrogate_face_aux_ops == b.surrogate_face_aux_ops);
    }
  }
}

TEST_CASE("op-count scaling slopes over p = 2..8") {
  for (int dim : {2, 3}) {
    std::vector<double> x, cell, interior, surrogate;
    for (int p = 2; p <= 8; ++p) {
      const auto counters = kernel_op_counts(dim, p);
      x.push_back(p + 1.0);
      cell.push_back(static_cast<double>(counters.cell_ops));
      interior.push_back(static_cast<double>(counters.interior_face_ops));
      surrogate.push_back(static_cast<double>(counters.surrogate_face_ops));
    }
    const double cell_slope = fitted_loglog_slope(x, cell);
    const double interior_slope = fitted_loglog_slope(x, interior);
    const double surrogate_slope = fitted_loglog_slope(x, surrogate);
    CHECK(cell_slope > dim + 1 - 0.3);
    CHECK(cell_slope < dim + 1 + 0.3);
    CHECK(interior_slope > dim - 0.3);
    CHECK(interior_slope < dim + 0.5);
    CHECK(surrogate_slope > 2 * dim - 1 - 0.3);
    CHECK(surrogate_slope < 2 * dim - 1 + 0.3);
  }
}

TEST_CASE("throughput: rows per thread count, steady state under doubling") {
  auto op = make_ball_operator(2, 2, 8);
  const std::array<int, 2> threads = {1, 2};
  const auto records = bench_throughput(op, 40, threads);
  REQUIRE(records.size() == 2);
  CHECK(records[0].threads == 1);
  CHECK(records[1].threads == 2);
  for (const auto &record : records) {
    CHECK(record.dofs_per_sec > 0.0);
    CHECK(record.kind == "full_apply");
  }

  // Doubling the application count moves the single-thread rate < 10%.
  const std::array<int, 1> single = {1};
  double best_deviation = 1.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    const auto a = bench_throughput(op, 60, single);
    const auto b = bench_throughput(op, 120, single);
    const double deviation =
        std::abs(a[0].dofs_per_sec - b[0].dofs_per_sec) / b[0].dofs_per_sec;
    best_deviation = std::min(best_deviation, deviation);
    if (best_deviation < 0.10) {
      break;
    }
  }
  CHECK(best_deviation < 0.10);
}

TEST_CASE("memory report: 4d+2 doubles per point, zero without surrogate faces") {
  for (int dim : {2, 3}) {
    auto op = make_ball_operator(dim, 2, dim == 2 ? 8 : 5);
    const auto record = memory_report(op);
    CHECK(record.mem_per_point == 4 * dim + 2);
    std::uint64_t points = 0;
    for (const auto &face : op.surrogate_data()) {
      points += face.num_points;
    }
    CHECK(record.mem_doubles == points * static_cast<std::uint64_t>(4 * dim + 2));
    CHECK(record.mem_per_dof > 0.0);
  }

  const auto empty = memory_report(std::span<const SurrogateFaceData>{}, 3, 2, 100);
  CHECK(empty.mem_doubles == 0);
  CHECK(empty.mem_per_point == 0.0);
}

TEST_CASE("throughput plateaus across resolutions (soft check)") {
  // p=3 ball at two mesh resolutions: per-dof rates within a factor of two.
  auto coarse = make_ball_operator(2, 3, 8);
  auto fine = make_ball_operator(2, 3, 16);
  const std::array<int, 1> single = {1};
  double best_ratio = 1e9;
  for (int attempt = 0; attempt < 6; ++attempt) {
    const double a = bench_throughput(coarse, 40, single)[0].dofs_per_sec;
    const double b = bench_throughput(fine, 40, single)[0].dofs_per_sec;
    const double ratio = std::max(a, b) / std::min(a, b);
    best_ratio = std::min(best_ratio, ratio);
    if (best_ratio < 2.0) {
      break;
    }
  }
  CHECK(best_ratio < 2.0);
}

TEST_CASE("memory per dof shrinks under refinement") {
  auto coarse = make_ball_operator(2, 2, 8);
  auto fine = make_ball_operator(2, 2, 32);
  CHECK(memory_report(fine).mem_per_dof < memory_report(coarse).mem_per_dof);
}

TEST_CASE("init benchmark: positive throughput, errors propagate") {
  OperatorConfig config;
  config.dim = 2;
  config.degree = 1;
  const auto mesh = CartesianMesh::from_box(2, {-1.3, -1.3, 0.0}, {1.3, 1.3, 0.0}, {8, 8, 1});
  const Ball ball(2, {0.0, 0.0, 0.0}, 1.0);
  const auto record = init_benchmark(mesh, ball, config, 3);
  CHECK(record.kind == "init");
  CHECK(record.median_seconds > 0.0);
  CHECK(std::isfinite(record.dofs_per_sec));
  CHECK(record.dofs_per_sec > 0.0);

  // Informational ratio against one apply.
  auto op = make_ball_operator(2, 1, 8);
  const std::array<int, 1> single = {1};
  const auto throughput = bench_throughput(op, 20, single);
  const double ratio = record.median_seconds / throughput[0].median_seconds;
  CHECK(std::isfinite(ratio));
  CHECK(ratio > 0.0);

  const Ball disjoint(2, {50.0, 50.0, 0.0}, 1.0);
  CHECK_THROWS_AS(init_benchmark(mesh, disjoint, config, 1), NoActiveCellsError);
}

TEST_SUITE_END();
