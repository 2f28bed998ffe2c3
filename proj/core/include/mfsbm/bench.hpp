// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFSBM_BENCH_HPP
#define MFSBM_BENCH_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "mfsbm/operator.hpp"

namespace mfsbm {

/// One benchmark measurement. The CSV schema is fixed:
/// kind,d,p,threads,reps,median_seconds,ops,mem_doubles,dofs_per_sec.
/// The remaining fields are in-memory extras: relative_time normalizes
/// against the p=1 cell kernel, reliable flags records with fewer than 30
/// repetitions, and the memory breakdown carries per-point / per-dof counts.
struct BenchRecord {
  std::string kind;  // cell | interior_face | surrogate_face | full_apply | init
  int d = 0;
  int p = 0;
  int threads = 1;
  int repetitions = 0;
  double median_seconds = 0.0;
  OpCount ops = 0;
  std::uint64_t mem_doubles = 0;
  double dofs_per_sec = 0.0;

  double relative_time = 0.0;
  bool reliable = true;
  double mem_per_point = 0.0;
  double mem_per_dof = 0.0;
};

void write_bench_csv_header(std::ostream &out);
void write_bench_csv_row(std::ostream &out, const BenchRecord &record);

/// Deterministic operation counters of the three kernels on synthetic single
/// entities (one cell, one interior face, one surrogate face of a ball
/// geometry), default extension mode.
OperatorCounters kernel_op_counts(int dim, int degree);

/// Wall-time microbenchmarks of the entity kernels across degrees, median of
/// `repetitions` timed runs after warmup, normalized against the p=1 cell
/// time. Records with fewer than 30 repetitions are flagged unreliable.
std::vector<BenchRecord> bench_entity_kernels(int dim, int p_min, int p_max, int repetitions);

/// Full matrix-vector throughput in active DoFs per second, one record per
/// requested thread count.
std::vector<BenchRecord> bench_throughput(SbmOperator &op, int n_apply,
                                          std::span<const int> thread_counts);

/// Stored geometric data of the operator: 4d+2 doubles per surrogate
/// quadrature point; interior-cell data is shared across cells and counted
/// once.
BenchRecord memory_report(const SbmOperator &op);
BenchRecord memory_report(std::span<const SurrogateFaceData> data, int dim, int degree,
                          int num_dofs);

/// Times classification, face collection, dof layout, and projection
/// precompute; reports active DoFs per second.
BenchRecord init_benchmark(const CartesianMesh &mesh, const LevelSet &levelset,
                           const OperatorConfig &config, int repetitions = 5);

/// Least-squares slope of log(y) against log(x).
double fitted_loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace mfsbm

#endif  // MFSBM_BENCH_HPP
