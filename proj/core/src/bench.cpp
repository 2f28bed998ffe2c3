// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsbm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "mfsbm/export.hpp"

namespace mfsbm {

void write_bench_csv_header(std::ostream &out) {
  out << "kind,d,p,threads,reps,median_seconds,ops,mem_doubles,dofs_per_sec\n";
}

void write_bench_csv_row(std::ostream &out, const BenchRecord &record) {
  out << record.kind << ',' << record.d << ',' << record.p << ',' << record.threads << ','
      << record.repetitions << ',' << format_double(record.median_seconds) << ',' << record.ops
      << ',' << record.mem_doubles << ',' << format_double(record.dofs_per_sec) << '\n';
}

namespace {

// Synthetic single entities: a cell, an interior face pair, and a surrogate
// face of a cell inside a large ball.
struct SyntheticEntities {
  CartesianMesh mesh;
  ShapeMatrices1D sm;
  CellKernelData cell_data;
  InteriorFaceData face_data;
  SurrogateFaceData surrogate;
  OperatorConfig config;
  CellTensor u1;
  CellTensor u2;

  SyntheticEntities(int dim, int degree)
      : mesh(CartesianMesh::from_box(dim, {0.0, 0.0, 0.0}, {2.0, 1.0, 1.0}, {2, 1, 1})),
        sm(degree, gauss_quadrature_1d(degree + 1)),
        cell_data(mesh, sm),
        face_data(make_interior_face_data(mesh, 0, degree, 2.0, sm.quadrature())),
        u1(degree, dim),
        u2(degree, dim) {
    config.dim = dim;
    config.degree = degree;
    config.extension = ExtensionMode::direct_point_eval;

    const Ball ball(dim, mesh.cell_center(0), 2.0);
    std::vector<FaceRecord> faces;
    faces.push_back(FaceRecord{FaceKind::surrogate, 0, 0, 0, -1});
    surrogate =
        precompute_surrogate_data(mesh, faces, ball, sm.quadrature(), nullptr).front();

    std::mt19937 rng(484);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto &c : u1.coefficients) {
      c = dist(rng);
    }
    for (auto &c : u2.coefficients) {
      c = dist(rng);
    }
  }
};

double checksum_sink = 0.0;

template <typename Fn>
double time_kernel(Fn &&fn, int repetitions) {
  using clock = std::chrono::steady_clock;
  // Calibrate an inner loop so one timed run is well above timer resolution.
  const auto t0 = clock::now();
  fn();
  const double single = std::chrono::duration<double>(clock::now() - t0).count();
  const int inner = std::clamp(static_cast<int>(5e-5 / std::max(single, 1e-9)), 1, 200000);

  for (int warm = 0; warm < 5; ++warm) {
    fn();
  }
  std::vector<double> samples(std::max(repetitions, 1));
  for (auto &sample : samples) {
    const auto begin = clock::now();
    for (int k = 0; k < inner; ++k) {
      fn();
    }
    sample = std::chrono::duration<double>(clock::now() - begin).count() / inner;
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
  return samples[samples.size() / 2];
}

}  // namespace

OperatorCounters kernel_op_counts(int dim, int degree) {
  SyntheticEntities entities(dim, degree);
  OperatorCounters counters;
  const CellTensor wc = cell_kernel(entities.u1, entities.sm, entities.cell_data, &counters);
  checksum_sink += wc.coefficients[0];
  const auto [w1, w2] =
      interior_face_kernel(entities.u1, entities.u2, entities.sm, entities.face_data, &counters);
  checksum_sink += w1.coefficients[0] + w2.coefficients[0];
  const CellTensor ws = surrogate_face_kernel(entities.u1, entities.sm, entities.surrogate,
                                              entities.mesh, entities.config, &counters);
  checksum_sink += ws.coefficients[0];
  return counters;
}

std::vector<BenchRecord> bench_entity_kernels(int dim, int p_min, int p_max, int repetitions) {
  std::vector<BenchRecord> records;
  double cell_p1_time = 0.0;

  // The p=1 cell time is the normalization baseline (measured first even if
  // the requested range starts higher).
  {
    SyntheticEntities entities(dim, 1);
    cell_p1_time = time_kernel(
        [&] {
          const CellTensor w = cell_kernel(entities.u1, entities.sm, entities.cell_data, nullptr);
          checksum_sink += w.coefficients[0];
        },
        repetitions);
  }

  for (int p = p_min; p <= p_max; ++p) {
    SyntheticEntities entities(dim, p);
    const OperatorCounters counters = kernel_op_counts(dim, p);

    BenchRecord cell;
    cell.kind = "cell";
    cell.d = dim;
    cell.p = p;
    cell.repetitions = repetitions;
    cell.reliable = repetitions >= 30;
    cell.median_seconds = p == 1 ? cell_p1_time
                                 : time_kernel(
                                       [&] {
                                         const CellTensor w = cell_kernel(
                                             entities.u1, entities.sm, entities.cell_data,
                                             nullptr);
                                         checksum_sink += w.coefficients[0];
                                       },
                                       repetitions);
    cell.ops = counters.cell_ops;
    cell.relative_time = cell.median_seconds / cell_p1_time;
    records.push_back(cell);

    BenchRecord face;
    face.kind = "interior_face";
    face.d = dim;
    face.p = p;
    face.repetitions = repetitions;
    face.reliable = repetitions >= 30;
    face.median_seconds = time_kernel(
        [&] {
          const auto [w1, w2] = interior_face_kernel(entities.u1, entities.u2, entities.sm,
                                                     entities.face_data, nullptr);
          checksum_sink += w1.coefficients[0] + w2.coefficients[0];
        },
        repetitions);
    face.ops = counters.interior_face_ops;
    face.relative_time = face.median_seconds / cell_p1_time;
    records.push_back(face);

    BenchRecord surrogate;
    surrogate.kind = "surrogate_face";
    surrogate.d = dim;
    surrogate.p = p;
    surrogate.repetitions = repetitions;
    surrogate.reliable = repetitions >= 30;
    surrogate.median_seconds = time_kernel(
        [&] {
          const CellTensor w = surrogate_face_kernel(
              entities.u1, entities.sm, entities.surrogate, entities.mesh, entities.config,
              nullptr);
          checksum_sink += w.coefficients[0];
        },
        repetitions);
    surrogate.ops = counters.surrogate_face_ops;
    surrogate.mem_doubles =
        static_cast<std::uint64_t>(entities.surrogate.num_points) *
        SurrogateFaceData::doubles_per_point(dim);
    surrogate.relative_time = surrogate.median_seconds / cell_p1_time;
    records.push_back(surrogate);
  }
  return records;
}

std::vector<BenchRecord> bench_throughput(SbmOperator &op, int n_apply,
                                          std::span<const int> thread_counts) {
  using clock = std::chrono::steady_clock;
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> u(op.num_dofs());
  for (auto &x : u) {
    x = dist(rng);
  }
  std::vector<double> w(op.num_dofs());

  const int original_threads = op.threads();
  std::vector<BenchRecord> records;
  for (int threads : thread_counts) {
    op.set_threads(threads);
    for (int warm = 0; warm < 5; ++warm) {
      op.apply(u, w);
    }

    const auto begin = clock::now();
    for (int k = 0; k < n_apply; ++k) {
      op.apply(u, w);
    }
    const double seconds = std::chrono::duration<double>(clock::now() - begin).count();

    BenchRecord record;
    record.kind = "full_apply";
    record.d = op.config().dim;
    record.p = op.config().degree;
    record.threads = threads;
    record.repetitions = n_apply;
    record.reliable = n_apply >= 30;
    record.median_seconds = seconds / n_apply;
    record.dofs_per_sec =
        static_cast<double>(op.num_dofs()) * n_apply / std::max(seconds, 1e-12);
    records.push_back(record);
  }
  op.set_threads(original_threads);
  return records;
}

BenchRecord memory_report(std::span<const SurrogateFaceData> data, int dim, int degree,
                          int num_dofs) {
  std::uint64_t total = 0;
  std::uint64_t points = 0;
  for (const auto &face : data) {
    points += static_cast<std::uint64_t>(face.num_points);
    total += static_cast<std::uint64_t>(face.num_points) *
             SurrogateFaceData::doubles_per_point(dim);
  }
  BenchRecord record;
  record.kind = "surrogate_face";
  record.d = dim;
  record.p = degree;
  record.mem_doubles = total;
  record.mem_per_point =
      points > 0 ? static_cast<double>(total) / static_cast<double>(points) : 0.0;
  record.mem_per_dof = num_dofs > 0 ? static_cast<double>(total) / num_dofs : 0.0;
  return record;
}

BenchRecord memory_report(const SbmOperator &op) {
  return memory_report(op.surrogate_data(), op.config().dim, op.config().degree, op.num_dofs());
}

BenchRecord init_benchmark(const CartesianMesh &mesh, const LevelSet &levelset,
                           const OperatorConfig &config, int repetitions) {
  using clock = std::chrono::steady_clock;
  std::vector<double> samples(std::max(repetitions, 1));
  int dofs = 0;
  for (auto &sample : samples) {
    const auto begin = clock::now();
    SbmOperator op(mesh, levelset, config);
    sample = std::chrono::duration<double>(clock::now() - begin).count();
    dofs = op.num_dofs();
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());

  BenchRecord record;
  record.kind = "init";
  record.d = config.dim;
  record.p = config.degree;
  record.repetitions = repetitions;
  record.reliable = repetitions >= 30;
  record.median_seconds = samples[samples.size() / 2];
  record.dofs_per_sec = dofs / std::max(record.median_seconds, 1e-12);
  return record;
}

double fitted_loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace mfsbm
