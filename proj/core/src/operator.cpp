// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsbm/operator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace mfsbm {

double sigma_gamma(double h, int degree, double beta) {
  return beta * (degree + 1) * (degree + 1) / h;
}

double sigma_f(double h, int degree, double gamma_f) {
  return gamma_f * (degree + 1) * (degree + 1) / h;
}

OperatorCounters &OperatorCounters::operator+=(const OperatorCounters &other) {
  cell_entities += other.cell_entities;
  cell_ops += other.cell_ops;
  interior_face_entities += other.interior_face_entities;
  interior_face_ops += other.interior_face_ops;
  surrogate_face_entities += other.surrogate_face_entities;
  surrogate_face_ops += other.surrogate_face_ops;
  surrogate_face_aux_ops += other.surrogate_face_aux_ops;
  return *this;
}

void write_counters_csv(std::ostream &out, const OperatorCounters &counters) {
  out << "entity_kind,count,ops_total,ops_per_entity\n";
  const auto row = [&out](const char *kind, std::uint64_t count, std::uint64_t ops) {
    out << kind << ',' << count << ',' << ops << ','
        << (count > 0 ? static_cast<double>(ops) / static_cast<double>(count) : 0.0) << '\n';
  };
  row("cell", counters.cell_entities, counters.cell_ops);
  row("interior_face", counters.interior_face_entities, counters.interior_face_ops);
  row("surrogate_face", counters.surrogate_face_entities, counters.surrogate_face_ops);
  row("surrogate_face_sumfac", counters.surrogate_face_entities,
      counters.surrogate_face_aux_ops);
}

CellKernelData::CellKernelData(const CartesianMesh &mesh, const ShapeMatrices1D &sm)
    : dim(mesh.dim()) {
  const int nq = sm.num_points();
  num_points = 1;
  for (int a = 0; a < dim; ++a) {
    num_points *= nq;
  }
  grad_scale.resize(static_cast<std::size_t>(dim) * num_points);
  const auto &weights = sm.quadrature().weights;
  const double volume = mesh.cell_volume();
  for (int c = 0; c < dim; ++c) {
    const double h_c = mesh.cell_size()[c];
    const double metric = volume / (h_c * h_c);
    for (int q = 0; q < num_points; ++q) {
      double w = 1.0;
      int rest = q;
      for (int a = 0; a < dim; ++a) {
        w *= weights[rest % nq];
        rest /= nq;
      }
      grad_scale[static_cast<std::size_t>(c) * num_points + q] = w * metric;
    }
  }
}

CellTensor cell_kernel(const CellTensor &u_local, const ShapeMatrices1D &sm,
                       const CellKernelData &geometry, OperatorCounters *counters) {
  OpCount ops = 0;
  QuadPointField field = evaluate_cell(u_local, sm, true, &ops, /*want_values=*/false);
  const int n = field.num_points;
  for (int c = 0; c < geometry.dim; ++c) {
    const double *scale = geometry.grad_scale.data() + static_cast<std::size_t>(c) * n;
    double *grad = field.gradients.data() + static_cast<std::size_t>(c) * n;
    for (int q = 0; q < n; ++q) {
      grad[q] *= scale[q];
    }
  }
  ops += static_cast<OpCount>(geometry.dim) * n;
  CellTensor w = integrate_cell(field, sm, &ops);
  if (counters != nullptr) {
    counters->cell_entities += 1;
    counters->cell_ops += ops;
  }
  return w;
}

InteriorFaceData make_interior_face_data(const CartesianMesh &mesh, int axis, int degree,
                                         double gamma_f, const Quadrature1D &quad) {
  InteriorFaceData data;
  data.axis = axis;
  data.h_normal = mesh.cell_size()[axis];
  data.area = mesh.face_area(axis);
  data.sigma = sigma_f(mesh.min_cell_size(), degree, gamma_f);
  const int nq = quad.size();
  int face_points = 1;
  for (int a = 0; a < mesh.dim() - 1; ++a) {
    face_points *= nq;
  }
  data.quad_weights.resize(face_points);
  for (int q = 0; q < face_points; ++q) {
    double w = 1.0;
    int rest = q;
    for (int a = 0; a < mesh.dim() - 1; ++a) {
      w *= quad.weights[rest % nq];
      rest /= nq;
    }
    data.quad_weights[q] = w;
  }
  return data;
}

std::pair<CellTensor, CellTensor> interior_face_kernel(const CellTensor &u_k1,
                                                       const CellTensor &u_k2,
                                                       const ShapeMatrices1D &sm,
                                                       const InteriorFaceData &face,
                                                       OperatorCounters *counters) {
  OpCount ops = 0;
  const int dim = u_k1.dim;
  const int axis = face.axis;
  // K1 is the lower cell: the shared face is its side 1, K2's side 0; the
  // face normal points from K1 into K2 (+e_axis).
  const QuadPointField t1 = evaluate_face_traces(u_k1, sm, axis, 1, &ops);
  const QuadPointField t2 = evaluate_face_traces(u_k2, sm, axis, 0, &ops);

  const int nfp = t1.num_points;
  std::vector<double> v1(nfp), v2(nfp), dn1(nfp), dn2(nfp);
  const double inv_h = 1.0 / face.h_normal;
  for (int q = 0; q < nfp; ++q) {
    const double jump = t1.values[q] - t2.values[q];
    const double avg_normal = 0.5 * (t1.gradient(axis, q) + t2.gradient(axis, q)) * inv_h;
    const double t_value = face.sigma * jump - avg_normal;
    const double wq = face.area * face.quad_weights[q];
    v1[q] = wq * t_value;
    v2[q] = -v1[q];
    // Both normal-derivative slots receive -0.5 jump tested against the face
    // normal; K2's outward normal is opposite, so its sign flips.
    dn1[q] = wq * (-0.5 * jump) * inv_h;
    dn2[q] = -dn1[q];
  }
  ops += static_cast<OpCount>(nfp) * 6;

  CellTensor w1 = integrate_face(v1, dn1, sm, dim, axis, 1, &ops);
  CellTensor w2 = integrate_face(v2, dn2, sm, dim, axis, 0, &ops);
  if (counters != nullptr) {
    counters->interior_face_entities += 1;
    counters->interior_face_ops += ops;
  }
  return {std::move(w1), std::move(w2)};
}

double extension_value(const CellTensor &u_local, const ShapeMatrices1D &sm,
                       const SurrogateFaceData &data, int q, ExtensionMode mode,
                       double trace_value, const Point &trace_gradient_physical,
                       OpCount *point_eval_ops) {
  const int dim = u_local.dim;
  if (mode == ExtensionMode::direct_point_eval) {
    return point_evaluate(u_local, sm, data.reference_coords(q, dim), nullptr, point_eval_ops);
  }
  const Point shift = data.shift_vector(q, dim);
  double value = trace_value;
  for (int c = 0; c < dim; ++c) {
    value += shift[c] * trace_gradient_physical[c];
  }
  if (point_eval_ops != nullptr) {
    *point_eval_ops += static_cast<OpCount>(dim) + 1;
  }
  return value;
}

CellTensor surrogate_face_kernel(const CellTensor &u_local, const ShapeMatrices1D &sm,
                                 const SurrogateFaceData &data, const CartesianMesh &mesh,
                                 const OperatorConfig &config, OperatorCounters *counters) {
  OpCount aux_ops = 0;
  OpCount extension_ops = 0;
  const int dim = u_local.dim;
  const int axis = data.axis;
  const double outward = (data.side == 1) ? 1.0 : -1.0;
  const double inv_h = 1.0 / mesh.cell_size()[axis];
  const double sigma = sigma_gamma(mesh.min_cell_size(), config.degree, config.beta);

  const QuadPointField traces = evaluate_face_traces(u_local, sm, axis, data.side, &aux_ops);
  const int nfp = traces.num_points;
  std::vector<double> value_terms(nfp), normal_deriv_terms(nfp);
  for (int q = 0; q < nfp; ++q) {
    const double normal_derivative = outward * traces.gradient(axis, q) * inv_h;
    Point grad_physical = {0.0, 0.0, 0.0};
    if (config.extension == ExtensionMode::taylor_first_order) {
      for (int c = 0; c < dim; ++c) {
        grad_physical[c] = traces.gradient(c, q) / mesh.cell_size()[c];
      }
    }
    const double extended = extension_value(u_local, sm, data, q, config.extension,
                                            traces.values[q], grad_physical, &extension_ops);
    const double wq = data.weight[q];
    value_terms[q] = wq * (-normal_derivative + sigma * extended);
    normal_deriv_terms[q] = wq * (-extended) * inv_h;
  }
  aux_ops += static_cast<OpCount>(nfp) * 6;

  CellTensor w = integrate_face(value_terms, normal_deriv_terms, sm, dim, axis, data.side,
                                &aux_ops);
  if (counters != nullptr) {
    counters->surrogate_face_entities += 1;
    counters->surrogate_face_ops += extension_ops;
    counters->surrogate_face_aux_ops += aux_ops;
  }
  return w;
}

SbmOperator::SbmOperator(CartesianMesh mesh, const LevelSet &levelset, OperatorConfig config,
                         const std::function<double(const Point &)> &boundary_value)
    : mesh_(std::move(mesh)), config_(config) {
  if (config_.dim != mesh_.dim()) {
    throw std::invalid_argument("SbmOperator: config dimension does not match the mesh");
  }
  if (config_.degree < 1) {
    throw std::invalid_argument("SbmOperator: degree must be >= 1");
  }
  if (!(config_.beta > 0.0) || !(config_.gamma_f > 0.0)) {
    throw std::invalid_argument("SbmOperator: penalty scales must be positive");
  }
  if (config_.threads < 1) {
    throw std::invalid_argument("SbmOperator: thread count must be >= 1");
  }

  levelset.validate_resolution(mesh_.min_cell_size());
  classification_ = classify_cells(mesh_, levelset);
  faces_ = collect_faces(mesh_, classification_);
  layout_ = std::make_unique<DofLayout>(mesh_, classification_, config_.degree,
                                        config_.discretization);
  shape_matrices_ = std::make_unique<ShapeMatrices1D>(
      config_.degree, gauss_quadrature_1d(config_.degree + 1));
  surrogate_data_ = precompute_surrogate_data(mesh_, faces_, levelset,
                                              shape_matrices_->quadrature(), boundary_value);
  face_of_surrogate_.assign(faces_.size(), -1);
  for (std::size_t i = 0; i < surrogate_data_.size(); ++i) {
    face_of_surrogate_[surrogate_data_[i].face] = static_cast<int>(i);
  }
  cell_data_ = CellKernelData(mesh_, *shape_matrices_);
  for (int axis = 0; axis < mesh_.dim(); ++axis) {
    interior_face_data_[axis] = make_interior_face_data(
        mesh_, axis, config_.degree, config_.gamma_f, shape_matrices_->quadrature());
  }
  build_partition();
}

void SbmOperator::build_partition() {
  const int threads = config_.threads;
  const auto assignment = weighted_partition(mesh_, classification_, faces_, threads);
  worker_ranges_.assign(threads, WorkerRange{});
  for (int cell : classification_.active_cells) {
    worker_ranges_[assignment[cell]].cells.push_back(cell);
  }
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    worker_ranges_[assignment[faces_[f].owner]].faces.push_back(static_cast<int>(f));
  }
  worker_buffers_.assign(threads, std::vector<double>());
}

void SbmOperator::set_threads(int threads) {
  if (threads < 1) {
    throw std::invalid_argument("SbmOperator::set_threads: thread count must be >= 1");
  }
  if (threads != config_.threads) {
    config_.threads = threads;
    build_partition();
  }
}

void SbmOperator::apply(std::span<const double> u, std::span<double> w, TermMask mask) {
  const int n = num_dofs();
  if (static_cast<int>(u.size()) != n || static_cast<int>(w.size()) != n) {
    throw std::invalid_argument("SbmOperator::apply: vector size mismatch");
  }
  if (mask == TermMask::interior_faces && config_.discretization != Discretization::dg) {
    throw std::invalid_argument(
        "SbmOperator::apply: interior-face terms requested under CG discretization");
  }
  const int threads = config_.threads;
  const bool do_cells = has_term(mask, TermMask::cells);
  const bool do_interior =
      has_term(mask, TermMask::interior_faces) && config_.discretization == Discretization::dg;
  const bool do_surrogate = has_term(mask, TermMask::surrogate_faces);
  const int dim = mesh_.dim();

  std::vector<OperatorCounters> worker_counters(threads);

  const auto worker = [&](int rank) {
    auto &buffer = worker_buffers_[rank];
    buffer.assign(n, 0.0);
    OperatorCounters &counters = worker_counters[rank];
    const WorkerRange &range = worker_ranges_[rank];

    if (do_cells) {
      for (int cell : range.cells) {
        const CellTensor local = gather(u, cell, *layout_, dim);
        const CellTensor result = cell_kernel(local, *shape_matrices_, cell_data_, &counters);
        scatter_add(result, cell, *layout_, buffer);
      }
    }
    for (int f : range.faces) {
      const FaceRecord &face = faces_[f];
      if (face.kind == FaceKind::interior) {
        if (!do_interior) {
          continue;
        }
        const CellTensor u1 = gather(u, face.owner, *layout_, dim);
        const CellTensor u2 = gather(u, face.neighbor, *layout_, dim);
        auto [w1, w2] = interior_face_kernel(u1, u2, *shape_matrices_,
                                             interior_face_data_[face.axis], &counters);
        scatter_add(w1, face.owner, *layout_, buffer);
        scatter_add(w2, face.neighbor, *layout_, buffer);
      } else if (do_surrogate) {
        const CellTensor local = gather(u, face.owner, *layout_, dim);
        const SurrogateFaceData &data = surrogate_data_[face_of_surrogate_[f]];
        const CellTensor result =
            surrogate_face_kernel(local, *shape_matrices_, data, mesh_, config_, &counters);
        scatter_add(result, face.owner, *layout_, buffer);
      }
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (int rank = 1; rank < threads; ++rank) {
      pool.emplace_back(worker, rank);
    }
    worker(0);
    for (auto &t : pool) {
      t.join();
    }
  }

  // Fixed-order reduction: bitwise reproducible for a fixed thread count.
  std::fill(w.begin(), w.end(), 0.0);
  for (int rank = 0; rank < threads; ++rank) {
    const auto &buffer = worker_buffers_[rank];
    for (int i = 0; i < n; ++i) {
      w[i] += buffer[i];
    }
    counters_ += worker_counters[rank];
  }
}

std::vector<double> SbmOperator::apply(const std::vector<double> &u, TermMask mask) {
  std::vector<double> w(num_dofs());
  apply(u, w, mask);
  return w;
}

std::vector<double> SbmOperator::assemble_rhs(const std::function<double(const Point &)> &f,
                                              const std::function<double(const Point &)> &g) const {
  std::vector<double> b(num_dofs(), 0.0);
  const int dim = mesh_.dim();
  const ShapeMatrices1D &sm = *shape_matrices_;
  const int nq = sm.num_points();
  const auto &quad = sm.quadrature();
  const double volume = mesh_.cell_volume();

  if (f) {
    QuadPointField field;
    field.dim = dim;
    field.num_points = cell_data_.num_points;
    field.values.resize(field.num_points);
    for (int cell : classification_.active_cells) {
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
        field.values[q] = f(mesh_.to_physical(cell, ref)) * weight * volume;
      }
      const CellTensor local = integrate_cell(field, sm);
      scatter_add(local, cell, *layout_, b);
    }
  }

  const double sigma = sigma_gamma(mesh_.min_cell_size(), config_.degree, config_.beta);
  for (const auto &data : surrogate_data_) {
    const double inv_h = 1.0 / mesh_.cell_size()[data.axis];
    std::vector<double> value_terms(data.num_points), normal_deriv_terms(data.num_points);
    for (int q = 0; q < data.num_points; ++q) {
      const Point x = data.point(q, dim);
      const Point d = data.shift_vector(q, dim);
      Point projected = {0.0, 0.0, 0.0};
      for (int a = 0; a < dim; ++a) {
        projected[a] = x[a] + d[a];
      }
      const double g_value = g ? g(projected) : data.boundary_value[q];
      value_terms[q] = data.weight[q] * sigma * g_value;
      normal_deriv_terms[q] = data.weight[q] * (-g_value) * inv_h;
    }
    const CellTensor local =
        integrate_face(value_terms, normal_deriv_terms, sm, dim, data.axis, data.side);
    scatter_add(local, data.owner, *layout_, b);
  }
  return b;
}

std::vector<double> SbmOperator::assemble_rhs(
    const std::function<double(const Point &)> &f) const {
  return assemble_rhs(f, nullptr);
}

std::vector<double> SbmOperator::diagonal() const {
  std::vector<double> diag(num_dofs(), 0.0);
  const int dim = mesh_.dim();
  const int dofs_per_cell = layout_->dofs_per_cell();

  CellTensor probe(config_.degree, dim);
  for (int cell : classification_.active_cells) {
    const auto dofs = layout_->cell_dofs(cell);
    for (int j = 0; j < dofs_per_cell; ++j) {
      probe.coefficients[j] = 1.0;
      const CellTensor w = cell_kernel(probe, *shape_matrices_, cell_data_, nullptr);
      probe.coefficients[j] = 0.0;
      diag[dofs[j]] += w.coefficients[j];
    }
  }
  const CellTensor zero(config_.degree, dim);
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const FaceRecord &face = faces_[f];
    if (face.kind == FaceKind::interior) {
      if (config_.discretization != Discretization::dg) {
        continue;
      }
      const auto dofs1 = layout_->cell_dofs(face.owner);
      const auto dofs2 = layout_->cell_dofs(face.neighbor);
      for (int j = 0; j < dofs_per_cell; ++j) {
        probe.coefficients[j] = 1.0;
        const auto [w1, unused1] = interior_face_kernel(probe, zero, *shape_matrices_,
                                                        interior_face_data_[face.axis], nullptr);
        const auto [unused2, w2] = interior_face_kernel(zero, probe, *shape_matrices_,
                                                        interior_face_data_[face.axis], nullptr);
        probe.coefficients[j] = 0.0;
        diag[dofs1[j]] += w1.coefficients[j];
        diag[dofs2[j]] += w2.coefficients[j];
      }
    } else {
      const SurrogateFaceData &data = surrogate_data_[face_of_surrogate_[f]];
      const auto dofs = layout_->cell_dofs(face.owner);
      for (int j = 0; j < dofs_per_cell; ++j) {
        probe.coefficients[j] = 1.0;
        const CellTensor w =
            surrogate_face_kernel(probe, *shape_matrices_, data, mesh_, config_, nullptr);
        probe.coefficients[j] = 0.0;
        diag[dofs[j]] += w.coefficients[j];
      }
    }
  }
  return diag;
}

std::vector<double> SbmOperator::interpolate(
    const std::function<double(const Point &)> &fn) const {
  std::vector<double> u(num_dofs(), 0.0);
  const int dim = mesh_.dim();
  const int n1 = config_.degree + 1;
  const auto support = shape_matrices_->support_points();
  for (int cell : classification_.active_cells) {
    const auto dofs = layout_->cell_dofs(cell);
    for (int local = 0; local < layout_->dofs_per_cell(); ++local) {
      Point ref = {0.0, 0.0, 0.0};
      int rest = local;
      for (int a = 0; a < dim; ++a) {
        ref[a] = support[rest % n1];
        rest /= n1;
      }
      u[dofs[local]] = fn(mesh_.to_physical(cell, ref));
    }
  }
  return u;
}

std::vector<Point> SbmOperator::dof_points() const {
  std::vector<Point> points(num_dofs(), Point{0.0, 0.0, 0.0});
  const int dim = mesh_.dim();
  const int n1 = config_.degree + 1;
  const auto support = shape_matrices_->support_points();
  for (int cell : classification_.active_cells) {
    const auto dofs = layout_->cell_dofs(cell);
    for (int local = 0; local < layout_->dofs_per_cell(); ++local) {
      Point ref = {0.0, 0.0, 0.0};
      int rest = local;
      for (int a = 0; a < dim; ++a) {
        ref[a] = support[rest % n1];
        rest /= n1;
      }
      points[dofs[local]] = mesh_.to_physical(cell, ref);
    }
  }
  return points;
}

}  // namespace mfsbm
