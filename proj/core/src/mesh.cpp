// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsbm/mesh.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "mfsbm/geometry.hpp"

namespace mfsbm {

CartesianMesh::CartesianMesh(int dim, const Point &origin, const Point &cell_size,
                             const std::array<int, 3> &cells_per_axis)
    : dim_(dim), origin_(origin), cell_size_(cell_size), cells_per_axis_(cells_per_axis) {
  if (dim < 2 || dim > 3) {
    throw std::invalid_argument("CartesianMesh: dimension must be 2 or 3");
  }
  num_cells_ = 1;
  for (int a = 0; a < dim_; ++a) {
    if (cells_per_axis_[a] < 1) {
      throw std::invalid_argument("CartesianMesh: cells_per_axis must be positive");
    }
    if (!(cell_size_[a] > 0.0)) {
      throw std::invalid_argument("CartesianMesh: cell size must be positive");
    }
    num_cells_ *= cells_per_axis_[a];
  }
  for (int a = dim_; a < 3; ++a) {
    cells_per_axis_[a] = 1;
    cell_size_[a] = 0.0;
    origin_[a] = 0.0;
  }
}

CartesianMesh CartesianMesh::from_box(int dim, const Point &lo, const Point &hi,
                                      const std::array<int, 3> &cells_per_axis) {
  Point size = {0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    size[a] = (hi[a] - lo[a]) / cells_per_axis[a];
  }
  return CartesianMesh(dim, lo, size, cells_per_axis);
}

double CartesianMesh::min_cell_size() const {
  double h = cell_size_[0];
  for (int a = 1; a < dim_; ++a) {
    h = std::min(h, cell_size_[a]);
  }
  return h;
}

int CartesianMesh::cell_index(const std::array<int, 3> &multi) const {
  int idx = 0;
  for (int a = dim_ - 1; a >= 0; --a) {
    idx = idx * cells_per_axis_[a] + multi[a];
  }
  return idx;
}

std::array<int, 3> CartesianMesh::cell_multi_index(int cell) const {
  std::array<int, 3> multi = {0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    multi[a] = cell % cells_per_axis_[a];
    cell /= cells_per_axis_[a];
  }
  return multi;
}

Point CartesianMesh::cell_corner(int cell) const {
  const auto multi = cell_multi_index(cell);
  Point corner = {0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) {
    corner[a] = origin_[a] + multi[a] * cell_size_[a];
  }
  return corner;
}

Point CartesianMesh::cell_center(int cell) const {
  Point center = cell_corner(cell);
  for (int a = 0; a < dim_; ++a) {
    center[a] += 0.5 * cell_size_[a];
  }
  return center;
}

Point CartesianMesh::to_physical(int cell, const Point &ref) const {
  Point x = cell_corner(cell);
  for (int a = 0; a < dim_; ++a) {
    x[a] += ref[a] * cell_size_[a];
  }
  return x;
}

Point CartesianMesh::to_reference(int cell, const Point &x) const {
  const Point corner = cell_corner(cell);
  Point ref = {0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) {
    ref[a] = (x[a] - corner[a]) / cell_size_[a];
  }
  return ref;
}

int CartesianMesh::neighbor(int cell, int axis, int side) const {
  auto multi = cell_multi_index(cell);
  multi[axis] += (side == 1) ? 1 : -1;
  if (multi[axis] < 0 || multi[axis] >= cells_per_axis_[axis]) {
    return -1;
  }
  return cell_index(multi);
}

double CartesianMesh::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) {
    v *= cell_size_[a];
  }
  return v;
}

double CartesianMesh::face_area(int axis) const {
  double area = 1.0;
  for (int a = 0; a < dim_; ++a) {
    if (a != axis) {
      area *= cell_size_[a];
    }
  }
  return area;
}

CellClassification classify_cells(const CartesianMesh &mesh, const LevelSet &levelset) {
  CellClassification classification;
  classification.flags.assign(mesh.num_cells(), Activity::inactive);

  const int dim = mesh.dim();
  const int num_vertices = 1 << dim;
  for (int cell = 0; cell < mesh.num_cells(); ++cell) {
    bool inside = levelset.phi(mesh.cell_center(cell)) <= 0.0;
    for (int v = 0; inside && v < num_vertices; ++v) {
      Point ref = {0.0, 0.0, 0.0};
      for (int a = 0; a < dim; ++a) {
        ref[a] = static_cast<double>((v >> a) & 1);
      }
      inside = levelset.phi(mesh.to_physical(cell, ref)) <= 0.0;
    }
    if (inside) {
      classification.flags[cell] = Activity::active;
      classification.active_cells.push_back(cell);
    }
  }

  if (classification.active_cells.empty()) {
    throw NoActiveCellsError("classification yields zero active cells");
  }
  return classification;
}

bool domain_touches_mesh_boundary(const CartesianMesh &mesh, const LevelSet &levelset) {
  const int dim = mesh.dim();
  const auto &cells = mesh.cells_per_axis();
  std::array<int, 3> nodes = {1, 1, 1};
  int total = 1;
  for (int a = 0; a < dim; ++a) {
    nodes[a] = cells[a] + 1;
    total *= nodes[a];
  }
  for (int idx = 0; idx < total; ++idx) {
    std::array<int, 3> multi = {0, 0, 0};
    int rest = idx;
    bool on_boundary = false;
    for (int a = 0; a < dim; ++a) {
      multi[a] = rest % nodes[a];
      rest /= nodes[a];
      on_boundary = on_boundary || multi[a] == 0 || multi[a] == nodes[a] - 1;
    }
    if (!on_boundary) {
      continue;
    }
    Point x = mesh.origin();
    for (int a = 0; a < dim; ++a) {
      x[a] += multi[a] * mesh.cell_size()[a];
    }
    if (levelset.phi(x) < 0.0) {
      return true;
    }
  }
  return false;
}

std::vector<FaceRecord> collect_faces(const CartesianMesh &mesh,
                                      const CellClassification &classification) {
  std::vector<FaceRecord> faces;
  for (int cell : classification.active_cells) {
    for (int axis = 0; axis < mesh.dim(); ++axis) {
      for (int side = 0; side < 2; ++side) {
        const int neighbor = mesh.neighbor(cell, axis, side);
        const bool neighbor_active = neighbor >= 0 && classification.is_active(neighbor);
        if (neighbor_active) {
          // Interior faces are listed once, from the lower cell's upper side.
          if (side == 1) {
            faces.push_back(FaceRecord{FaceKind::interior, cell, axis, side, neighbor});
          }
        } else {
          faces.push_back(FaceRecord{FaceKind::surrogate, cell, axis, side, -1});
        }
      }
    }
  }
  return faces;
}

DofLayout::DofLayout(const CartesianMesh &mesh, const CellClassification &classification,
                     int degree, Discretization discretization)
    : degree_(degree), discretization_(discretization) {
  const int dim = mesh.dim();
  dofs_per_cell_ = tensor_size(degree, dim);
  active_rank_.assign(mesh.num_cells(), -1);
  for (std::size_t r = 0; r < classification.active_cells.size(); ++r) {
    active_rank_[classification.active_cells[r]] = static_cast<int>(r);
  }

  const int num_active = classification.num_active();
  cell_dof_indices_.resize(static_cast<std::size_t>(num_active) * dofs_per_cell_);

  if (discretization == Discretization::dg) {
    std::iota(cell_dof_indices_.begin(), cell_dof_indices_.end(), 0);
    num_dofs_ = num_active * dofs_per_cell_;
    return;
  }

  // CG: identify local nodes with points of the global degree-p node lattice
  // (cells * degree + 1 nodes per axis), then compress the touched lattice
  // points in lattice order.
  std::array<std::int64_t, 3> lattice_nodes = {1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    lattice_nodes[a] = static_cast<std::int64_t>(mesh.cells_per_axis()[a]) * degree + 1;
  }
  const int n1 = degree + 1;

  std::vector<std::int64_t> touched;
  touched.reserve(cell_dof_indices_.size());
  const auto lattice_index = [&](int cell, int local) {
    const auto cell_multi = mesh.cell_multi_index(cell);
    std::int64_t idx = 0;
    int rest = local;
    std::array<int, 3> local_multi = {0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      local_multi[a] = rest % n1;
      rest /= n1;
    }
    for (int a = dim - 1; a >= 0; --a) {
      idx = idx * lattice_nodes[a] +
            (static_cast<std::int64_t>(cell_multi[a]) * degree + local_multi[a]);
    }
    return idx;
  };

  for (int cell : classification.active_cells) {
    for (int local = 0; local < dofs_per_cell_; ++local) {
      touched.push_back(lattice_index(cell, local));
    }
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  num_dofs_ = static_cast<int>(touched.size());

  for (int r = 0; r < num_active; ++r) {
    const int cell = classification.active_cells[r];
    for (int local = 0; local < dofs_per_cell_; ++local) {
      const auto it =
          std::lower_bound(touched.begin(), touched.end(), lattice_index(cell, local));
      cell_dof_indices_[static_cast<std::size_t>(r) * dofs_per_cell_ + local] =
          static_cast<int>(it - touched.begin());
    }
  }
}

std::span<const int> DofLayout::cell_dofs(int cell) const {
  const int rank = active_rank_[cell];
  if (rank < 0) {
    throw std::invalid_argument("DofLayout::cell_dofs: cell is not active");
  }
  return {cell_dof_indices_.data() + static_cast<std::size_t>(rank) * dofs_per_cell_,
          static_cast<std::size_t>(dofs_per_cell_)};
}

CellTensor gather(std::span<const double> global, int cell, const DofLayout &layout, int dim) {
  CellTensor local(layout.degree(), dim);
  const auto dofs = layout.cell_dofs(cell);
  for (int i = 0; i < local.size(); ++i) {
    local.coefficients[i] = global[dofs[i]];
  }
  return local;
}

void scatter_add(const CellTensor &local, int cell, const DofLayout &layout,
                 std::span<double> global) {
  const auto dofs = layout.cell_dofs(cell);
  for (int i = 0; i < local.size(); ++i) {
    global[dofs[i]] += local.coefficients[i];
  }
}

std::vector<int> partition_weights(const CartesianMesh &mesh,
                                   const CellClassification &classification,
                                   std::span<const FaceRecord> faces) {
  const int surrogate_weight = (mesh.dim() == 3) ? 40 : 20;
  std::vector<int> weights(mesh.num_cells(), 0);
  for (int cell : classification.active_cells) {
    weights[cell] = 10;
  }
  for (const auto &face : faces) {
    if (face.kind == FaceKind::surrogate) {
      weights[face.owner] += surrogate_weight;
    }
  }
  return weights;
}

namespace {

// Number of parts a greedy packing of w[i..] needs under cap, at most limit+1.
int parts_needed(std::span<const std::int64_t> prefix, int begin, std::int64_t cap, int limit) {
  const int m = static_cast<int>(prefix.size()) - 1;
  int parts = 0;
  int i = begin;
  while (i < m) {
    // Largest j with sum(i..j-1) <= cap.
    const auto it = std::upper_bound(prefix.begin() + i + 1, prefix.end(), prefix[i] + cap);
    const int j = static_cast<int>(it - prefix.begin()) - 1;
    if (j == i) {
      return limit + 1;  // single weight exceeds cap
    }
    i = j;
    ++parts;
    if (parts > limit) {
      return parts;
    }
  }
  return parts;
}

}  // namespace

std::vector<int> weighted_partition(const CartesianMesh &mesh,
                                    const CellClassification &classification,
                                    std::span<const FaceRecord> faces, int n_parts) {
  if (n_parts < 1) {
    throw std::invalid_argument("weighted_partition: n_parts must be >= 1");
  }
  const auto weights = partition_weights(mesh, classification, faces);
  const auto &active = classification.active_cells;
  const int m = static_cast<int>(active.size());

  std::vector<std::int64_t> prefix(m + 1, 0);
  std::int64_t max_weight = 0;
  for (int i = 0; i < m; ++i) {
    prefix[i + 1] = prefix[i] + weights[active[i]];
    max_weight = std::max<std::int64_t>(max_weight, weights[active[i]]);
  }

  // Minimal feasible cap by bisection, then earliest-split reconstruction.
  std::int64_t lo = max_weight;
  std::int64_t hi = prefix[m];
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (parts_needed(prefix, 0, mid, n_parts) <= n_parts) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const std::int64_t cap = lo;

  // suffix_parts[i] = parts needed for cells i.. under the optimal cap.
  std::vector<int> suffix_parts(m + 1, 0);
  {
    std::vector<int> next(m);
    for (int i = 0; i < m; ++i) {
      const auto it = std::upper_bound(prefix.begin() + i + 1, prefix.end(), prefix[i] + cap);
      next[i] = static_cast<int>(it - prefix.begin()) - 1;
    }
    for (int i = m - 1; i >= 0; --i) {
      suffix_parts[i] = 1 + suffix_parts[next[i]];
    }
  }

  std::vector<int> assignment(mesh.num_cells(), -1);
  int begin = 0;
  for (int part = 0; part < n_parts && begin < m; ++part) {
    const int parts_left = n_parts - part - 1;
    // Smallest end whose prefix fits the cap and whose suffix still packs
    // into the remaining parts; feasibility of the cap guarantees one exists.
    int end = begin;
    while (prefix[end + 1] - prefix[begin] > cap || suffix_parts[end + 1] > parts_left) {
      ++end;
    }
    for (int i = begin; i <= end; ++i) {
      assignment[active[i]] = part;
    }
    begin = end + 1;
  }
  return assignment;
}

void write_mesh_summary_csv(std::ostream &out, const CartesianMesh &mesh,
                            const CellClassification &classification,
                            std::span<const FaceRecord> faces) {
  int interior = 0;
  int surrogate = 0;
  for (const auto &face : faces) {
    (face.kind == FaceKind::interior ? interior : surrogate) += 1;
  }
  out << "total_cells,active_cells,interior_faces,surrogate_faces\n";
  out << mesh.num_cells() << ',' << classification.num_active() << ',' << interior << ','
      << surrogate << '\n';
}

void write_partition_csv(std::ostream &out, std::span<const int> assignment,
                         std::span<const int> weights, int n_parts) {
  std::vector<std::int64_t> part_weight(n_parts, 0);
  std::vector<int> part_cells(n_parts, 0);
  for (std::size_t cell = 0; cell < assignment.size(); ++cell) {
    if (assignment[cell] >= 0) {
      part_weight[assignment[cell]] += weights[cell];
      part_cells[assignment[cell]] += 1;
    }
  }
  std::int64_t total = 0;
  std::int64_t max_weight = 0;
  for (int p = 0; p < n_parts; ++p) {
    total += part_weight[p];
    max_weight = std::max(max_weight, part_weight[p]);
  }
  const double average = static_cast<double>(total) / n_parts;
  const double imbalance = average > 0.0 ? static_cast<double>(max_weight) / average : 0.0;

  const auto old_precision = out.precision(17);
  out << "part,num_cells,weight,imbalance_ratio\n";
  for (int p = 0; p < n_parts; ++p) {
    out << p << ',' << part_cells[p] << ',' << part_weight[p] << ',' << imbalance << '\n';
  }
  out.precision(old_precision);
}

}  // namespace mfsbm
