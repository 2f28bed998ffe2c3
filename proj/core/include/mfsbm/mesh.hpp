// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFSBM_MESH_HPP
#define MFSBM_MESH_HPP

#include <iosfwd>
#include <span>
#include <vector>

#include "mfsbm/common.hpp"
#include "mfsbm/tensor_basis.hpp"

namespace mfsbm {

class LevelSet;

/// Uniform Cartesian background mesh. Cell multi-indices map to linear
/// indices lexicographically, first axis fastest.
class CartesianMesh {
 public:
  CartesianMesh(int dim, const Point &origin, const Point &cell_size,
                const std::array<int, 3> &cells_per_axis);

  /// Convenience constructor for a box [lo, hi] split into the given number
  /// of cells per axis.
  static CartesianMesh from_box(int dim, const Point &lo, const Point &hi,
                                const std::array<int, 3> &cells_per_axis);

  int dim() const { return dim_; }
  const Point &origin() const { return origin_; }
  const Point &cell_size() const { return cell_size_; }
  const std::array<int, 3> &cells_per_axis() const { return cells_per_axis_; }
  int num_cells() const { return num_cells_; }

  /// Smallest per-axis spacing; the mesh size parameter used by penalty
  /// formulas.
  double min_cell_size() const;

  int cell_index(const std::array<int, 3> &multi) const;
  std::array<int, 3> cell_multi_index(int cell) const;

  /// Coordinates of the cell's lower corner.
  Point cell_corner(int cell) const;
  Point cell_center(int cell) const;
  /// Map a point in the cell's reference frame [0,1]^d to physical space.
  Point to_physical(int cell, const Point &ref) const;
  /// Inverse of to_physical; the result may lie outside [0,1]^d.
  Point to_reference(int cell, const Point &x) const;

  /// Index of the face-sharing neighbor along axis/side, or -1 outside the
  /// mesh.
  int neighbor(int cell, int axis, int side) const;

  double cell_volume() const;
  double face_area(int axis) const;

 private:
  int dim_;
  Point origin_;
  Point cell_size_;
  std::array<int, 3> cells_per_axis_;
  int num_cells_;
};

enum class Activity : std::uint8_t { inactive = 0, active = 1 };

/// Per-cell activity flags against a level set: a cell is active iff phi <= 0
/// at all 2^d vertices and at the cell center (strict-interior criterion).
struct CellClassification {
  std::vector<Activity> flags;
  std::vector<int> active_cells;  // lexicographic order

  bool is_active(int cell) const { return flags[cell] == Activity::active; }
  int num_active() const { return static_cast<int>(active_cells.size()); }
};

CellClassification classify_cells(const CartesianMesh &mesh, const LevelSet &levelset);

/// True if the level set is negative anywhere on the background-mesh
/// boundary, i.e. the domain is not fully contained in the mesh box. Checked
/// at the boundary vertices of the mesh.
bool domain_touches_mesh_boundary(const CartesianMesh &mesh, const LevelSet &levelset);

enum class FaceKind : std::uint8_t { interior = 0, surrogate = 1 };

/// A mesh face adjacent to at least one active cell. Interior faces separate
/// two active cells and are recorded once, owned by the lower cell (side 1).
/// Surrogate faces are faces of active cells whose neighbor is inactive or
/// outside the mesh; their outward normal is -e_axis (side 0) or +e_axis
/// (side 1).
struct FaceRecord {
  FaceKind kind;
  int owner;     // active cell
  int axis;      // 0..dim-1
  int side;      // 0 or 1, face of the owner cell
  int neighbor;  // interior faces only, else -1

  Point surrogate_normal(int /*dim*/) const {
    Point n = {0.0, 0.0, 0.0};
    n[axis] = (side == 1) ? 1.0 : -1.0;
    return n;
  }
};

std::vector<FaceRecord> collect_faces(const CartesianMesh &mesh,
                                      const CellClassification &classification);

enum class Discretization : std::uint8_t { cg = 0, dg = 1 };

/// Map from (active cell, local lexicographic index) to global degrees of
/// freedom. DG blocks are disjoint per cell; CG indices are shared on cell
/// interfaces via the global tensor node lattice.
class DofLayout {
 public:
  DofLayout(const CartesianMesh &mesh, const CellClassification &classification, int degree,
            Discretization discretization);

  int degree() const { return degree_; }
  Discretization discretization() const { return discretization_; }
  int num_dofs() const { return num_dofs_; }
  int dofs_per_cell() const { return dofs_per_cell_; }

  /// Global indices of the given active cell's local dofs, lexicographic.
  std::span<const int> cell_dofs(int cell) const;

  /// Rank of an active cell in the lexicographic active sequence, -1 if
  /// inactive.
  int active_rank(int cell) const { return active_rank_[cell]; }

 private:
  int degree_;
  Discretization discretization_;
  int num_dofs_;
  int dofs_per_cell_;
  std::vector<int> active_rank_;
  std::vector<int> cell_dof_indices_;  // num_active x dofs_per_cell
};

/// Read the local coefficients of a cell from a global vector.
CellTensor gather(std::span<const double> global, int cell, const DofLayout &layout, int dim);

/// Accumulate local coefficients into a global vector. Not internally
/// synchronized; concurrent use must write to private buffers.
void scatter_add(const CellTensor &local, int cell, const DofLayout &layout,
                 std::span<double> global);

/// Partition weights from the workload model: inactive cells weigh 0, active
/// cells 10, plus 20 (2D) or 40 (3D) per owned surrogate face.
std::vector<int> partition_weights(const CartesianMesh &mesh,
                                   const CellClassification &classification,
                                   std::span<const FaceRecord> faces);

/// Split the lexicographic active-cell sequence into n_parts contiguous
/// ranges minimizing the maximum part weight (earliest split on ties).
/// Returns a per-cell part assignment; inactive cells get -1.
std::vector<int> weighted_partition(const CartesianMesh &mesh,
                                    const CellClassification &classification,
                                    std::span<const FaceRecord> faces, int n_parts);

/// Cell/face counts as a one-row CSV with header.
void write_mesh_summary_csv(std::ostream &out, const CartesianMesh &mesh,
                            const CellClassification &classification,
                            std::span<const FaceRecord> faces);

/// Per-part weight sums and the imbalance ratio (max/average over nonempty
/// average) as CSV.
void write_partition_csv(std::ostream &out, std::span<const int> assignment,
                         std::span<const int> weights, int n_parts);

}  // namespace mfsbm

#endif  // MFSBM_MESH_HPP
