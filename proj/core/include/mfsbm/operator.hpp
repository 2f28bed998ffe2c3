// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFSBM_OPERATOR_HPP
#define MFSBM_OPERATOR_HPP

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "mfsbm/geometry.hpp"
#include "mfsbm/mesh.hpp"
#include "mfsbm/tensor_basis.hpp"

namespace mfsbm {

enum class ExtensionMode : std::uint8_t { direct_point_eval = 0, taylor_first_order = 1 };

struct OperatorConfig {
  int dim = 2;
  int degree = 1;
  Discretization discretization = Discretization::cg;
  ExtensionMode extension = ExtensionMode::direct_point_eval;
  double beta = 4.0;     // surrogate penalty scale
  double gamma_f = 2.0;  // interior penalty scale (DG)
  int threads = 1;
};

/// Surrogate boundary penalty sigma_Gamma = beta (p+1)^2 / h.
double sigma_gamma(double h, int degree, double beta = 4.0);
/// Interior (SIPG) penalty sigma_F = gamma_F (p+1)^2 / h.
double sigma_f(double h, int degree, double gamma_f = 2.0);

/// Per-entity operation and entity counts. Cell and interior-face counters
/// record every madd their kernels perform. The surrogate-face counter
/// records the extension point evaluations, the cost the O(p^(2d-1)) face
/// model tracks; the kernel's sum-factorized trace and integration madds are
/// reported separately as aux ops.
struct OperatorCounters {
  std::uint64_t cell_entities = 0;
  std::uint64_t cell_ops = 0;
  std::uint64_t interior_face_entities = 0;
  std::uint64_t interior_face_ops = 0;
  std::uint64_t surrogate_face_entities = 0;
  std::uint64_t surrogate_face_ops = 0;
  std::uint64_t surrogate_face_aux_ops = 0;

  OperatorCounters &operator+=(const OperatorCounters &other);
};

/// CSV rows (entity_kind, count, ops_total, ops_per_entity), one per entity
/// kind, aux ops as their own row.
void write_counters_csv(std::ostream &out, const OperatorCounters &counters);

/// Geometry factors shared by every cell of the uniform mesh, precomputed
/// once: per-point gradient scaling w_q * |K| / h_c^2 in component-major
/// layout.
struct CellKernelData {
  int dim = 0;
  int num_points = 0;
  std::vector<double> grad_scale;  // [c * num_points + q]

  CellKernelData() = default;
  CellKernelData(const CartesianMesh &mesh, const ShapeMatrices1D &sm);
};

/// Local stiffness action of one Cartesian cell.
CellTensor cell_kernel(const CellTensor &u_local, const ShapeMatrices1D &sm,
                       const CellKernelData &geometry, OperatorCounters *counters = nullptr);

/// Geometry of one interior (SIPG) face between cells K1 (side 1) and K2
/// (side 0) along `axis`; the face normal points from K1 into K2.
struct InteriorFaceData {
  int axis = 0;
  double h_normal = 0.0;   // cell extent across the face
  double area = 0.0;       // face measure
  double sigma = 0.0;      // sigma_F
  std::vector<double> quad_weights;  // tensor face weights, lexicographic
};

InteriorFaceData make_interior_face_data(const CartesianMesh &mesh, int axis, int degree,
                                         double gamma_f, const Quadrature1D &quad);

/// SIPG jump/average terms of one interior face.
std::pair<CellTensor, CellTensor> interior_face_kernel(const CellTensor &u_k1,
                                                       const CellTensor &u_k2,
                                                       const ShapeMatrices1D &sm,
                                                       const InteriorFaceData &face,
                                                       OperatorCounters *counters = nullptr);

/// Extension operator E applied to the local solution at one precomputed
/// surrogate point: direct polynomial extrapolation at the projected
/// reference coordinates, or the first-order Taylor form
/// u(x_s) + d . grad u(x_s) from the face trace.
double extension_value(const CellTensor &u_local, const ShapeMatrices1D &sm,
                       const SurrogateFaceData &data, int q, ExtensionMode mode,
                       double trace_value, const Point &trace_gradient_physical,
                       OpCount *point_eval_ops = nullptr);

/// Nitsche terms of one surrogate boundary face.
CellTensor surrogate_face_kernel(const CellTensor &u_local, const ShapeMatrices1D &sm,
                                 const SurrogateFaceData &data, const CartesianMesh &mesh,
                                 const OperatorConfig &config,
                                 OperatorCounters *counters = nullptr);

/// Which groups of terms apply() evaluates; the full operator is the sum.
enum class TermMask : unsigned {
  cells = 1u,
  interior_faces = 2u,
  surrogate_faces = 4u,
  all = 7u,
};
constexpr TermMask operator|(TermMask a, TermMask b) {
  return static_cast<TermMask>(static_cast<unsigned>(a) | static_cast<unsigned>(b));
}
constexpr bool has_term(TermMask mask, TermMask term) {
  return (static_cast<unsigned>(mask) & static_cast<unsigned>(term)) != 0;
}

/// The matrix-free SBM operator: classification, faces, dof layout, and
/// surrogate geometry are built once; apply() then traverses cells and faces
/// with the specialized kernels. Results are bitwise reproducible for a
/// fixed thread count.
class SbmOperator {
 public:
  SbmOperator(CartesianMesh mesh, const LevelSet &levelset, OperatorConfig config,
              const std::function<double(const Point &)> &boundary_value = nullptr);

  const CartesianMesh &mesh() const { return mesh_; }
  const OperatorConfig &config() const { return config_; }
  const CellClassification &classification() const { return classification_; }
  std::span<const FaceRecord> faces() const { return faces_; }
  const DofLayout &layout() const { return *layout_; }
  const ShapeMatrices1D &shape_matrices() const { return *shape_matrices_; }
  std::span<const SurrogateFaceData> surrogate_data() const { return surrogate_data_; }

  int num_dofs() const { return layout_->num_dofs(); }

  /// w = A u. Deterministic for a fixed thread partition; thread counts only
  /// reassociate the buffer reduction.
  void apply(std::span<const double> u, std::span<double> w, TermMask mask = TermMask::all);
  std::vector<double> apply(const std::vector<double> &u, TermMask mask = TermMask::all);

  /// Right-hand side: volume source f plus Nitsche boundary data terms with
  /// g sampled at the projected points on the true boundary.
  std::vector<double> assemble_rhs(const std::function<double(const Point &)> &f,
                                   const std::function<double(const Point &)> &g) const;
  /// Same, with g taken from the values stored at setup.
  std::vector<double> assemble_rhs(const std::function<double(const Point &)> &f) const;

  /// Matrix diagonal assembled from local unit-vector kernel probes.
  std::vector<double> diagonal() const;

  /// Nodal interpolant of a function on the layout's dof set.
  std::vector<double> interpolate(const std::function<double(const Point &)> &fn) const;

  /// Physical coordinates of every dof's support node. For CG layouts nodes
  /// shared between cells appear once.
  std::vector<Point> dof_points() const;

  const OperatorCounters &counters() const { return counters_; }
  void reset_counters() { counters_ = OperatorCounters{}; }

  int threads() const { return config_.threads; }
  void set_threads(int threads);

 private:
  void build_partition();

  CartesianMesh mesh_;
  OperatorConfig config_;
  CellClassification classification_;
  std::vector<FaceRecord> faces_;
  std::unique_ptr<DofLayout> layout_;
  std::unique_ptr<ShapeMatrices1D> shape_matrices_;
  std::vector<SurrogateFaceData> surrogate_data_;
  std::vector<int> face_of_surrogate_;  // face index -> surrogate_data_ index
  CellKernelData cell_data_;
  std::array<InteriorFaceData, 3> interior_face_data_;

  // Entity ranges per worker: contiguous slices of the active-cell sequence
  // and the face list, built from the weighted partition.
  struct WorkerRange {
    std::vector<int> cells;
    std::vector<int> faces;
  };
  std::vector<WorkerRange> worker_ranges_;
  std::vector<std::vector<double>> worker_buffers_;

  OperatorCounters counters_;
};

}  // namespace mfsbm

#endif  // MFSBM_OPERATOR_HPP
