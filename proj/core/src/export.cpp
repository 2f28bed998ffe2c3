// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsbm/export.hpp"

#include <cstdio>
#include <ostream>

namespace mfsbm {

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

StructuredField sample_solution(const SbmOperator &op, std::span<const double> u,
                                double sentinel) {
  const CartesianMesh &mesh = op.mesh();
  const int dim = mesh.dim();
  const int p = op.config().degree;

  StructuredField field;
  field.dim = dim;
  field.sentinel = sentinel;
  field.origin = mesh.origin();
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) {
    field.dims[a] = mesh.cells_per_axis()[a] * p + 1;
    field.spacing[a] = mesh.cell_size()[a] / p;
    total *= field.dims[a];
  }
  field.values.assign(total, sentinel);
  std::vector<char> written(total, 0);

  const auto node_index = [&](const std::array<int, 3> &node) {
    std::size_t idx = 0;
    for (int a = dim - 1; a >= 0; --a) {
      idx = idx * field.dims[a] + node[a];
    }
    return idx;
  };

  const ShapeMatrices1D &sm = op.shape_matrices();
  const int samples = p + 1;
  int samples_per_cell = 1;
  for (int a = 0; a < dim; ++a) {
    samples_per_cell *= samples;
  }

  // Active cells ascending: boundary nodes are written by the lowest cell.
  for (int cell : op.classification().active_cells) {
    const CellTensor local = gather(u, cell, op.layout(), dim);
    const auto cell_multi = mesh.cell_multi_index(cell);
    for (int s = 0; s < samples_per_cell; ++s) {
      std::array<int, 3> offset = {0, 0, 0};
      int rest = s;
      for (int a = 0; a < dim; ++a) {
        offset[a] = rest % samples;
        rest /= samples;
      }
      std::array<int, 3> node = {0, 0, 0};
      Point ref = {0.0, 0.0, 0.0};
      for (int a = 0; a < dim; ++a) {
        node[a] = cell_multi[a] * p + offset[a];
        ref[a] = static_cast<double>(offset[a]) / p;
      }
      const std::size_t idx = node_index(node);
      if (!written[idx]) {
        field.values[idx] = point_evaluate(local, sm, ref);
        written[idx] = 1;
      }
    }
  }
  return field;
}

void write_vtk_structured_points(std::ostream &out, const StructuredField &field,
                                 const std::string &name) {
  out << "# vtk DataFile Version 3.0\n";
  out << name << "\n";
  out << "ASCII\n";
  out << "DATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << field.dims[0] << ' ' << field.dims[1] << ' ' << field.dims[2] << '\n';
  out << "ORIGIN " << format_double(field.origin[0]) << ' ' << format_double(field.origin[1])
      << ' ' << format_double(field.origin[2]) << '\n';
  const double dz = field.dim > 2 ? field.spacing[2] : 1.0;
  out << "SPACING " << format_double(field.spacing[0]) << ' ' << format_double(field.spacing[1])
      << ' ' << format_double(dz) << '\n';
  out << "POINT_DATA " << field.values.size() << '\n';
  out << "SCALARS " << name << " double 1\n";
  out << "LOOKUP_TABLE default\n";
  for (double v : field.values) {
    out << format_double(v) << '\n';
  }
}

}  // namespace mfsbm
