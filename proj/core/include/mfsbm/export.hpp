// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MFSBM_EXPORT_HPP
#define MFSBM_EXPORT_HPP

#include <iosfwd>
#include <string>

#include "mfsbm/operator.hpp"

namespace mfsbm {

/// Shortest representation that parses back to the same double ('%.17g').
std::string format_double(double value);

/// A scalar field sampled on the uniform degree-p subdivision of the
/// background mesh (cells * degree + 1 nodes per axis); nodes outside the
/// active region carry the sentinel.
struct StructuredField {
  int dim = 0;
  std::array<int, 3> dims = {1, 1, 1};
  Point origin = {0.0, 0.0, 0.0};
  Point spacing = {0.0, 0.0, 0.0};
  double sentinel = 0.0;
  std::vector<double> values;  // lexicographic, first axis fastest
};

/// Evaluate the finite element solution at the uniform sample grid. Nodes on
/// boundaries between active cells are evaluated from the lowest cell index.
StructuredField sample_solution(const SbmOperator &op, std::span<const double> u,
                                double sentinel);

/// Legacy-ASCII structured-points VTK with one scalar field.
void write_vtk_structured_points(std::ostream &out, const StructuredField &field,
                                 const std::string &name);

}  // namespace mfsbm

#endif  // MFSBM_EXPORT_HPP
