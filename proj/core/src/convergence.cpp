// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsbm/convergence.hpp"

#include <cmath>
#include <ostream>

#include "mfsbm/export.hpp"

namespace mfsbm {

namespace {

// Nested iteration: seed each level with the previous solution, evaluated at
// the fine nodes through the coarse cells (uniform 2x refinement makes the
// parent lookup an integer shift). Fine cells whose parent is inactive start
// from zero.
std::vector<double> interpolate_coarse_solution(const SbmOperator &coarse,
                                                std::span<const double> coarse_x,
                                                const SbmOperator &fine) {
  std::vector<double> guess(fine.num_dofs(), 0.0);
  const int degree = fine.config().degree;
  const int n1 = degree + 1;
  const auto support = fine.shape_matrices().support_points();
  for (int cell : fine.classification().active_cells) {
    const auto fine_multi = fine.mesh().cell_multi_index(cell);
    const std::array<int, 3> coarse_multi = {fine_multi[0] / 2, fine_multi[1] / 2, 0};
    const int parent = coarse.mesh().cell_index(coarse_multi);
    if (!coarse.classification().is_active(parent)) {
      continue;
    }
    const CellTensor local = gather(coarse_x, parent, coarse.layout(), 2);
    const auto dofs = fine.layout().cell_dofs(cell);
    for (int node = 0; node < fine.layout().dofs_per_cell(); ++node) {
      const Point ref = {0.5 * ((fine_multi[0] % 2) + support[node % n1]),
                         0.5 * ((fine_multi[1] % 2) + support[node / n1]), 0.0};
      guess[dofs[node]] = point_evaluate(local, coarse.shape_matrices(), ref);
    }
  }
  return guess;
}

}  // namespace

std::vector<ConvergenceRow> run_convergence_study(const ConvergenceStudy &study) {
  const auto sol = manufactured_poisson_2d();
  const Ball circle(2, study.center, study.radius);

  std::vector<ConvergenceRow> rows;
  std::optional<SbmOperator> previous_op;
  std::vector<double> previous_x;
  for (int level = 0; level < study.levels; ++level) {
    const int cells = study.coarsest_cells << level;
    auto mesh = CartesianMesh::from_box(2, study.box_lo, study.box_hi, {cells, cells, 1});

    OperatorConfig config = study.config;
    config.dim = 2;
    SbmOperator op(std::move(mesh), circle, config, sol.u);

    std::vector<double> guess;
    if (previous_op) {
      guess = interpolate_coarse_solution(*previous_op, previous_x, op);
    }
    const auto b = op.assemble_rhs(sol.f);
    auto [x, report] = gmres_solve(op, b, study.solver, guess);
    if (!report.converged) {
      throw Error("convergence study: solver did not converge at level " +
                  std::to_string(level) + " (residual " +
                  std::to_string(report.final_residual) + ")");
    }

    ConvergenceRow row;
    row.level = level;
    row.h = op.mesh().cell_size()[0];
    row.active_cells = op.classification().num_active();
    row.dofs = op.num_dofs();
    row.l2_error = l2_error(x, sol.u, op);
    row.solve = report;
    if (!rows.empty()) {
      row.rate = std::log(rows.back().l2_error / row.l2_error) / std::log(rows.back().h / row.h);
    }
    rows.push_back(row);
    previous_op.emplace(std::move(op));
    previous_x = std::move(x);
  }
  return rows;
}

void write_convergence_csv(std::ostream &out, const std::vector<ConvergenceRow> &rows) {
  out << "level,h,active_cells,dofs,l2_error,rate\n";
  for (const auto &row : rows) {
    out << row.level << ',' << format_double(row.h) << ',' << row.active_cells << ','
        << row.dofs << ',' << format_double(row.l2_error) << ',';
    if (row.rate) {
      out << format_double(*row.rate);
    }
    out << '\n';
  }
}

}  // namespace mfsbm
