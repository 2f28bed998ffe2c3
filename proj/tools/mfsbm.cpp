// Copyright (c) 2026 The mfsbm Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfsbm/bench.hpp"
#include "mfsbm/convergence.hpp"
#include "mfsbm/export.hpp"
#include "mfsbm/solver.hpp"
#include "mfsbm/verification.hpp"

using json = nlohmann::json;
using namespace mfsbm;

namespace {

// Exit-code contract: 0 success, 1 assertion failure (rates out of band),
// 2 usage/config error, 3 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void check_keys(const json &object, const std::set<std::string> &allowed,
                const std::string &where) {
  for (const auto &item : object.items()) {
    if (!allowed.contains(item.key())) {
      throw ConfigError("unknown config key '" + item.key() + "' in " + where);
    }
  }
}

Point read_point(const json &array, const std::string &where) {
  if (!array.is_array() || array.size() < 2 || array.size() > 3) {
    throw ConfigError(where + " must be an array of 2 or 3 numbers");
  }
  Point p = {0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < array.size(); ++i) {
    p[i] = array[i].get<double>();
  }
  return p;
}

struct GeometryConfig {
  std::string shape = "ball";
  Point center = {0.0, 0.0, 0.0};
  double radius = 1.0;
  std::vector<std::pair<Point, double>> balls;
  Point box_lo = {-1.3, -1.3, -1.3};
  Point box_hi = {1.3, 1.3, 1.3};
  std::array<int, 3> cells = {8, 8, 8};
};

struct RunConfig {
  OperatorConfig op;
  GeometryConfig geometry;
  // Solver overrides; unset fields keep each command's own defaults.
  std::optional<double> solver_tol;
  std::optional<int> solver_restart;
  std::optional<int> solver_max_iter;
  std::optional<Preconditioner> solver_precondition;
  // convergence
  int levels = 5;
  int coarsest_cells = 8;
  double rate_band_lo = 0.7;
  double rate_band_hi = 1.3;
  // bench
  int p_min = 1;
  int p_max = 8;
  int repetitions = 30;
  int n_apply = 50;
  // partition
  int parts = 4;
  // output
  std::string output;
  std::string vtk_output;
  std::string mesh_summary;
  double sentinel = -1e300;
};

RunConfig parse_config(const json &j) {
  RunConfig config;
  check_keys(j, {"dimension", "degree", "discretization", "extension", "beta", "gamma_f",
                 "threads", "geometry", "solver", "convergence", "bench", "partition", "output",
                 "vtk_output", "mesh_summary", "sentinel"},
             "top level");

  config.op.dim = j.value("dimension", 2);
  config.op.degree = j.value("degree", 1);
  if (j.contains("discretization")) {
    const std::string d = j["discretization"].get<std::string>();
    if (d == "cg") {
      config.op.discretization = Discretization::cg;
    } else if (d == "dg") {
      config.op.discretization = Discretization::dg;
    } else {
      throw ConfigError("discretization must be 'cg' or 'dg'");
    }
  }
  if (j.contains("extension")) {
    const std::string e = j["extension"].get<std::string>();
    if (e == "direct") {
      config.op.extension = ExtensionMode::direct_point_eval;
    } else if (e == "taylor") {
      config.op.extension = ExtensionMode::taylor_first_order;
    } else {
      throw ConfigError("extension must be 'direct' or 'taylor'");
    }
  }
  config.op.beta = j.value("beta", 4.0);
  config.op.gamma_f = j.value("gamma_f", 2.0);
  config.op.threads = j.value("threads", 1);

  if (j.contains("geometry")) {
    const json &g = j["geometry"];
    check_keys(g, {"shape", "center", "radius", "balls", "box", "cells"}, "geometry");
    config.geometry.shape = g.value("shape", std::string("ball"));
    if (g.contains("center")) {
      config.geometry.center = read_point(g["center"], "geometry.center");
    }
    config.geometry.radius = g.value("radius", 1.0);
    if (g.contains("balls")) {
      for (const auto &b : g["balls"]) {
        check_keys(b, {"center", "radius"}, "geometry.balls[]");
        config.geometry.balls.emplace_back(read_point(b["center"], "ball center"),
                                           b["radius"].get<double>());
      }
    }
    if (g.contains("box")) {
      check_keys(g["box"], {"min", "max"}, "geometry.box");
      config.geometry.box_lo = read_point(g["box"]["min"], "geometry.box.min");
      config.geometry.box_hi = read_point(g["box"]["max"], "geometry.box.max");
    }
    if (g.contains("cells")) {
      const auto &cells = g["cells"];
      if (!cells.is_array() || cells.size() < 2) {
        throw ConfigError("geometry.cells must be an array of 2 or 3 integers");
      }
      for (std::size_t i = 0; i < cells.size() && i < 3; ++i) {
        config.geometry.cells[i] = cells[i].get<int>();
      }
    }
  }

  if (j.contains("solver")) {
    const json &s = j["solver"];
    check_keys(s, {"tol", "restart", "max_iter", "precondition"}, "solver");
    if (s.contains("tol")) {
      config.solver_tol = s["tol"].get<double>();
    }
    if (s.contains("restart")) {
      config.solver_restart = s["restart"].get<int>();
    }
    if (s.contains("max_iter")) {
      config.solver_max_iter = s["max_iter"].get<int>();
    }
    if (s.contains("precondition")) {
      const std::string p = s["precondition"].get<std::string>();
      if (p == "none") {
        config.solver_precondition = Preconditioner::none;
      } else if (p == "diagonal") {
        config.solver_precondition = Preconditioner::diagonal;
      } else {
        throw ConfigError("solver.precondition must be 'none' or 'diagonal'");
      }
    }
  }

  if (j.contains("convergence")) {
    const json &c = j["convergence"];
    check_keys(c, {"levels", "coarsest_cells", "rate_band"}, "convergence");
    config.levels = c.value("levels", 5);
    config.coarsest_cells = c.value("coarsest_cells", 8);
    if (c.contains("rate_band")) {
      const auto &band = c["rate_band"];
      if (!band.is_array() || band.size() != 2) {
        throw ConfigError("convergence.rate_band must be [lo, hi] offsets from p");
      }
      config.rate_band_lo = band[0].get<double>();
      config.rate_band_hi = band[1].get<double>();
    }
  }

  if (j.contains("bench")) {
    const json &b = j["bench"];
    check_keys(b, {"p_min", "p_max", "repetitions", "n_apply"}, "bench");
    config.p_min = b.value("p_min", 1);
    config.p_max = b.value("p_max", 8);
    config.repetitions = b.value("repetitions", 30);
    config.n_apply = b.value("n_apply", 50);
  }

  if (j.contains("partition")) {
    const json &p = j["partition"];
    check_keys(p, {"parts"}, "partition");
    config.parts = p.value("parts", 4);
  }

  config.output = j.value("output", std::string());
  config.vtk_output = j.value("vtk_output", std::string());
  config.mesh_summary = j.value("mesh_summary", std::string());
  config.sentinel = j.value("sentinel", -1e300);
  return config;
}

GmresOptions solver_options(const RunConfig &config, GmresOptions defaults) {
  if (config.solver_tol) {
    defaults.tol = *config.solver_tol;
  }
  if (config.solver_restart) {
    defaults.restart = *config.solver_restart;
  }
  if (config.solver_max_iter) {
    defaults.max_iter = *config.solver_max_iter;
  }
  if (config.solver_precondition) {
    defaults.precondition = *config.solver_precondition;
  }
  return defaults;
}

std::unique_ptr<LevelSet> make_levelset(const RunConfig &config) {
  const auto &g = config.geometry;
  if (g.shape == "ball") {
    return std::make_unique<Ball>(config.op.dim, g.center, g.radius);
  }
  if (g.shape == "union_of_balls") {
    if (g.balls.empty()) {
      throw ConfigError("union_of_balls geometry needs a non-empty 'balls' list");
    }
    std::vector<Ball> balls;
    for (const auto &[center, radius] : g.balls) {
      balls.emplace_back(config.op.dim, center, radius);
    }
    return std::make_unique<UnionOfBalls>(std::move(balls));
  }
  throw ConfigError("unknown geometry shape '" + g.shape + "'");
}

CartesianMesh make_mesh(const RunConfig &config) {
  return CartesianMesh::from_box(config.op.dim, config.geometry.box_lo, config.geometry.box_hi,
                                 config.geometry.cells);
}

void warn_if_domain_leaves_mesh(const CartesianMesh &mesh, const LevelSet &levelset) {
  if (domain_touches_mesh_boundary(mesh, levelset)) {
    std::cerr << "warning: the level set is negative on the background-mesh boundary; "
                 "the domain is not fully contained in the mesh box\n";
  }
}

std::ofstream open_output(const std::string &path) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot open output file '" + path + "'");
  }
  return out;
}

void write_to(const std::string &path, const std::function<void(std::ostream &)> &writer) {
  if (path.empty()) {
    writer(std::cout);
  } else {
    auto out = open_output(path);
    writer(out);
  }
}

int cmd_convergence(const RunConfig &config) {
  if (config.op.dim != 2) {
    throw ConfigError("the convergence study is two-dimensional");
  }
  if (config.geometry.shape != "ball") {
    throw ConfigError("the convergence study uses the unit-circle ('ball') geometry");
  }
  ConvergenceStudy study;
  study.config = config.op;
  study.solver = solver_options(config, study.solver);
  study.center = config.geometry.center;
  study.radius = config.geometry.radius;
  study.box_lo = config.geometry.box_lo;
  study.box_hi = config.geometry.box_hi;
  study.coarsest_cells = config.coarsest_cells;
  study.levels = config.levels;

  const auto rows = run_convergence_study(study);
  write_to(config.output, [&rows](std::ostream &out) { write_convergence_csv(out, rows); });

  // h is reported as the cell edge length.
  std::cerr << "note: the h column is the cell edge length\n";

  if (rows.size() < 2) {
    return kExitOk;
  }
  const double rate = rows.back().rate.value();
  const double p = config.op.degree;
  if (rate < p + config.rate_band_lo || rate > p + config.rate_band_hi) {
    std::cerr << "convergence: final observed rate " << rate << " outside [" << p + config.rate_band_lo
              << ", " << p + config.rate_band_hi << "]\n";
    return kExitAssertion;
  }
  return kExitOk;
}

int cmd_solve(const RunConfig &config) {
  const auto mesh = make_mesh(config);
  const auto levelset = make_levelset(config);
  warn_if_domain_leaves_mesh(mesh, *levelset);

  // The manufactured solution provides f and g (it is independent of x3, so
  // the same data drives 3D runs).
  const auto sol = manufactured_poisson_2d();
  SbmOperator op(mesh, *levelset, config.op, sol.u);
  const auto b = op.assemble_rhs(sol.f);
  // Single solves default to the study's solver settings (deep restart,
  // unpreconditioned) so both commands share one pipeline.
  auto [x, report] = gmres_solve(op, b, solver_options(config, ConvergenceStudy().solver));
  if (!report.converged) {
    std::cerr << "solve: GMRES did not converge (residual " << report.final_residual << ")\n";
    return kExitNumerical;
  }
  const double error = l2_error(x, sol.u, op);

  write_to(config.output, [&](std::ostream &out) {
    out << "dofs,iterations,residual,converged,l2_error\n";
    out << op.num_dofs() << ',' << report.iterations << ','
        << format_double(report.final_residual) << ',' << (report.converged ? 1 : 0) << ','
        << format_double(error) << '\n';
  });

  if (!config.vtk_output.empty()) {
    const auto field = sample_solution(op, x, config.sentinel);
    auto out = open_output(config.vtk_output);
    write_vtk_structured_points(out, field, "u");
  }
  return kExitOk;
}

int cmd_bench(const RunConfig &config) {
  const auto mesh = make_mesh(config);
  const auto levelset = make_levelset(config);
  SbmOperator op(mesh, *levelset, config.op);

  std::vector<BenchRecord> records =
      bench_entity_kernels(config.op.dim, config.p_min, config.p_max, config.repetitions);

  const int hardware = static_cast<int>(std::thread::hardware_concurrency());
  std::vector<int> thread_counts = {1};
  if (hardware > 1) {
    thread_counts.push_back(hardware);
  }
  const auto throughput = bench_throughput(op, config.n_apply, thread_counts);
  records.insert(records.end(), throughput.begin(), throughput.end());
  records.push_back(memory_report(op));
  const auto init = init_benchmark(mesh, *levelset, config.op);
  records.push_back(init);

  write_to(config.output, [&records](std::ostream &out) {
    write_bench_csv_header(out);
    for (const auto &record : records) {
      write_bench_csv_row(out, record);
    }
  });

  // Informational: initialization cost relative to one operator application.
  for (const auto &record : records) {
    if (record.kind == "full_apply" && record.threads == 1 && record.median_seconds > 0.0) {
      std::cerr << "note: init time / apply time = "
                << init.median_seconds / record.median_seconds << " (informational)\n";
      break;
    }
  }
  return kExitOk;
}

int cmd_partition(const RunConfig &config) {
  const auto mesh = make_mesh(config);
  const auto levelset = make_levelset(config);
  warn_if_domain_leaves_mesh(mesh, *levelset);

  levelset->validate_resolution(mesh.min_cell_size());
  const auto classification = classify_cells(mesh, *levelset);
  const auto faces = collect_faces(mesh, classification);
  const auto weights = partition_weights(mesh, classification, faces);
  const auto assignment = weighted_partition(mesh, classification, faces, config.parts);

  write_to(config.output, [&](std::ostream &out) {
    write_partition_csv(out, assignment, weights, config.parts);
  });
  if (!config.mesh_summary.empty()) {
    auto out = open_output(config.mesh_summary);
    write_mesh_summary_csv(out, mesh, classification, faces);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Matrix-free shifted boundary method for the Poisson problem"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);

  // Flag overrides for the most common config keys.
  std::optional<int> dimension, degree, threads, levels, coarsest_cells, parts, p_min, p_max,
      repetitions, n_apply;
  std::optional<double> beta, gamma_f, tol;
  std::optional<std::string> discretization, extension, output, vtk_output, mesh_summary,
      precondition;
  app.add_option("--dimension", dimension, "Spatial dimension (2 or 3)");
  app.add_option("--degree", degree, "Polynomial degree");
  app.add_option("--discretization", discretization, "cg or dg");
  app.add_option("--extension", extension, "direct or taylor");
  app.add_option("--beta", beta, "Surrogate penalty scale");
  app.add_option("--gamma-f", gamma_f, "Interior penalty scale");
  app.add_option("--threads", threads, "Worker threads for apply()");
  app.add_option("--tol", tol, "Solver relative tolerance");
  app.add_option("--precondition", precondition, "none or diagonal");
  app.add_option("--levels", levels, "Refinement levels (convergence)");
  app.add_option("--coarsest-cells", coarsest_cells, "Coarsest cells per axis (convergence)");
  app.add_option("--parts", parts, "Partition count (partition)");
  app.add_option("--p-min", p_min, "Lowest degree (bench)");
  app.add_option("--p-max", p_max, "Highest degree (bench)");
  app.add_option("--repetitions", repetitions, "Timed repetitions (bench)");
  app.add_option("--n-apply", n_apply, "Operator applications per throughput run (bench)");
  app.add_option("--output", output, "CSV output path (default stdout)");
  app.add_option("--vtk-output", vtk_output, "VTK field output path (solve)");
  app.add_option("--mesh-summary", mesh_summary, "Mesh summary CSV path (partition)");

  auto *convergence = app.add_subcommand("convergence", "Manufactured-solution rate study");
  auto *solve = app.add_subcommand("solve", "Single solve with field export");
  auto *bench = app.add_subcommand("bench", "Kernel, throughput, memory, and init benchmarks");
  auto *partition = app.add_subcommand("partition", "Weighted partition report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    json j = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      try {
        in >> j;
      } catch (const json::exception &e) {
        throw ConfigError(std::string("cannot parse config JSON: ") + e.what());
      }
    }
    RunConfig config = parse_config(j);

    // Flags override config keys.
    if (dimension) config.op.dim = *dimension;
    if (degree) config.op.degree = *degree;
    if (discretization) {
      if (*discretization == "cg") {
        config.op.discretization = Discretization::cg;
      } else if (*discretization == "dg") {
        config.op.discretization = Discretization::dg;
      } else {
        throw ConfigError("--discretization must be 'cg' or 'dg'");
      }
    }
    if (extension) {
      if (*extension == "direct") {
        config.op.extension = ExtensionMode::direct_point_eval;
      } else if (*extension == "taylor") {
        config.op.extension = ExtensionMode::taylor_first_order;
      } else {
        throw ConfigError("--extension must be 'direct' or 'taylor'");
      }
    }
    if (beta) config.op.beta = *beta;
    if (gamma_f) config.op.gamma_f = *gamma_f;
    if (threads) config.op.threads = *threads;
    if (tol) config.solver_tol = *tol;
    if (precondition) {
      if (*precondition == "none") {
        config.solver_precondition = Preconditioner::none;
      } else if (*precondition == "diagonal") {
        config.solver_precondition = Preconditioner::diagonal;
      } else {
        throw ConfigError("--precondition must be 'none' or 'diagonal'");
      }
    }
    if (levels) config.levels = *levels;
    if (coarsest_cells) config.coarsest_cells = *coarsest_cells;
    if (parts) config.parts = *parts;
    if (p_min) config.p_min = *p_min;
    if (p_max) config.p_max = *p_max;
    if (repetitions) config.repetitions = *repetitions;
    if (n_apply) config.n_apply = *n_apply;
    if (output) config.output = *output;
    if (vtk_output) config.vtk_output = *vtk_output;
    if (mesh_summary) config.mesh_summary = *mesh_summary;

    if (config.op.dim != 2 && config.op.dim != 3) {
      throw ConfigError("dimension must be 2 or 3");
    }
    if (config.op.degree < 1) {
      throw ConfigError("degree must be >= 1");
    }
    // 2D defaults for a 3-entry geometry box come out naturally; trim cells.
    if (config.op.dim == 2) {
      config.geometry.cells[2] = 1;
    }

    if (convergence->parsed()) {
      return cmd_convergence(config);
    }
    if (solve->parsed()) {
      return cmd_solve(config);
    }
    if (bench->parsed()) {
      return cmd_bench(config);
    }
    if (partition->parsed()) {
      return cmd_partition(config);
    }
    return kExitConfig;
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
