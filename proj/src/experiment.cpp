#include "streco/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace streco {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

void ensure_parent_dir(const std::filesystem::path& p) {
  std::error_code ec;
  if (p.has_parent_path())
    std::filesystem::create_directories(p.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + p.parent_path().string());
}

MultiplierKind multiplier_kind(const std::string& name) {
  if (name == "p0") return MultiplierKind::P0;
  if (name == "q1") return MultiplierKind::Q1;
  return MultiplierKind::Hermite;
}

StabilizedRealization realization_kind(const std::string& name) {
  return name == "literal" ? StabilizedRealization::Literal
                           : StabilizedRealization::Matched;
}

/// ||y_h - truth||_{L2(QT)} plain and against the Carleman state reference.
void field_errors(const Field& y, const Field& truth,
                  const WeightFamily& reference, int quad_order, double& l2,
                  double& carl0) {
  const QuadratureSet q = quadrature_points(y.space.grid, quad_order);
  double s = 0.0, sw = 0.0;
  for (const QuadPoint& p : q.points) {
    const double diff =
        evaluate_field(y, p.x, p.t).value - evaluate_field(truth, p.x, p.t).value;
    s += p.w * diff * diff;
    const double c0 = eval_inverse_weight(reference, WeightMember::Carl0, p.x, p.t);
    sw += p.w * c0 * c0 * diff * diff;
  }
  l2 = std::sqrt(s);
  carl0 = std::sqrt(sw);
}

WeightFamily carleman_reference(const ExperimentConfig& cfg) {
  if (cfg.weight_kind == "carleman-c" || cfg.weight_kind == "carleman-p")
    return make_weights(cfg);
  ExperimentConfig ref = cfg;
  ref.weight_kind = "carleman-c";
  return make_weights(ref);
}

void write_multiplier_csv(const std::string& path, const Field& lambda,
                          const Field* mu) {
  std::ostringstream out;
  out << "x,t" << (mu ? ",lambda,mu" : ",value") << "\n";
  const FemSpace& sp = lambda.space;
  const SpaceTimeGrid& g = sp.grid;
  if (sp.kind == BasisKind::PiecewiseConstantP0) {
    for (int c = 0; c < g.cell_count(); ++c) {
      const auto cell = g.cell(c);
      out << fmt(0.5 * (cell.x0 + cell.x1)) << ',' << fmt(0.5 * (cell.t0 + cell.t1))
          << ',' << fmt(lambda.dofs[c]);
      if (mu) out << ',' << fmt(mu->dofs[c]);
      out << "\n";
    }
  } else {
    for (int j = 0; j <= g.nt; ++j)
      for (int i = 0; i <= g.nx; ++i) {
        const double x = g.x_min + i * g.dx(), t = j * g.dt();
        out << fmt(x) << ',' << fmt(t) << ','
            << fmt(evaluate_field(lambda, x, t).value);
        if (mu) out << ',' << fmt(evaluate_field(*mu, x, t).value);
        out << "\n";
      }
  }
  write_text_atomic(path, out.str());
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfigError;
  if (dynamic_cast<const IoError*>(&e)) return kExitIoError;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return kExitConfigError;
  return kExitSolverError;
}

const char* exit_category(int code) {
  switch (code) {
    case kExitConfigError: return "ConfigError";
    case kExitIoError: return "IoError";
    default: return "SolverError";
  }
}

void write_text_atomic(const std::string& path, const std::string& content) {
  ensure_parent_dir(path);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << content;
    if (!out) throw IoError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot replace " + path);
}

void write_field_csv(const std::string& path,
                     const std::vector<std::string>& columns,
                     const std::vector<const Field*>& fields) {
  if (fields.empty() || columns.size() != fields.size() + 2)
    throw InvalidExtent("write_field_csv: column/field count mismatch");
  const SpaceTimeGrid& g = fields.front()->space.grid;
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i)
    out << (i ? "," : "") << columns[i];
  out << "\n";
  for (int j = 0; j <= g.nt; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      const double x = g.x_min + i * g.dx(), t = j * g.dt();
      out << fmt(x) << ',' << fmt(t);
      for (const Field* f : fields)
        out << ',' << fmt(evaluate_field(*f, x, t).value);
      out << "\n";
    }
  write_text_atomic(path, out.str());
}

Field generate_truth(const ExperimentConfig& cfg) {
  ExperimentConfig fine = cfg;
  fine.nx = 2 * cfg.nx;
  fine.nt = 2 * cfg.nt;
  const SpaceTimeGrid grid = make_grid(fine);
  const Coefficients coeffs = make_coefficients(fine);
  validate_coefficients(coeffs, grid, fine.quad_order);
  return solve_forward(grid, coeffs);
}

SaddleSystem assemble_from_config(const ExperimentConfig& cfg,
                                  const SpaceTimeGrid& grid,
                                  const WeightFamily& weights,
                                  const ObservationSet& obs,
                                  const Coefficients& coeffs) {
  if (cfg.formulation == "mf")
    return assemble_mf(grid, weights, obs, coeffs, cfg.r, cfg.eta,
                       multiplier_kind(cfg.multiplier));
  if (cfg.formulation == "mf-alpha")
    return assemble_mf_alpha(grid, weights, obs, coeffs, cfg.r, cfg.alpha,
                             cfg.eta, realization_kind(cfg.realization),
                             multiplier_kind(cfg.multiplier));
  if (cfg.formulation == "mf4")
    return assemble_mf4(grid, weights, obs, coeffs, cfg.r1, cfg.r2, cfg.eta1,
                        cfg.eta2);
  if (cfg.formulation == "mf4-alpha")
    return assemble_mf4_alpha(grid, weights, obs, coeffs, cfg.r1, cfg.r2,
                              cfg.alpha1, cfg.alpha2,
                              realization_kind(cfg.realization), cfg.eta1,
                              cfg.eta2);
  if (cfg.formulation == "qr")
    return assemble_qr(grid, weights, obs, coeffs, cfg.eps, cfg.eta);
  throw ConfigError("unknown formulation " + cfg.formulation);
}

RunOutcome run_experiment(const ExperimentConfig& cfg_in) {
  validate_config(cfg_in);
  const auto t_start = std::chrono::steady_clock::now();
  RunOutcome out;
  out.cfg = cfg_in;

  const SpaceTimeGrid grid = make_grid(cfg_in);
  const Coefficients coeffs = make_coefficients(cfg_in);
  validate_coefficients(coeffs, grid, cfg_in.quad_order);
  const WeightFamily weights = make_weights(cfg_in);

  const Field truth = generate_truth(cfg_in);
  const ObservationSet obs =
      make_observation(truth, cfg_in.omega_a, cfg_in.omega_b, grid,
                       cfg_in.quad_order, cfg_in.sigma, cfg_in.seed);
  out.cfg.omega_a = obs.omega_a;
  out.cfg.omega_b = obs.omega_b;

  SaddleSystem system = assemble_from_config(out.cfg, grid, weights, obs, coeffs);

  DualTrace trace;
  if (cfg_in.solver == "dual") {
    if (system.multiplier_dim() == 0)
      throw ConfigError("dual solver requires a formulation with multipliers");
    DualOperator op(system);
    DualOptions opts;
    opts.tol = cfg_in.tol;
    opts.maxit = cfg_in.maxit;
    out.report = minimize_dual(op, opts, &trace);
  } else {
    SolveOptions opts;
    opts.renormalize = cfg_in.renormalize;
    opts.condition_estimates = cfg_in.renormalize;
    out.report = solve_saddle(system, opts);
  }

  const WeightFamily reference = carleman_reference(out.cfg);
  const Field* p_ptr = out.report.p ? &*out.report.p : nullptr;
  out.norms = weighted_norms(out.report.y, p_ptr, reference, weights, obs,
                             coeffs, system.eta, cfg_in.quad_order);
  if (system.multiplier_dim() > 0) out.delta_h = estimate_infsup(system);
  const bool second_order =
      cfg_in.formulation == "mf" || cfg_in.formulation == "mf-alpha";
  if (second_order)
    out.consistency = multiplier_consistency(out.report.lambda, out.report.y,
                                             obs, weights, coeffs, system.r);

  // Artifacts.
  const std::filesystem::path dir(out.cfg.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
  auto at = [&](const char* name) { return (dir / name).string(); };

  std::ostringstream manifest;
  manifest << serialize_config(out.cfg) << "\n[versions]\nstreco = 0.1.0\n"
           << "eigen = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION
           << '.' << EIGEN_MINOR_VERSION << "\n";
  write_text_atomic(at("manifest.txt"), manifest.str());
  out.files.push_back(at("manifest.txt"));

  write_field_csv(at("truth.csv"), {"x", "t", "value"}, {&truth});
  out.files.push_back(at("truth.csv"));
  write_observation_csv(obs, at("observation.csv"));
  out.files.push_back(at("observation.csv"));

  if (p_ptr)
    write_field_csv(at("reconstruction.csv"), {"x", "t", "y", "p"},
                    {&out.report.y, p_ptr});
  else
    write_field_csv(at("reconstruction.csv"), {"x", "t", "y"}, {&out.report.y});
  out.files.push_back(at("reconstruction.csv"));

  std::ostringstream diag;
  diag << "label,value\n";
  for (const auto& [k, v] : out.norms.values) diag << k << ',' << fmt(v) << "\n";
  diag << "C_emp," << fmt(out.norms.C_emp) << "\n";
  diag << "delta_h," << fmt(out.delta_h) << "\n";
  if (second_order) diag << "multiplier_consistency," << fmt(out.consistency) << "\n";
  write_text_atomic(at("diagnostics.csv"), diag.str());
  out.files.push_back(at("diagnostics.csv"));

  if (system.multiplier_dim() > 0) {
    const Field* mu = out.report.mu ? &*out.report.mu : nullptr;
    write_multiplier_csv(at("multiplier.csv"), out.report.lambda, mu);
    out.files.push_back(at("multiplier.csv"));
  }

  if (cfg_in.solver == "dual") {
    std::ostringstream tr;
    tr << "iteration,residual,functional\n";
    for (std::size_t i = 0; i < trace.residuals.size(); ++i)
      tr << i << ',' << fmt(trace.residuals[i]) << ','
         << fmt(trace.functional[i]) << "\n";
    write_text_atomic(at("dual_trace.csv"), tr.str());
    out.files.push_back(at("dual_trace.csv"));
  }

  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  std::ostringstream rep;
  rep << "formulation: " << system.formulation << "\n"
      << "solver: " << cfg_in.solver << "\n"
      << "cost: " << fmt(out.report.cost) << "\n"
      << "misfit_norm: " << fmt(out.report.misfit_norm) << "\n"
      << "residual_norm: " << fmt(out.report.residual_norm) << "\n"
      << "multiplier_norm: " << fmt(out.report.multiplier_norm) << "\n"
      << "obs_norm: " << fmt(out.report.obs_norm) << "\n"
      << "iterations: " << out.report.stats.iterations << "\n"
      << "factor_nnz: " << out.report.stats.factor_nnz << "\n"
      << "condition_before: " << fmt(out.report.stats.condition_before) << "\n"
      << "condition_after: " << fmt(out.report.stats.condition_after) << "\n"
      << "final_residual: " << fmt(out.report.stats.final_residual) << "\n"
      << "delta_h: " << fmt(out.delta_h) << "\n"
      << "C_emp: " << fmt(out.norms.C_emp) << "\n"
      << "runtime_seconds: " << fmt(runtime) << "\n";
  write_text_atomic(at("report.txt"), rep.str());
  out.files.push_back(at("report.txt"));
  return out;
}

int run_experiment(const std::string& config_path) {
  try {
    run_experiment(parse_config(config_path));
    return kExitOk;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    std::cerr << exit_category(code) << ": " << e.what() << "\n";
    return code;
  }
}

SweepResult convergence_sweep(const ExperimentConfig& base, int levels) {
  validate_config(base);
  if (levels < 2) throw ConfigError("sweep requires at least 2 levels");

  SweepResult result;
  const std::filesystem::path dir(base.out_dir);
  result.csv_path = (dir / "sweep.csv").string();

  // One truth for all levels, finer than the finest reconstruction grid.
  ExperimentConfig finest = base;
  finest.nx = base.nx << (levels - 1);
  finest.nt = base.nt << (levels - 1);
  const Field truth = generate_truth(finest);
  const WeightFamily reference = carleman_reference(base);

  auto flush = [&]() {
    std::ostringstream out;
    out << "level,nx,nt,h,misfit,err_l2,err_carl0,lambda_norm,delta_h,runtime\n";
    for (const SweepRow& r : result.rows)
      out << r.level << ',' << r.nx << ',' << r.nt << ',' << fmt(r.h) << ','
          << fmt(r.misfit) << ',' << fmt(r.err_l2) << ',' << fmt(r.err_carl0)
          << ',' << fmt(r.lambda_norm) << ',' << fmt(r.delta_h) << ','
          << fmt(r.runtime) << "\n";
    write_text_atomic(result.csv_path, out.str());
  };
  flush();

  for (int level = 0; level < levels; ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      ExperimentConfig cfg = base;
      cfg.nx = base.nx << level;
      cfg.nt = base.nt << level;
      const SpaceTimeGrid grid = make_grid(cfg);
      const Coefficients coeffs = make_coefficients(cfg);
      validate_coefficients(coeffs, grid, cfg.quad_order);
      const WeightFamily weights = make_weights(cfg);
      const ObservationSet obs =
          make_observation(truth, cfg.omega_a, cfg.omega_b, grid,
                           cfg.quad_order, cfg.sigma, cfg.seed);
      SaddleSystem system = assemble_from_config(cfg, grid, weights, obs, coeffs);
      ReconstructionReport rep;
      if (cfg.solver == "dual") {
        if (system.multiplier_dim() == 0)
          throw ConfigError("dual solver requires a formulation with multipliers");
        DualOperator op(system);
        DualOptions opts;
        opts.tol = cfg.tol;
        opts.maxit = cfg.maxit;
        rep = minimize_dual(op, opts);
      } else {
        SolveOptions opts;
        opts.renormalize = cfg.renormalize;
        rep = solve_saddle(system, opts);
      }
      SweepRow row;
      row.level = level + 1;
      row.nx = cfg.nx;
      row.nt = cfg.nt;
      row.h = std::max(grid.dx(), grid.dt());
      row.misfit = rep.misfit_norm;
      field_errors(rep.y, truth, reference, cfg.quad_order, row.err_l2,
                   row.err_carl0);
      row.lambda_norm = rep.multiplier_norm;
      row.delta_h = system.multiplier_dim() > 0 ? estimate_infsup(system) : 0.0;
      row.runtime =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      result.rows.push_back(row);
      flush();
    } catch (const std::exception& e) {
      result.error = "level " + std::to_string(level + 1) + ": " + e.what();
      break;
    }
  }
  return result;
}

int convergence_sweep(const std::string& config_path, int levels) {
  try {
    const SweepResult res = convergence_sweep(parse_config(config_path), levels);
    if (!res.error.empty()) {
      std::cerr << "SolverError: " << res.error << "\n";
      return kExitSolverError;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    std::cerr << exit_category(code) << ": " << e.what() << "\n";
    return code;
  }
}

}  // namespace streco
