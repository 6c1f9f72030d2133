#ifndef STRECO_EXPERIMENT_HPP
#define STRECO_EXPERIMENT_HPP

#include <string>
#include <vector>

#include "streco/config.hpp"
#include "streco/diagnostics.hpp"
#include "streco/dual.hpp"
#include "streco/firstorder.hpp"

namespace streco {

/// Exit codes of the driver entry points.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitIoError = 3;
inline constexpr int kExitSolverError = 4;

/// Exit code for a thrown error: config errors 2, I/O errors 3, anything
/// else (solver failures) 4.
int exit_code_for(const std::exception& e);
const char* exit_category(int code);

/// Truth generation on a once-refined grid (2x in each direction) so the
/// observation is never sampled from the reconstruction space itself.
Field generate_truth(const ExperimentConfig& cfg);

/// Formulation dispatch from a validated config.
SaddleSystem assemble_from_config(const ExperimentConfig& cfg,
                                  const SpaceTimeGrid& grid,
                                  const WeightFamily& weights,
                                  const ObservationSet& obs,
                                  const Coefficients& coeffs);

struct RunOutcome {
  ExperimentConfig cfg;  // resolved (after omega snapping)
  ReconstructionReport report;
  NormReport norms;
  double delta_h = 0.0;            // 0 when there is no multiplier block
  double consistency = 0.0;        // second-order formulations only
  std::vector<std::string> files;  // artifact paths written
};

/// Full pipeline: truth, observation, assembly, solve, diagnostics, and
/// artifact files (manifest.txt, truth.csv, observation.csv,
/// reconstruction.csv, diagnostics.csv, multiplier.csv, report.txt; plus
/// dual_trace.csv for the dual solver). Throws ConfigError / IoError /
/// solver errors; every file is written atomically.
RunOutcome run_experiment(const ExperimentConfig& cfg);

/// Convenience wrapper: parse + run, mapping exceptions to exit codes and
/// printing the error category and message to stderr.
int run_experiment(const std::string& config_path);

struct SweepRow {
  int level = 0;
  int nx = 0, nt = 0;
  double h = 0.0;
  double misfit = 0.0;
  double err_l2 = 0.0;      // ||y_h - y_truth||_{L2(QT)}
  double err_carl0 = 0.0;   // ||carl0^{-1}(y_h - y_truth)||_{L2(QT)}
  double lambda_norm = 0.0;
  double delta_h = 0.0;
  double runtime = 0.0;  // seconds
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string csv_path;
  std::string error;  // non-empty when a level failed; rows before it kept
};

/// Nested refinement study: nx, nt double per level against one fixed
/// fine-grid truth (2x the finest level). Writes one CSV row per completed
/// level; a per-level failure retains the partial CSV and reports the error.
SweepResult convergence_sweep(const ExperimentConfig& base, int levels);

int convergence_sweep(const std::string& config_path, int levels);

/// Node samples (x, t, value[, extra columns]) of fields on the grid of the
/// first field; 17 significant digits, atomic replace.
void write_field_csv(const std::string& path,
                     const std::vector<std::string>& columns,
                     const std::vector<const Field*>& fields);

void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace streco

#endif
