#ifndef STRECO_CONFIG_HPP
#define STRECO_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "streco/forward.hpp"
#include "streco/weights.hpp"

namespace streco {

/// One coefficient or initial-datum preset. Parameter meaning by preset:
///   constant:   value = params[0]
///   polynomial: sum_k params[k] * x^k
///   eigenmode:  params = {amplitude, mode, offset};
///               offset + amplitude * sin(mode * pi * (x - x_min)/(x_max - x_min))
///   bump:       params = {amplitude, center, width, offset};
///               offset + amplitude * exp(-((x - center)/width)^2)
struct PresetSpec {
  std::string name = "constant";
  std::vector<double> params{0.0};
};

/// Full experiment description, one block per concern; parsed from a
/// sectioned key=value file.
struct ExperimentConfig {
  // [grid]
  int nx = 16, nt = 16;
  double x_min = 0.0, x_max = 1.0, T = 0.5;

  // [coefficients]
  PresetSpec c{"constant", {1.0}};
  PresetSpec d{"constant", {0.0}};
  PresetSpec y0{"eigenmode", {1.0, 1.0, 0.0}};
  bool numeric_c_x = false;  // force central differences for dc/dx

  // [weights]
  std::string weight_kind = "unit";  // unit | power | carleman-c | carleman-p
  double K1 = 1.0, K2 = 1.0, m = 0.5;
  // moderate default cap: it bounds the equation-weight dynamic range so the
  // assembled systems stay solvable in double precision
  double log_cap = 6.0, rho_star = 1e-2;

  // [observation]
  double omega_a = 0.2, omega_b = 0.8;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  int quad_order = 3;

  // [formulation]
  std::string formulation = "mf";  // mf | mf-alpha | mf4 | mf4-alpha | qr
  double r = 1.0, r1 = 1.0, r2 = 1.0;
  double alpha = 0.3, alpha1 = 0.3, alpha2 = 0.3;
  double eta = 1.0, eta1 = 1.0, eta2 = 1.0;
  double eps = 1e-4;
  std::string realization = "matched";  // matched | literal
  std::string multiplier = "p0";        // p0 | q1 | hermite

  // [solver]
  std::string solver = "direct";  // direct | dual
  double tol = 1e-10;
  int maxit = -1;
  bool renormalize = false;

  // [output]
  std::string out_dir = "out";
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

/// Throws ConfigError on any out-of-range or unknown value; called by the
/// parsers and again by the experiment driver before any computation.
void validate_config(const ExperimentConfig& cfg);

/// Resolved config in the same sectioned format, every field explicit.
std::string serialize_config(const ExperimentConfig& cfg);

SpaceTimeGrid make_grid(const ExperimentConfig& cfg);
Coefficients make_coefficients(const ExperimentConfig& cfg);
WeightFamily make_weights(const ExperimentConfig& cfg);

}  // namespace streco

#endif
