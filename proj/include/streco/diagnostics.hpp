#ifndef STRECO_DIAGNOSTICS_HPP
#define STRECO_DIAGNOSTICS_HPP

#include <string>
#include <utility>
#include <vector>

#include "streco/secondorder.hpp"

namespace streco {

struct NormReport {
  std::vector<std::pair<std::string, double>> values;
  /// Empirical constant of the applicable weighted stability estimate:
  /// (global weighted state norm) / (state-space norm); 0 when the
  /// denominator is below 1e-14.
  double C_emp = 0.0;

  double get(const std::string& label) const;
};

/// Global weighted norms of a reconstruction against a Carleman reference
/// family: ||carl0^{-1} y||_{L2(QT)}, ||carl1^{-1} dy/dx||, the state-norm
/// components ||rho0^{-1}y||_{qT} and ||rho^{-1}Ly|| (second order; the
/// first-order analogues use I/J and include ||carl1^{-1} p||), and C_emp.
NormReport weighted_norms(const Field& y, const Field* p,
                          const WeightFamily& carleman,
                          const WeightFamily& formulation_weights,
                          const ObservationSet& obs, const Coefficients& coeffs,
                          double eta, int quad_order = 3);

/// Discrete inf-sup constant: smallest generalized singular value of B with
/// respect to the primal-norm Gram and the multiplier mass,
/// delta_h^2 = lambda_min(M^{-1} B Ky^{-1} B^T). Dense solve below 500
/// multiplier DOFs, inverse iteration above.
double estimate_infsup(const SaddleSystem& system, int max_iters = 400,
                       double tol = 1e-6);

/// Weak residual of the multiplier optimality equation: the first saddle
/// equation tested against the free primal DOFs,
///   r_i = r * (equation term) + b-coupling + misfit load terms,
/// normalized by the right-hand-side scale. r = 0 drops the augmentation
/// term and measures the pure adjoint-equation residual.
double multiplier_consistency(const Field& lambda, const Field& y,
                              const ObservationSet& obs,
                              const WeightFamily& weights,
                              const Coefficients& coeffs, double r);

}  // namespace streco

#endif
