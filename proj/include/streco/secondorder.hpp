#ifndef STRECO_SECONDORDER_HPP
#define STRECO_SECONDORDER_HPP

#include <Eigen/SparseCore>
#include <optional>
#include <string>
#include <vector>

#include "streco/forward.hpp"
#include "streco/observe.hpp"
#include "streco/weights.hpp"

namespace streco {

/// Symmetric block system [[A, B^T],[B, -C]] with right-hand side (l1, l2).
/// Primal DOFs come first (concatenation of primal_spaces), multiplier DOFs
/// second (concatenation of multiplier_spaces). Dirichlet-constrained DOFs
/// are eliminated symmetrically with a unit diagonal.
struct SaddleSystem {
  Eigen::SparseMatrix<double> A, B, C;
  Eigen::VectorXd l1, l2;
  std::vector<FemSpace> primal_spaces;
  std::vector<FemSpace> multiplier_spaces;
  std::vector<bool> primal_mask;  // true = constrained to zero

  /// Gram matrices of the norms entering the estimates: the primal
  /// (state-space) norm and the multiplier L2 mass.
  Eigen::SparseMatrix<double> primal_gram, multiplier_gram;

  std::string formulation;
  double r = 1.0, r2 = 0.0;
  double alpha = 0.0, alpha2 = 0.0;
  double eta = 1.0, eta2 = 1.0;
  int quad_order = 3;
  WeightFamily weights;
  ObservationSet obs;
  Coefficients coeffs;

  int primal_dim() const { return static_cast<int>(A.rows()); }
  int multiplier_dim() const { return static_cast<int>(B.rows()); }

  Eigen::SparseMatrix<double> full_matrix() const;
  Eigen::VectorXd full_rhs() const;
};

struct SolverStats {
  long long factor_nnz = 0;
  int iterations = 0;
  double condition_before = 0.0, condition_after = 0.0;
  double final_residual = 0.0;
};

struct ReconstructionReport {
  Field y;
  std::optional<Field> p;
  Field lambda;
  std::optional<Field> mu;
  double cost = 0.0;             // J(y)
  double misfit_norm = 0.0;      // ||rho0^{-1}(y - y_obs)||_{L2(qT)}
  double residual_norm = 0.0;    // ||rho^{-1}Ly|| (or combined I/J residual)
  double multiplier_norm = 0.0;  // L2 mass norm of the multiplier(s)
  double obs_norm = 0.0;         // ||rho0^{-1} y_obs||_{L2(qT)}
  SolverStats stats;
};

enum class MultiplierKind { P0, Q1, Hermite };

/// Plain augmented formulation: Hermite primal, A = misfit over q_T
/// + r * equation term over Q_T; B couples rho^{-1}L y to the multiplier;
/// C = 0.
SaddleSystem assemble_mf(const SpaceTimeGrid& grid, const WeightFamily& weights,
                         const ObservationSet& obs, const Coefficients& coeffs,
                         double r, double eta,
                         MultiplierKind mult = MultiplierKind::P0);

/// How the stabilized formulations are realized discretely.
///  - Matched (default): the stabilization penalizes the residual of the
///    discrete first optimality equation in a diagonal-weighted norm. This
///    is the discrete counterpart of the continuous penalty on the strong
///    adjoint residual, and it preserves exactly the coincidence of the
///    stabilized and plain solutions.
///  - Literal: blocks integrated pointwise as written, with a C1 Hermite
///    multiplier space carrying the adjoint operator by the product rule.
///    Discretely its solution differs from the plain one; the gap is a
///    reported deviation, not an error.
enum class StabilizedRealization { Matched, Literal };

SaddleSystem assemble_mf_alpha(const SpaceTimeGrid& grid,
                               const WeightFamily& weights,
                               const ObservationSet& obs,
                               const Coefficients& coeffs, double r,
                               double alpha, double eta,
                               StabilizedRealization realization =
                                   StabilizedRealization::Matched,
                               MultiplierKind mult = MultiplierKind::P0);

/// Coercivity constant theta_1 = min(1 - alpha, r/eta) of the stabilized
/// second-order formulation.
double coercivity_theta1(double alpha, double r, double eta);

/// Quasi-reversibility baseline: SPD system on the Hermite primal space,
/// <Py, Py> + eps <y, y>_state with P y = (rho^{-1}Ly, rho0^{-1}y|_{qT});
/// unit_weights() restores the unweighted operator. Returned with an empty
/// multiplier block so solve_saddle applies unchanged.
SaddleSystem assemble_qr(const SpaceTimeGrid& grid, const WeightFamily& weights,
                         const ObservationSet& obs, const Coefficients& coeffs,
                         double eps, double eta);

struct SolveOptions {
  bool renormalize = false;
  bool condition_estimates = false;  // implied by renormalize
};

ReconstructionReport solve_saddle(const SaddleSystem& system,
                                  const SolveOptions& options = {});

/// Splits a stacked solution vector into fields and evaluates the report
/// diagnostics (misfit, residual and multiplier norms, cost).
ReconstructionReport build_report(const SaddleSystem& system,
                                  const Eigen::VectorXd& u);

/// Diagonal renormalization of the primal block: scale factor
/// 1/max(rho0^{-1}(node), floor) per primal DOF (node of the DOF), identity
/// on multipliers.
struct RenormalizedSystem {
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd rhs;
  Eigen::VectorXd scale;  // solution back-map: u = scale .* u_tilde (primal)
  double condition_before = 0.0, condition_after = 0.0;
};
RenormalizedSystem apply_renormalization(const SaddleSystem& system,
                                         const WeightFamily& family,
                                         bool estimate_conditions = true);

/// Spectral condition estimate of a symmetric positive (semi)definite sparse
/// matrix via power iteration and factorized inverse iteration.
double condition_estimate(const Eigen::SparseMatrix<double>& m, int iters = 60);

}  // namespace streco

#endif
