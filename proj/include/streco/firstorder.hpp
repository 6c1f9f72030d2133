#ifndef STRECO_FIRSTORDER_HPP
#define STRECO_FIRSTORDER_HPP

#include "streco/secondorder.hpp"

namespace streco {

/// State/flux pair of the first-order form; both on the continuous bilinear
/// space (the flux is scalar in 1D).
struct PairField {
  Field y, p;
};

/// Pointwise values of I(y,p) = y_t - p_x + d y and J(y,p) = c y_x - p at
/// every quadrature point of the pair's grid, in quadrature order.
struct IJSamples {
  Eigen::VectorXd I, J;
};
IJSamples apply_IJ(const PairField& pair, const Coefficients& coeffs,
                   int quad_order = 3);

/// First-order mixed formulation: primal (y, p) on Q1 x Q1, multipliers
/// (lambda, mu) on P0 x P0; A = misfit + r1 ||rho1^{-1}J||^2-term
/// + r2 ||rho^{-1}I||^2-term; B couples (rho^{-1}I, rho1^{-1}J) to the
/// multipliers; C = 0.
SaddleSystem assemble_mf4(const SpaceTimeGrid& grid,
                          const WeightFamily& weights,
                          const ObservationSet& obs, const Coefficients& coeffs,
                          double r1, double r2, double eta1, double eta2);

/// Stabilized first-order formulation. Matched realization: penalty on the
/// discrete first optimality equation of assemble_mf4 with weight alpha1
/// (see assemble_mf_alpha). Literal realization: multipliers (phi, sigma) on
/// Q1 x Q1 with phi masked on the lateral boundary and at t = T, blocks
/// integrated pointwise as written, with
/// I*(phi,sigma) = -phi_t - sigma_x + d phi.
SaddleSystem assemble_mf4_alpha(const SpaceTimeGrid& grid,
                                const WeightFamily& weights,
                                const ObservationSet& obs,
                                const Coefficients& coeffs, double r1,
                                double r2, double alpha1, double alpha2,
                                StabilizedRealization realization =
                                    StabilizedRealization::Matched,
                                double eta1 = 1.0, double eta2 = 1.0);

/// theta_1 = min(1 - alpha1, r1/eta1, r2/eta2).
double coercivity_theta1_mixed(double alpha1, double r1, double eta1,
                               double r2, double eta2);

/// Closed-form continuous inf-sup constant of the first-order theory:
/// (max{C rho*^{-2}||rho1||^2 + eta1, C rho*^{-2}||rho||^2 + eta2})^{-1/2}.
double infsup_delta_mixed(double c_omega_T, double rho_star, double rho1_sup,
                          double rho_sup, double eta1, double eta2);

}  // namespace streco

#endif
