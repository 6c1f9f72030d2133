#ifndef STRECO_FORWARD_HPP
#define STRECO_FORWARD_HPP

#include <Eigen/Core>
#include <functional>

#include "streco/grid.hpp"

namespace streco {

/// Problem data for L y = y_t - (c(x) y_x)_x + d(x,t) y = f.
struct Coefficients {
  std::function<double(double)> c = [](double) { return 1.0; };
  /// dc/dx; when empty a central difference of c is used.
  std::function<double(double)> c_x;
  double c0 = 1.0;
  std::function<double(double, double)> d = [](double, double) { return 0.0; };
  std::function<double(double, double)> f = [](double, double) { return 0.0; };
  /// Vector source of the first-order form (scalar flux component in 1D).
  std::function<double(double, double)> F = [](double, double) { return 0.0; };
  std::function<double(double)> y0 = [](double) { return 0.0; };

  double eval_c_x(double x) const;
};

/// Checks c >= c0 > 0 at the spatial quadrature abscissae and that d is
/// finite at all quadrature points.
void validate_coefficients(const Coefficients& coeffs, const SpaceTimeGrid& grid,
                           int quad_order = 3);

/// A discrete field: DOF vector over a FemSpace.
struct Field {
  FemSpace space;
  Eigen::VectorXd dofs;
};

struct FieldEval {
  double value = 0, dx = 0, dt = 0, dxx = 0;
};

/// Point evaluation anywhere in Q_T (max_deriv as in eval_basis).
FieldEval evaluate_field(const Field& field, double x, double t,
                         int max_deriv = 0);

/// Closed-form scalar function of (x,t) with the derivatives a Hermite
/// interpolant needs.
struct ScalarField2D {
  std::function<double(double, double)> f;
  std::function<double(double, double)> fx;   // Hermite only
  std::function<double(double, double)> ft;   // Hermite only
  std::function<double(double, double)> fxt;  // Hermite only
};

Field interpolate(const FemSpace& space, const ScalarField2D& fn);

/// theta-scheme in time, P1 in space; result interpolated onto the grid's
/// space-time Q1 space.
Field solve_forward(const SpaceTimeGrid& grid, const Coefficients& coeffs,
                    double theta = 0.5);

/// Galerkin P1/P0 semidiscretization of the first-order form with the flux
/// block eliminated through its (diagonal, invertible) weighted mass matrix;
/// the reduced ODE system is integrated by Crank-Nicolson. Returns (y, p)
/// on the grid's Q1 space-time space.
struct ForwardMixedSolution {
  Field y, p;
};
ForwardMixedSolution solve_forward_mixed(const SpaceTimeGrid& grid,
                                         const Coefficients& coeffs);

struct EstimateReport {
  double lhs = 0;    // dual-norm + H1 + flux terms
  double rhs = 0;    // data norms
  double ratio = 0;  // lhs/rhs, 0 when rhs vanishes
};

/// Discrete surrogate of the mixed-form energy estimate; the H^{-1} norm is
/// replaced by the norm induced by the inverse of the diagonal of the
/// stiffness matrix.
EstimateReport verify_energy_estimate(const Field& y, const Field& p,
                                      const Coefficients& coeffs);

}  // namespace streco

#endif
