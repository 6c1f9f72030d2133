#ifndef STRECO_WEIGHTS_HPP
#define STRECO_WEIGHTS_HPP

#include <string>
#include <vector>

#include "streco/grid.hpp"

namespace streco {

/// Spatial profile beta(x) = K1 (e^{K2} - e^{beta0(x)}) with
/// beta0(x) = K2 (1 - m psi(x)); psi is a C^1 piecewise-quintic bump that is
/// 0 at the domain endpoints, 1 at the midpoint of omega and strictly
/// monotone on each side, so beta vanishes on the boundary, is positive
/// inside, and has nonvanishing slope outside omega.
struct BetaProfile {
  double K1 = 1.0, K2 = 1.0;
  double omega_a = 0.25, omega_b = 0.75;
  double m = 0.5;
  double x_min = 0.0, x_max = 1.0;

  double psi(double x) const;
  double psi_d(double x) const;
  double psi_dd(double x) const;

  double beta(double x) const;
  double beta_d(double x) const;
  double beta_dd(double x) const;
};

BetaProfile build_beta(double K1, double K2, double omega_a, double omega_b,
                       double m, double x_min, double x_max);

enum class WeightKind { Unit, Power, CarlemanC, CarlemanP };

/// Member roles within a family. Rho/Rho0/Rho1 are the weights entering the
/// formulations (Rho, and Rho1 in the CarlemanP family, are capped at M so
/// they are bounded). Carl* address the raw Carleman references used by the
/// domination checks and the diagnostic norms:
///   CarlemanC: CarlBase = rho_c, Carl0 = rho_c0 = t^{3/2} rho_c,
///              Carl1 = rho_c1 = t^{1/2} rho_c.
///   CarlemanP: CarlBase = rho_p, Carl0 = t rho_p, Carl1 = t^{-1} rho_p,
///              Carl2 = t^{-2} rho_p.
enum class WeightMember { Rho, Rho0, Rho1, CarlBase, Carl0, Carl1, Carl2 };

/// A coherent family of weights, evaluated exclusively through inverses
/// computed in log-space. Every member is floored at rho_star from below
/// (class-R floor: inverse <= 1/rho_star); capped members are clamped at M
/// from above (inverse >= 1/M).
struct WeightFamily {
  WeightKind kind = WeightKind::Unit;
  BetaProfile beta;          // used by the Carleman kinds
  double rho_star = 1e-2;    // floor
  double log_cap = 40.0;     // log M

  bool has_beta() const {
    return kind == WeightKind::CarlemanC || kind == WeightKind::CarlemanP;
  }
};

WeightFamily make_weight_family(WeightKind kind, const BetaProfile& beta,
                                double rho_star = 1e-2, double log_cap = 40.0);
WeightFamily unit_weights();

/// w(x,t)^{-1} for the selected member. Underflow returns exactly 0.
double eval_inverse_weight(const WeightFamily& family, WeightMember member,
                           double x, double t);

/// Inverse weight together with its first x/t derivatives and second x
/// derivative, for assemblies that expand L*(rho^{-1} lambda) by the product
/// rule. Where the cap or floor is active the derivatives are 0.
struct InverseWeightDerivs {
  double inv, d_x, d_t, d_xx;
};
InverseWeightDerivs eval_inverse_weight_derivs(const WeightFamily& family,
                                               WeightMember member, double x,
                                               double t);

struct DominationReport {
  struct Pair {
    std::string label;
    double K;       // max candidate/reference on the given grid
    double K_fine;  // same on a once-refined grid
  };
  std::vector<Pair> pairs;
  bool pass = false;
};

/// Certifies rho0 <= K rho_{c,0} (resp. rho_{p,0}), rho <= K rho_c (resp.
/// rho_{p,2}) and, for a CarlemanP reference, rho1 <= K rho_{p,1}, by direct
/// evaluation of the max ratio over quadrature points. The ratio against the
/// unfloored reference is also evaluated on a once-refined grid; pass
/// requires finite K that does not keep growing under refinement.
DominationReport check_domination(const WeightFamily& candidate,
                                  const WeightFamily& reference,
                                  const SpaceTimeGrid& grid, int quad_order);

}  // namespace streco

#endif
