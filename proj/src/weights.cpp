#include "streco/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace streco {

namespace {

// Monotone quintic ramp on [0,1]: g(0)=0, g(1)=1, g'(1)=0, g'(0)=5.
double ramp(double u) { return 1.0 - std::pow(1.0 - u, 5); }
double ramp_d(double u) { return 5.0 * std::pow(1.0 - u, 4); }
double ramp_dd(double u) { return -20.0 * std::pow(1.0 - u, 3); }

}  // namespace

double BetaProfile::psi(double x) const {
  const double xc = 0.5 * (omega_a + omega_b);
  if (x <= xc) {
    const double L = xc - x_min;
    return ramp(std::clamp((x - x_min) / L, 0.0, 1.0));
  }
  const double L = x_max - xc;
  return ramp(std::clamp((x_max - x) / L, 0.0, 1.0));
}

double BetaProfile::psi_d(double x) const {
  const double xc = 0.5 * (omega_a + omega_b);
  if (x <= xc) {
    const double L = xc - x_min;
    return ramp_d(std::clamp((x - x_min) / L, 0.0, 1.0)) / L;
  }
  const double L = x_max - xc;
  return -ramp_d(std::clamp((x_max - x) / L, 0.0, 1.0)) / L;
}

double BetaProfile::psi_dd(double x) const {
  const double xc = 0.5 * (omega_a + omega_b);
  if (x <= xc) {
    const double L = xc - x_min;
    return ramp_dd(std::clamp((x - x_min) / L, 0.0, 1.0)) / (L * L);
  }
  const double L = x_max - xc;
  return ramp_dd(std::clamp((x_max - x) / L, 0.0, 1.0)) / (L * L);
}

double BetaProfile::beta(double x) const {
  const double b0 = K2 * (1.0 - m * psi(x));
  return K1 * (std::exp(K2) - std::exp(b0));
}

double BetaProfile::beta_d(double x) const {
  const double b0 = K2 * (1.0 - m * psi(x));
  return K1 * K2 * m * psi_d(x) * std::exp(b0);
}

double BetaProfile::beta_dd(double x) const {
  const double b0 = K2 * (1.0 - m * psi(x));
  const double b0d = -K2 * m * psi_d(x);
  return K1 * K2 * m * std::exp(b0) * (psi_dd(x) + psi_d(x) * b0d);
}

BetaProfile build_beta(double K1, double K2, double omega_a, double omega_b,
                       double m, double x_min, double x_max) {
  if (omega_a >= omega_b) throw DegenerateOmega("build_beta: omega_a >= omega_b");
  if (omega_a <= x_min || omega_b >= x_max)
    throw OmegaOutsideDomain("build_beta: omega must be strictly inside the domain");
  if (!(K1 > 0.0) || !(K2 > 0.0) || !(m > 0.0) || !(m < 1.0))
    throw InvalidExtent("build_beta: need K1, K2 > 0 and m in (0,1)");
  BetaProfile b;
  b.K1 = K1;
  b.K2 = K2;
  b.omega_a = omega_a;
  b.omega_b = omega_b;
  b.m = m;
  b.x_min = x_min;
  b.x_max = x_max;
  return b;
}

WeightFamily make_weight_family(WeightKind kind, const BetaProfile& beta,
                                double rho_star, double log_cap) {
  WeightFamily f;
  f.kind = kind;
  f.beta = beta;
  f.rho_star = rho_star;
  f.log_cap = log_cap;
  return f;
}

WeightFamily unit_weights() {
  WeightFamily f;
  f.kind = WeightKind::Unit;
  f.rho_star = 1.0;
  return f;
}

namespace {

struct LogWeight {
  double g, gx, gt, gxx;  // log w and partials
  bool clamped = false;
};

// log of the member weight before floor, with partial derivatives.
LogWeight log_weight(const WeightFamily& f, WeightMember member, double x,
                     double t) {
  if (t <= 0.0) throw NonPositiveTime("weight evaluation requires t > 0");
  LogWeight L{0.0, 0.0, 0.0, 0.0, false};

  const bool carl_member = member == WeightMember::CarlBase ||
                           member == WeightMember::Carl0 ||
                           member == WeightMember::Carl1 ||
                           member == WeightMember::Carl2;
  if (carl_member && !f.has_beta())
    throw MemberMismatch("Carleman members require a Carleman family");

  double tpow = 0.0;  // exponent s in w = t^s * base
  bool capped = false;
  switch (f.kind) {
    case WeightKind::Unit:
      return L;
    case WeightKind::Power:
      switch (member) {
        case WeightMember::Rho:
          break;
        case WeightMember::Rho0:
          tpow = -1.5;
          break;
        case WeightMember::Rho1:
          tpow = -0.5;
          break;
        default:
          throw MemberMismatch("Power family has no Carleman members");
      }
      L.g = tpow * std::log(t);
      L.gt = tpow / t;
      return L;
    case WeightKind::CarlemanC: {
      switch (member) {
        case WeightMember::Rho:
          capped = true;
          break;
        case WeightMember::CarlBase:
        case WeightMember::Carl2:
          break;
        case WeightMember::Rho0:
        case WeightMember::Carl0:
          tpow = 1.5;
          break;
        case WeightMember::Rho1:
        case WeightMember::Carl1:
          tpow = 0.5;
          break;
      }
      const double b = f.beta.beta(x);
      L.g = b / t + tpow * std::log(t);
      L.gx = f.beta.beta_d(x) / t;
      L.gxx = f.beta.beta_dd(x) / t;
      L.gt = -b / (t * t) + tpow / t;
      break;
    }
    case WeightKind::CarlemanP: {
      switch (member) {
        case WeightMember::Rho:
        case WeightMember::Carl2:
          tpow = -2.0;
          capped = member == WeightMember::Rho;
          break;
        case WeightMember::Rho0:
        case WeightMember::Carl0:
          tpow = 1.0;
          break;
        case WeightMember::Rho1:
        case WeightMember::Carl1:
          tpow = -1.0;
          capped = member == WeightMember::Rho1;
          break;
        case WeightMember::CarlBase:
          break;
      }
      const double t2 = t * t;
      const double b = f.beta.beta(x);
      L.g = b / t2 + tpow * std::log(t);
      L.gx = f.beta.beta_d(x) / t2;
      L.gxx = f.beta.beta_dd(x) / t2;
      L.gt = -2.0 * b / (t2 * t) + tpow / t;
      break;
    }
  }
  if (capped && L.g > f.log_cap) {
    L.g = f.log_cap;
    L.gx = L.gt = L.gxx = 0.0;
    L.clamped = true;
  }
  const double log_floor = std::log(f.rho_star);
  if (L.g < log_floor) {
    L.g = log_floor;
    L.gx = L.gt = L.gxx = 0.0;
    L.clamped = true;
  }
  return L;
}

}  // namespace

double eval_inverse_weight(const WeightFamily& family, WeightMember member,
                           double x, double t) {
  return std::exp(-log_weight(family, member, x, t).g);
}

InverseWeightDerivs eval_inverse_weight_derivs(const WeightFamily& family,
                                               WeightMember member, double x,
                                               double t) {
  const LogWeight L = log_weight(family, member, x, t);
  const double inv = std::exp(-L.g);
  return {inv, -L.gx * inv, -L.gt * inv, (L.gx * L.gx - L.gxx) * inv};
}

namespace {

// candidate/reference weight ratio; the reference is evaluated without the
// class-R floor so a genuinely unbounded ratio is visible.
double max_ratio(const WeightFamily& cand, WeightMember cm,
                 const WeightFamily& ref, WeightMember rm,
                 const SpaceTimeGrid& grid, int order) {
  const QuadratureSet q = quadrature_points(grid, order);
  WeightFamily ref_raw = ref;
  ref_raw.rho_star = std::numeric_limits<double>::min();
  double K = 0.0;
  for (const auto& p : q.points) {
    const double ci = eval_inverse_weight(cand, cm, p.x, p.t);
    const double ri = eval_inverse_weight(ref_raw, rm, p.x, p.t);
    if (ci == 0.0 && ri == 0.0) continue;
    if (ci == 0.0) return std::numeric_limits<double>::infinity();
    K = std::max(K, ri / ci);
  }
  return K;
}

}  // namespace

DominationReport check_domination(const WeightFamily& candidate,
                                  const WeightFamily& reference,
                                  const SpaceTimeGrid& grid, int quad_order) {
  if (!reference.has_beta())
    throw MemberMismatch("check_domination: reference must be a Carleman family");
  SpaceTimeGrid fine = grid;
  fine.nx *= 2;
  fine.nt *= 2;

  DominationReport rep;
  auto add = [&](const std::string& label, WeightMember cm, WeightMember rm) {
    DominationReport::Pair p;
    p.label = label;
    p.K = max_ratio(candidate, cm, reference, rm, grid, quad_order);
    p.K_fine = max_ratio(candidate, cm, reference, rm, fine, quad_order);
    rep.pairs.push_back(p);
  };
  add("rho0", WeightMember::Rho0, WeightMember::Carl0);
  add("rho", WeightMember::Rho,
      reference.kind == WeightKind::CarlemanP ? WeightMember::Carl2
                                              : WeightMember::CarlBase);
  if (reference.kind == WeightKind::CarlemanP)
    add("rho1", WeightMember::Rho1, WeightMember::Carl1);

  rep.pass = true;
  for (const auto& p : rep.pairs) {
    if (!std::isfinite(p.K_fine) || p.K_fine > 1.5 * std::max(p.K, 1e-300) + 1e-9)
      rep.pass = false;
  }
  return rep;
}

}  // namespace streco
