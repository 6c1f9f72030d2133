#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "streco/forward.hpp"

using namespace streco;

namespace {

constexpr double kPi = 3.14159265358979323846;

Coefficients heat_eigenmode(double d = 0.0) {
  Coefficients co;
  co.c = [](double) { return 1.0; };
  co.c_x = [](double) { return 0.0; };
  co.c0 = 1.0;
  co.d = [d](double, double) { return d; };
  co.y0 = [](double x) { return std::sin(kPi * x); };
  return co;
}

// L2(Q_T) error of a Q1 field against a closed-form reference, measured at
// the order-3 quadrature points.
double l2_error(const Field& y,
                const std::function<double(double, double)>& ref) {
  double acc = 0;
  for (const auto& p : quadrature_points(y.space.grid, 3).points) {
    const double e = evaluate_field(y, p.x, p.t).value - ref(p.x, p.t);
    acc += p.w * e * e;
  }
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("zero data gives the zero solution") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 8, 8);
  Coefficients co;  // all-zero data, c = 1
  const Field y = solve_forward(g, co);
  CHECK(y.dofs.cwiseAbs().maxCoeff() < 1e-14);
  const ForwardMixedSolution m = solve_forward_mixed(g, co);
  CHECK(m.y.dofs.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(m.p.dofs.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("decaying eigenmode converges at second order") {
  const Coefficients co = heat_eigenmode();
  auto exact = [](double x, double t) {
    return std::exp(-kPi * kPi * t) * std::sin(kPi * x);
  };
  const double e16 = l2_error(solve_forward(build_grid(0, 1, 0.1, 16, 16), co),
                              exact);
  const double e32 = l2_error(solve_forward(build_grid(0, 1, 0.1, 32, 32), co),
                              exact);
  CHECK(e32 < e16);
  CHECK(std::log2(e16 / e32) > 1.9);
}

TEST_CASE("zero-order coefficient adds an exponential factor") {
  const Coefficients co = heat_eigenmode(1.0);
  auto exact = [](double x, double t) {
    return std::exp(-(kPi * kPi + 1.0) * t) * std::sin(kPi * x);
  };
  const double e = l2_error(solve_forward(build_grid(0, 1, 0.1, 32, 32), co),
                            exact);
  CHECK(e < 2e-3);
}

TEST_CASE("mixed solver reproduces state and flux") {
  const Coefficients co = heat_eigenmode();
  const SpaceTimeGrid g = build_grid(0, 1, 0.1, 32, 32);
  const ForwardMixedSolution m = solve_forward_mixed(g, co);
  auto exact_y = [](double x, double t) {
    return std::exp(-kPi * kPi * t) * std::sin(kPi * x);
  };
  auto exact_p = [](double x, double t) {
    return kPi * std::exp(-kPi * kPi * t) * std::cos(kPi * x);
  };
  CHECK(l2_error(m.y, exact_y) < 5e-3);
  CHECK(l2_error(m.p, exact_p) < 5e-2);

  // both discretizations approximate the same solution
  const Field y = solve_forward(g, co);
  CHECK(l2_error(m.y, [&](double x, double t) {
          return evaluate_field(y, x, t).value;
        }) < 5e-3);
}

TEST_CASE("energy estimate behaviour") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 16, 16);
  Coefficients co = heat_eigenmode();
  const ForwardMixedSolution m = solve_forward_mixed(g, co);

  SUBCASE("zero solution gives a zero ratio") {
    Field zy = m.y, zp = m.p;
    zy.dofs.setZero();
    zp.dofs.setZero();
    Coefficients z;  // zero data
    const EstimateReport rep = verify_energy_estimate(zy, zp, z);
    CHECK(rep.lhs == doctest::Approx(0.0));
    CHECK(rep.ratio == doctest::Approx(0.0));
  }

  SUBCASE("the ratio is scale invariant") {
    const EstimateReport rep = verify_energy_estimate(m.y, m.p, co);
    CHECK(rep.lhs > 0);
    CHECK(rep.rhs > 0);
    Field y2 = m.y, p2 = m.p;
    y2.dofs *= 2.0;
    p2.dofs *= 2.0;
    Coefficients co2 = co;
    co2.y0 = [](double x) { return 2.0 * std::sin(kPi * x); };
    const EstimateReport rep2 = verify_energy_estimate(y2, p2, co2);
    CHECK(rep2.lhs == doctest::Approx(2.0 * rep.lhs).epsilon(1e-10));
    CHECK(rep2.ratio == doctest::Approx(rep.ratio).epsilon(1e-10));
  }

  SUBCASE("dissipation: the ratio stays bounded under refinement") {
    const EstimateReport a = verify_energy_estimate(m.y, m.p, co);
    const SpaceTimeGrid g2 = build_grid(0, 1, 0.5, 32, 32);
    const ForwardMixedSolution m2 = solve_forward_mixed(g2, co);
    const EstimateReport b = verify_energy_estimate(m2.y, m2.p, co);
    CHECK(b.ratio < 2.0 * a.ratio + 1.0);
  }
}

TEST_CASE("Hermite interpolation reproduces bicubic polynomials") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 4, 4);
  const FemSpace h = make_space(BasisKind::HermiteC1Tensor, g);
  ScalarField2D fn;
  fn.f = [](double x, double t) {
    return (x * x * x - 2 * x + 1) * (t * t * t + t);
  };
  fn.fx = [](double x, double t) { return (3 * x * x - 2) * (t * t * t + t); };
  fn.ft = [](double x, double t) {
    return (x * x * x - 2 * x + 1) * (3 * t * t + 1);
  };
  fn.fxt = [](double x, double t) { return (3 * x * x - 2) * (3 * t * t + 1); };
  const Field f = interpolate(h, fn);
  for (const auto& p : quadrature_points(g, 4).points) {
    const FieldEval e = evaluate_field(f, p.x, p.t, 2);
    CHECK(e.value == doctest::Approx(fn.f(p.x, p.t)).epsilon(1e-10));
    CHECK(e.dx == doctest::Approx(fn.fx(p.x, p.t)).epsilon(1e-9));
    CHECK(e.dt == doctest::Approx(fn.ft(p.x, p.t)).epsilon(1e-9));
  }
}
