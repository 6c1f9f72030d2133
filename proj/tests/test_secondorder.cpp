#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "streco/secondorder.hpp"

using namespace streco;

namespace {

constexpr double kPi = 3.14159265358979323846;

Coefficients heat_coeffs() {
  Coefficients co;
  co.c = [](double) { return 1.0; };
  co.c_x = [](double) { return 0.0; };
  co.c0 = 1.0;
  return co;
}

ScalarField2D heat_mode() {
  ScalarField2D fn;
  fn.f = [](double x, double t) {
    return std::exp(-kPi * kPi * t) * std::sin(kPi * x);
  };
  fn.fx = [](double x, double t) {
    return kPi * std::exp(-kPi * kPi * t) * std::cos(kPi * x);
  };
  fn.ft = [](double x, double t) {
    return -kPi * kPi * std::exp(-kPi * kPi * t) * std::sin(kPi * x);
  };
  fn.fxt = [](double x, double t) {
    return -kPi * kPi * kPi * std::exp(-kPi * kPi * t) * std::cos(kPi * x);
  };
  return fn;
}

ObservationSet mode_observation(const SpaceTimeGrid& g) {
  const FemSpace h = make_space(BasisKind::HermiteC1Tensor, g);
  const Field truth = interpolate(h, heat_mode());
  return make_observation(truth, 0.25, 0.75, g, 3, 0.0, 1);
}

double max_abs(const Eigen::SparseMatrix<double>& m) {
  double v = 0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      v = std::max(v, std::abs(it.value()));
  return v;
}

}  // namespace

TEST_CASE("saddle matrix is exactly symmetric") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 6, 6);
  const SaddleSystem sys = assemble_mf(g, unit_weights(), mode_observation(g),
                                       heat_coeffs(), 1.0, 1.0);
  const Eigen::SparseMatrix<double> K = sys.full_matrix();
  const Eigen::SparseMatrix<double> D = K - Eigen::SparseMatrix<double>(K.transpose());
  CHECK(max_abs(D) <= 1e-14 * max_abs(K));
}

TEST_CASE("zero observation reconstructs the zero field") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 6, 6);
  ObservationSet obs = mode_observation(g);
  obs.value.setZero();
  const SaddleSystem sys =
      assemble_mf(g, unit_weights(), obs, heat_coeffs(), 1.0, 1.0);
  const ReconstructionReport rep = solve_saddle(sys);
  CHECK(rep.y.dofs.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(rep.lambda.dofs.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constraint residual of the interpolated mode shrinks with h") {
  auto resid = [](int n) {
    const SpaceTimeGrid g = build_grid(0, 1, 0.5, n, n);
    const FemSpace h = make_space(BasisKind::HermiteC1Tensor, g);
    Field y = interpolate(h, heat_mode());
    const auto mask = h.dirichlet_mask();
    for (int i = 0; i < y.dofs.size(); ++i)
      if (mask[static_cast<std::size_t>(i)]) y.dofs[i] = 0.0;
    const SaddleSystem sys = assemble_mf(g, unit_weights(),
                                         mode_observation(g), heat_coeffs(),
                                         1.0, 1.0);
    const Eigen::VectorXd bv = sys.B * y.dofs - sys.l2;
    return std::sqrt(bv.dot(bv));
  };
  const double r8 = resid(8), r16 = resid(16);
  CHECK(r16 < 0.5 * r8);
}

TEST_CASE("stabilized blocks reduce to the plain ones as alpha vanishes") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 6, 6);
  const ObservationSet obs = mode_observation(g);
  const SaddleSystem plain =
      assemble_mf(g, unit_weights(), obs, heat_coeffs(), 1.0, 1.0);
  const SaddleSystem stab = assemble_mf_alpha(g, unit_weights(), obs,
                                              heat_coeffs(), 1.0, 1e-8, 1.0);
  const double sA = max_abs(plain.A);
  CHECK(max_abs(stab.A - plain.A) < 1e-6 * sA);
  CHECK(max_abs(stab.B - plain.B) < 1e-6 * sA);
  CHECK(max_abs(stab.C) < 1e-6 * sA);
}

TEST_CASE("stabilized and plain solutions coincide at finite alpha") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 6, 6);
  const ObservationSet obs = mode_observation(g);
  const ReconstructionReport a = solve_saddle(
      assemble_mf(g, unit_weights(), obs, heat_coeffs(), 1.0, 1.0));
  const ReconstructionReport b = solve_saddle(assemble_mf_alpha(
      g, unit_weights(), obs, heat_coeffs(), 1.0, 0.5, 1.0));
  const double scale = std::max(a.y.dofs.cwiseAbs().maxCoeff(), 1e-30);
  CHECK((a.y.dofs - b.y.dofs).cwiseAbs().maxCoeff() < 1e-8 * scale);
  CHECK((a.lambda.dofs - b.lambda.dofs).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("coercivity constant") {
  CHECK(coercivity_theta1(0.5, 1.0, 1.0) == doctest::Approx(0.5));
  CHECK(coercivity_theta1(0.25, 0.5, 1.0) == doctest::Approx(0.5));
  CHECK(coercivity_theta1(0.9, 2.0, 1.0) == doctest::Approx(0.1));
}

TEST_CASE("quasi-reversibility baseline") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 6, 6);
  const ObservationSet obs = mode_observation(g);

  SUBCASE("system is symmetric positive definite") {
    const SaddleSystem sys =
        assemble_qr(g, unit_weights(), obs, heat_coeffs(), 1e-2, 1.0);
    CHECK(sys.multiplier_dim() == 0);
    const Eigen::MatrixXd A(sys.A);
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A,
                                                      Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }

  SUBCASE("larger eps shrinks the solution, smaller eps shrinks the misfit") {
    auto run = [&](double eps) {
      return solve_saddle(
          assemble_qr(g, unit_weights(), obs, heat_coeffs(), eps, 1.0));
    };
    double prev_norm = 1e300;
    for (double eps : {1.0, 10.0, 100.0}) {
      const double n = run(eps).y.dofs.norm();
      CHECK(n <= prev_norm + 1e-12);
      prev_norm = n;
    }
    double prev_misfit = 1e300;
    for (double eps : {1e-2, 1e-4, 1e-6}) {
      const double m = run(eps).misfit_norm;
      CHECK(m <= prev_misfit + 1e-12);
      prev_misfit = m;
    }
  }
}

TEST_CASE("a priori bounds of the discrete minimizer") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 8, 8);
  const ObservationSet obs = mode_observation(g);
  const double eta = 1.0;
  const ReconstructionReport rep = solve_saddle(
      assemble_mf(g, unit_weights(), obs, heat_coeffs(), 1.0, eta));
  // the zero field is feasible, so the misfit cannot exceed the data norm
  CHECK(rep.misfit_norm <= rep.obs_norm * (1.0 + 1e-10));
  // multiplier bound with unit weights
  CHECK(rep.multiplier_norm <= 2.0 * std::sqrt(1.0 + eta) * rep.obs_norm);
}

TEST_CASE("eta rescales only the diagnostic norm, not the solution") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 6, 6);
  const ObservationSet obs = mode_observation(g);
  const ReconstructionReport a = solve_saddle(
      assemble_mf(g, unit_weights(), obs, heat_coeffs(), 1.0, 1.0));
  const ReconstructionReport b = solve_saddle(
      assemble_mf(g, unit_weights(), obs, heat_coeffs(), 1.0, 10.0));
  CHECK((a.y.dofs - b.y.dofs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("renormalization") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 6, 6);
  const ObservationSet obs = mode_observation(g);

  SUBCASE("unit weights leave the system unchanged") {
    const SaddleSystem sys =
        assemble_mf(g, unit_weights(), obs, heat_coeffs(), 1.0, 1.0);
    const RenormalizedSystem rn =
        apply_renormalization(sys, unit_weights(), false);
    CHECK((rn.scale.array() - 1.0).abs().maxCoeff() < 1e-14);
    CHECK(max_abs(rn.K - sys.full_matrix()) < 1e-12);
  }

  SUBCASE("scaled and unscaled solves agree") {
    const BetaProfile beta = build_beta(1, 1, 0.25, 0.75, 0.5, 0, 1);
    // moderate equation-weight cap keeps the unscaled solve meaningful
    const WeightFamily carl =
        make_weight_family(WeightKind::CarlemanC, beta, 1e-2, 6.0);
    const SaddleSystem sys =
        assemble_mf(g, carl, obs, heat_coeffs(), 1.0, 1.0);
    const ReconstructionReport a = solve_saddle(sys);
    SolveOptions opt;
    opt.renormalize = true;
    const ReconstructionReport b = solve_saddle(sys, opt);
    const double scale = std::max(a.y.dofs.cwiseAbs().maxCoeff(), 1e-30);
    CHECK((a.y.dofs - b.y.dofs).cwiseAbs().maxCoeff() < 1e-6 * scale);
  }
}
