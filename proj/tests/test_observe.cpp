#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "streco/observe.hpp"

using namespace streco;

namespace {

Field smooth_truth(const SpaceTimeGrid& g) {
  const FemSpace q1 = make_space(BasisKind::BilinearQ1, g);
  ScalarField2D fn;
  fn.f = [](double x, double t) { return std::sin(2 * x) * std::exp(-t); };
  return interpolate(q1, fn);
}

}  // namespace

TEST_CASE("noise-free samples coincide with the field values") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 8, 8);
  const Field truth = smooth_truth(g);
  const ObservationSet obs = make_observation(truth, 0.25, 0.75, g, 3, 0.0, 7);
  REQUIRE(obs.sample_count() > 0);
  for (int k = 0; k < obs.sample_count(); ++k)
    CHECK(obs.value[k] ==
          doctest::Approx(evaluate_field(truth, obs.x[k], obs.t[k]).value)
              .epsilon(1e-13));
}

TEST_CASE("seeded noise is reproducible and seed dependent") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 8, 8);
  const Field truth = smooth_truth(g);
  const ObservationSet a = make_observation(truth, 0.25, 0.75, g, 3, 0.1, 42);
  const ObservationSet b = make_observation(truth, 0.25, 0.75, g, 3, 0.1, 42);
  const ObservationSet c = make_observation(truth, 0.25, 0.75, g, 3, 0.1, 43);
  CHECK((a.value - b.value).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.value - c.value).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("sample layout follows the quadrature of the retained cells") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 10, 6);
  const Field truth = smooth_truth(g);
  double a = 0.3, b = 0.5;
  CHECK_FALSE(snap_omega(g, a, b));  // 0.3 and 0.5 are mesh points for nx=10
  const ObservationSet obs = make_observation(truth, 0.3, 0.5, g, 3, 0.0, 1);
  CHECK(obs.omega_a == doctest::Approx(0.3));
  CHECK(obs.omega_b == doctest::Approx(0.5));
  CHECK(static_cast<int>(obs.cells.size()) == 2 * 6);
  CHECK(obs.sample_count() == 2 * 6 * 9);
  for (int k = 0; k < obs.sample_count(); ++k) {
    CHECK(obs.x[k] > 0.3);
    CHECK(obs.x[k] < 0.5);
  }
}

TEST_CASE("snapping reports endpoint movement") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 8, 8);
  double a = 0.26, b = 0.74;
  CHECK(snap_omega(g, a, b));
  CHECK(a == doctest::Approx(0.25));
  CHECK(b == doctest::Approx(0.75));
}

TEST_CASE("misfit values against closed forms") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 10, 10);
  const WeightFamily unit = unit_weights();
  const Field truth = smooth_truth(g);
  const ObservationSet obs = make_observation(truth, 0.3, 0.5, g, 3, 0.0, 1);

  SUBCASE("zero at the data itself") {
    CHECK(weighted_misfit(truth, obs, unit) < 1e-26);
  }

  SUBCASE("unit offset integrates half the cylinder area") {
    ScalarField2D fn;
    fn.f = [](double x, double t) {
      return std::sin(2 * x) * std::exp(-t) + 1.0;
    };
    const Field shifted = interpolate(truth.space, fn);
    // J = 1/2 * |omega| * T = 1/2 * 0.2 * 0.5
    CHECK(weighted_misfit(shifted, obs, unit) ==
          doctest::Approx(0.05).epsilon(1e-10));
  }

  SUBCASE("quadratic scaling") {
    ObservationSet zero = obs;
    zero.value.setZero();
    Field twice = truth;
    twice.dofs *= 2.0;
    const double j1 = weighted_misfit(truth, zero, unit);
    const double j4 = weighted_misfit(twice, zero, unit);
    CHECK(j4 == doctest::Approx(4.0 * j1).epsilon(1e-12));
  }
}

TEST_CASE("CSV round trip") {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 8, 8);
  const Field truth = smooth_truth(g);
  const ObservationSet obs = make_observation(truth, 0.25, 0.75, g, 3, 0.05, 9);
  const std::string path = "observe_roundtrip_test.csv";
  write_observation_csv(obs, path);
  const ObservationSet back = read_observation_csv(path, g, 0.25, 0.75, 3);
  REQUIRE(back.sample_count() == obs.sample_count());
  CHECK((back.value - obs.value).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((back.x - obs.x).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((back.w - obs.w).cwiseAbs().maxCoeff() < 1e-14);
  std::remove(path.c_str());
}
