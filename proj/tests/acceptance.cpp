// Acceptance harness: one line per criterion, nonzero exit on any failure.
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "streco/experiment.hpp"

using namespace streco;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

Coefficients heat_coeffs(double c = 1.0) {
  Coefficients co;
  co.c = [c](double) { return c; };
  co.c_x = [](double) { return 0.0; };
  co.c0 = c;
  return co;
}

double exact_mode(double x, double t, double c) {
  return std::exp(-c * kPi * kPi * t) * std::sin(kPi * x);
}

// L2(Q_T) distance between a field and a reference callable, order-3 quadrature
double l2_error(const Field& y,
                const std::function<double(double, double)>& ref) {
  double acc = 0;
  for (const auto& p : quadrature_points(y.space.grid, 3).points) {
    const double e = evaluate_field(y, p.x, p.t).value - ref(p.x, p.t);
    acc += p.w * e * e;
  }
  return std::sqrt(acc);
}

// ||rho0^{-1} y||_{L2(qT)} over the observation quadrature
double state_qT_norm(const Field& y, const ObservationSet& obs,
                     const WeightFamily& weights) {
  double acc = 0;
  for (int k = 0; k < obs.sample_count(); ++k) {
    const double inv =
        eval_inverse_weight(weights, WeightMember::Rho0, obs.x[k], obs.t[k]);
    const double v = evaluate_field(y, obs.x[k], obs.t[k]).value;
    acc += obs.w[k] * inv * inv * v * v;
  }
  return std::sqrt(acc);
}

ObservationSet consistent_observation(const SpaceTimeGrid& g, double c,
                                      int quad_order = 3) {
  // truth on a finer grid so the data never lives in the trial space
  SpaceTimeGrid fine = g;
  fine.nx *= 2;
  fine.nt *= 2;
  Coefficients co = heat_coeffs(c);
  co.y0 = [](double x) { return std::sin(kPi * x); };
  const Field truth = solve_forward(fine, co);
  return make_observation(truth, 0.25, 0.75, g, quad_order, 0.0, 1);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int failures = 0;

void verdict(int num, const std::string& name, bool pass,
             const std::string& detail) {
  std::printf("criterion %2d (%s): %s%s%s\n", num, name.c_str(),
              pass ? "PASS" : "FAIL", detail.empty() ? "" : " — ",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void run(int num, const std::string& name,
         const std::function<bool(std::string&)>& fn) {
  std::string detail;
  bool pass = false;
  try {
    pass = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  verdict(num, name, pass, detail);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------

bool forward_fidelity(std::string& detail) {
  auto ref = [](double x, double t) { return exact_mode(x, t, 1.0); };
  Coefficients co = heat_coeffs();
  co.y0 = [](double x) { return std::sin(kPi * x); };
  double e_cn[2], e_mx[2];
  Field y32{FemSpace{}, {}};
  Field ym32{FemSpace{}, {}};
  for (int i = 0; i < 2; ++i) {
    const int n = i == 0 ? 16 : 32;
    const SpaceTimeGrid g = build_grid(0, 1, 0.5, n, n);
    Field y = solve_forward(g, co);
    ForwardMixedSolution m = solve_forward_mixed(g, co);
    e_cn[i] = l2_error(y, ref);
    e_mx[i] = l2_error(m.y, ref);
    if (i == 1) {
      y32 = y;
      ym32 = m.y;
    }
  }
  const double o_cn = std::log2(e_cn[0] / e_cn[1]);
  const double o_mx = std::log2(e_mx[0] / e_mx[1]);
  const double gap = l2_error(y32, [&](double x, double t) {
    return evaluate_field(ym32, x, t).value;
  });
  detail = fmt("orders %.2f / %.2f, cross gap %.2e", o_cn, o_mx, gap);
  return o_cn >= 1.9 && o_mx >= 1.9 && gap <= e_cn[1] + e_mx[1] + 1e-12;
}

bool observation_bound(std::string& detail) {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 8, 8);
  const WeightFamily w = unit_weights();
  const Coefficients co = heat_coeffs();
  ObservationSet obs = consistent_observation(g, 1.0);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0, 0.5);
  for (int k = 0; k < obs.sample_count(); ++k) obs.value[k] = n(rng);

  double worst = 0;
  for (const std::string& form : {"mf", "mf-alpha", "mf4", "mf4-alpha"})
    for (double r : {0.0, 1.0}) {
      SaddleSystem sys;
      if (form == "mf")
        sys = assemble_mf(g, w, obs, co, r, 1.0);
      else if (form == "mf-alpha")
        sys = assemble_mf_alpha(g, w, obs, co, r, 0.3, 1.0);
      else if (form == "mf4")
        sys = assemble_mf4(g, w, obs, co, r, r, 1.0, 1.0);
      else
        sys = assemble_mf4_alpha(g, w, obs, co, r, r, 0.3, 0.0);
      const ReconstructionReport rep = solve_saddle(sys);
      const double lhs = state_qT_norm(rep.y, obs, w);
      worst = std::max(worst, lhs / rep.obs_norm);
    }
  detail = fmt("max ||rho0^-1 y|| / ||rho0^-1 y_obs|| = %.12f", worst);
  return worst <= 1.0 + 1e-10;
}

bool multiplier_vanishing(std::string& detail) {
  auto series = [](const std::string& form, double c, double r) {
    std::vector<double> norms;
    for (int n : {8, 16, 32}) {
      const SpaceTimeGrid g = build_grid(0, 1, 0.5, n, n);
      const ObservationSet obs = consistent_observation(g, c);
      const Coefficients co = heat_coeffs(c);
      const SaddleSystem sys =
          form == "mf" ? assemble_mf(g, unit_weights(), obs, co, r, 1.0)
                       : assemble_mf4(g, unit_weights(), obs, co, r, r, 1.0,
                                      1.0);
      norms.push_back(solve_saddle(sys).multiplier_norm);
    }
    return norms;
  };
  const std::vector<double> mf = series("mf", 1.0, 1.0);
  const std::vector<double> mf4 = series("mf4", 0.25, 1e-3);
  auto ok = [](const std::vector<double>& v) {
    return v[1] < v[0] && v[2] < v[1] && v[2] <= 0.1 * v[0];
  };
  detail = fmt("factors %.1f (second order), %.1f (first order)",
               mf[0] / mf[2], mf4[0] / mf4[2]);
  return ok(mf) && ok(mf4);
}

bool formulation_coincidence(std::string& detail) {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 8, 8);
  const ObservationSet obs = consistent_observation(g, 1.0);
  const Coefficients co = heat_coeffs();
  const WeightFamily w = unit_weights();

  auto rel_gap = [](const Field& a, const Field& b) {
    return (a.dofs - b.dofs).cwiseAbs().maxCoeff() /
           std::max(a.dofs.cwiseAbs().maxCoeff(), 1e-300);
  };
  const double g2 =
      rel_gap(solve_saddle(assemble_mf(g, w, obs, co, 1.0, 1.0)).y,
              solve_saddle(assemble_mf_alpha(g, w, obs, co, 1.0, 0.5, 1.0)).y);
  const double g1 = rel_gap(
      solve_saddle(assemble_mf4(g, w, obs, co, 1.0, 1.0, 1.0, 1.0)).y,
      solve_saddle(assemble_mf4_alpha(g, w, obs, co, 1.0, 1.0, 0.5, 0.0)).y);
  detail = fmt("relative gaps %.2e (second order), %.2e (first order)", g2, g1);
  return g2 <= 1e-8 && g1 <= 1e-8;
}

bool primal_dual(std::string& detail) {
  struct Case {
    SaddleSystem sys;
    std::string tag;
  };
  std::vector<Case> cases;
  {
    const SpaceTimeGrid g = build_grid(0, 1, 0.5, 16, 16);
    cases.push_back({assemble_mf(g, unit_weights(),
                                 consistent_observation(g, 1.0), heat_coeffs(),
                                 1.0, 1.0),
                     "mf"});
  }
  {
    const SpaceTimeGrid g = build_grid(0, 1, 0.5, 8, 8);
    cases.push_back({assemble_mf4(g, unit_weights(),
                                  consistent_observation(g, 1.0),
                                  heat_coeffs(), 1.0, 1.0, 1.0, 1.0),
                     "mf4"});
  }
  std::string d;
  bool pass = true;
  for (const Case& c : cases) {
    const ReconstructionReport direct = solve_saddle(c.sys);
    const DualOperator op(c.sys);
    DualOptions opt;
    opt.tol = 1e-10;
    const ReconstructionReport dual = minimize_dual(op, opt);
    const double gap = (direct.y.dofs - dual.y.dofs).cwiseAbs().maxCoeff() /
                       std::max(direct.y.dofs.cwiseAbs().maxCoeff(), 1e-300);
    const int budget = static_cast<int>(1.2 * op.multiplier_dim());
    pass = pass && gap <= 1e-6 && dual.stats.iterations <= budget;
    d += c.tag + fmt(": gap %.1e, %g iters of %g; ", gap,
                     double(dual.stats.iterations), double(budget));
  }
  detail = d;
  return pass;
}

bool dual_certificates(std::string& detail) {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 6, 6);
  const ObservationSet obs = consistent_observation(g, 1.0);
  const Coefficients co = heat_coeffs();
  const DualOperator second(assemble_mf(g, unit_weights(), obs, co, 2.0, 1.0));
  const DualOperator first(
      assemble_mf4(g, unit_weights(), obs, co, 2.0, 4.0, 1.0, 1.0));

  std::mt19937_64 rng(23);
  std::normal_distribution<double> n(0, 1);
  int violations = 0;
  double worst_sym = 0;
  auto probe = [&](const DualOperator& op, double bound,
                   bool mixed) {
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd u(op.multiplier_dim()), v(op.multiplier_dim());
      for (int i = 0; i < u.size(); ++i) {
        u[i] = n(rng);
        v[i] = n(rng);
      }
      const Eigen::VectorXd Tu = mixed ? apply_Tr_mixed(op, u)
                                       : apply_Tr(op, u);
      const double uv = op.inner(Tu, v);
      const double vu = op.inner(mixed ? apply_Tr_mixed(op, v)
                                       : apply_Tr(op, v),
                                 u);
      const double sym =
          std::abs(uv - vu) / std::max({std::abs(uv), std::abs(vu), 1e-300});
      worst_sym = std::max(worst_sym, sym);
      if (sym > 1e-10) ++violations;
      if (op.inner(Tu, u) <= 0) ++violations;
      if (std::sqrt(op.inner(Tu, Tu)) >
          bound * std::sqrt(op.inner(u, u)) * (1 + 1e-10))
        ++violations;
    }
  };
  probe(second, 1.0 / 2.0, false);
  probe(first, 1.0 / 2.0, true);  // 1/min(r1, r2)
  detail = fmt("violations %g of 200 vectors, worst symmetry defect %.1e",
               double(violations), worst_sym);
  return violations == 0;
}

bool noise_stability(std::string& detail) {
  ExperimentConfig cfg;
  cfg.omega_a = 0.25;
  cfg.omega_b = 0.75;
  cfg.weight_kind = "carleman-c";
  cfg.formulation = "mf";
  cfg.r = 1.0;
  const WeightFamily carl = make_weights(cfg);
  const DominationReport dom = check_domination(
      carl, carl, build_grid(0, 1, 0.5, 8, 8), 3);
  if (!dom.pass) {
    detail = "domination certificate failed";
    return false;
  }

  // weighted error ||carl0^{-1}(y_h - y_truth)|| by direct quadrature
  auto run_one = [&](int n, double sigma, double& c_emp) {
    ExperimentConfig c = cfg;
    c.nx = n;
    c.nt = n;
    c.sigma = sigma;
    c.seed = 5;
    const Field truth = generate_truth(c);
    const SpaceTimeGrid g = make_grid(c);
    const Coefficients co = make_coefficients(c);
    const ObservationSet obs =
        make_observation(truth, c.omega_a, c.omega_b, g, 3, sigma, c.seed);
    const ReconstructionReport rep =
        solve_saddle(assemble_mf(g, carl, obs, co, c.r, c.eta));
    c_emp = weighted_norms(rep.y, nullptr, carl, carl, obs, co, c.eta).C_emp;
    double acc = 0;
    for (const auto& p : quadrature_points(g, 3).points) {
      const double inv =
          eval_inverse_weight(carl, WeightMember::Carl0, p.x, p.t);
      const double e = evaluate_field(rep.y, p.x, p.t).value -
                       evaluate_field(truth, p.x, p.t).value;
      acc += p.w * inv * inv * e * e;
    }
    return std::sqrt(acc);
  };

  double ce;
  const double e_lo = run_one(32, 1e-3, ce);
  const double e_hi = run_one(32, 1e-2, ce);
  const double ratio = e_hi / e_lo;

  std::vector<double> cemps;
  for (int n : {8, 16, 32}) {
    double c = 0;
    run_one(n, 1e-3, c);
    cemps.push_back(c);
  }
  const double spread =
      *std::max_element(cemps.begin(), cemps.end()) /
      std::max(*std::min_element(cemps.begin(), cemps.end()), 1e-300);
  detail = fmt("error ratio %.2f for 10x noise, C_emp spread x%.2f", ratio,
               spread);
  return ratio >= 2.0 && ratio <= 50.0 && spread <= 2.0;
}

bool flux_consistency(std::string& detail) {
  std::vector<double> norms;
  for (int n : {8, 16, 32}) {
    const SpaceTimeGrid g = build_grid(0, 1, 0.5, n, n);
    const ObservationSet obs = consistent_observation(g, 0.25);
    const SaddleSystem sys = assemble_mf4(g, unit_weights(), obs,
                                          heat_coeffs(0.25), 1e-3, 1e-3, 1.0,
                                          1.0);
    const ReconstructionReport rep = solve_saddle(sys);
    const IJSamples s = apply_IJ({rep.y, *rep.p}, sys.coeffs, 3);
    const QuadratureSet q = quadrature_points(g, 3);
    double acc = 0;
    for (int k = 0; k < s.J.size(); ++k)
      acc += q.points[static_cast<std::size_t>(k)].w * s.J[k] * s.J[k];
    norms.push_back(std::sqrt(acc));
  }
  const double order = std::log2(norms[0] / norms[2]) / 2.0;
  detail = fmt("flux residual %.2e -> %.2e, order %.2f", norms[0], norms[2],
               order);
  return norms[2] < norms[1] && norms[1] < norms[0] && order >= 0.9;
}

bool qr_baseline(std::string& detail) {
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 6, 6);
  const ObservationSet obs = consistent_observation(g, 1.0);
  double prev = 1e300;
  bool monotone = true, spd = true;
  double lmin_worst = 1e300;
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    const SaddleSystem sys =
        assemble_qr(g, unit_weights(), obs, heat_coeffs(), eps, 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        Eigen::MatrixXd(sys.A), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    lmin_worst = std::min(lmin_worst, lmin);
    spd = spd && lmin > 0;
    const double m = solve_saddle(sys).misfit_norm;
    monotone = monotone && m < prev;
    prev = m;
  }
  detail = fmt("final misfit %.2e, smallest eigenvalue %.2e", prev,
               lmin_worst);
  return monotone && spd;
}

bool renormalization(std::string& detail) {
  // reference Carleman setup: weight range chosen so both the scaled and
  // the unscaled factorization stay meaningful in double precision
  const SpaceTimeGrid g = build_grid(0, 1, 0.5, 16, 16);
  ExperimentConfig cfg;
  cfg.weight_kind = "carleman-c";
  cfg.omega_a = 0.25;
  cfg.omega_b = 0.75;
  cfg.K1 = 0.5;
  cfg.rho_star = 0.25;
  cfg.log_cap = 2.0;
  const WeightFamily carl = make_weights(cfg);
  const ObservationSet obs = consistent_observation(g, 1.0);
  const SaddleSystem sys = assemble_mf(g, carl, obs, heat_coeffs(), 1.0, 1.0);

  const ReconstructionReport plain = solve_saddle(sys);
  SolveOptions opt;
  opt.renormalize = true;
  const ReconstructionReport scaled = solve_saddle(sys, opt);
  const double gap =
      (plain.y.dofs - scaled.y.dofs).cwiseAbs().maxCoeff() /
      std::max(plain.y.dofs.cwiseAbs().maxCoeff(), 1e-300);
  detail = fmt("condition %.2e -> %.2e, solution gap %.1e",
               scaled.stats.condition_before, scaled.stats.condition_after,
               gap);
  return scaled.stats.condition_after < scaled.stats.condition_before &&
         gap <= 1e-6;
}

bool determinism_and_formats(std::string& detail) {
  // two identical CLI runs must produce byte-identical CSVs
  const fs::path base = fs::temp_directory_path() / "streco_acceptance";
  fs::remove_all(base);
  fs::create_directories(base);
  ExperimentConfig cfg;
  cfg.nx = 8;
  cfg.nt = 8;
  cfg.omega_a = 0.25;
  cfg.omega_b = 0.75;
  cfg.sigma = 1e-3;
  cfg.seed = 7;
  const fs::path cfg_path = base / "run.cfg";
  write_text_atomic(cfg_path.string(), serialize_config(cfg));
  for (const char* sub : {"a", "b"}) {
    const std::string cmd = std::string(STRECO_CLI_PATH) +
                            " reconstruct --config " + cfg_path.string() +
                            " --out " + (base / sub).string() +
                            " > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      detail = "CLI run failed";
      return false;
    }
  }
  for (const char* name :
       {"truth.csv", "observation.csv", "reconstruction.csv",
        "multiplier.csv", "diagnostics.csv"}) {
    if (slurp(base / "a" / name) != slurp(base / "b" / name)) {
      detail = std::string(name) + " differs between identical runs";
      return false;
    }
  }
  fs::remove_all(base);

  // handcrafted dense fixture: inf-sup estimate vs singular-value oracle
  SaddleSystem fix;
  const int np = 4, nm = 3;
  Eigen::MatrixXd Ky = Eigen::MatrixXd::Zero(np, np);
  Ky.diagonal() << 1.0, 2.0, 3.0, 4.0;
  Ky(0, 1) = Ky(1, 0) = 0.25;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nm, nm);
  M.diagonal() << 1.0, 1.0, 2.0;
  Eigen::MatrixXd B(nm, np);
  B << 1, 0.5, 0, 0.25, 0, 2, 0.5, 0, 0.125, 0, 1, 3;
  fix.primal_gram = Ky.sparseView();
  fix.multiplier_gram = M.sparseView();
  fix.B = B.sparseView();
  const double delta = estimate_infsup(fix);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ek(Ky), em(M);
  auto inv_sqrt = [](const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& e) {
    return (e.eigenvectors() *
            e.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
            e.eigenvectors().transpose())
        .eval();
  };
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(inv_sqrt(em) * B * inv_sqrt(ek));
  const double oracle = svd.singularValues().minCoeff();
  const double gap = std::abs(delta - oracle) / oracle;
  detail = fmt("CSVs identical; delta_h %.12f vs oracle, gap %.1e", delta,
               gap);
  return gap <= 1e-10;
}

}  // namespace

int main() {
  run(1, "forward fidelity", forward_fidelity);
  run(2, "discrete observation bound", observation_bound);
  run(3, "multiplier vanishing", multiplier_vanishing);
  run(4, "formulation coincidence", formulation_coincidence);
  run(5, "primal/dual equivalence", primal_dual);
  run(6, "dual operator certificates", dual_certificates);
  run(7, "noise stability", noise_stability);
  run(8, "flux consistency", flux_consistency);
  run(9, "quasi-reversibility baseline", qr_baseline);
  run(10, "renormalization", renormalization);
  run(11, "determinism and formats", determinism_and_formats);
  if (failures == 0)
    std::printf("all 11 criteria passed\n");
  else
    std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
