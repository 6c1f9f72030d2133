#include "streco/diagnostics.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <cmath>

namespace streco {

double NormReport::get(const std::string& label) const {
  for (const auto& [k, v] : values)
    if (k == label) return v;
  throw InvalidExtent("NormReport: no value labeled " + label);
}

NormReport weighted_norms(const Field& y, const Field* p,
                          const WeightFamily& carleman,
                          const WeightFamily& formulation_weights,
                          const ObservationSet& obs, const Coefficients& coeffs,
                          double eta, int quad_order) {
  const auto& grid = y.space.grid;
  const QuadratureSet q = quadrature_points(grid, quad_order);
  const bool second_order = p == nullptr;

  double carl0_sq = 0, carl1_grad_sq = 0, carl1_flux_sq = 0;
  double state_qT_sq = 0, equation_sq = 0;

  std::vector<bool> in_omega(static_cast<std::size_t>(grid.cell_count()), false);
  for (int c : obs.cells) in_omega[static_cast<std::size_t>(c)] = true;

  for (int c = 0; c < grid.cell_count(); ++c) {
    const bool omega = in_omega[static_cast<std::size_t>(c)];
    for (int k = 0; k < q.per_cell; ++k) {
      const QuadPoint& pt = q.point(c, k);
      const FieldEval ye = evaluate_field(y, pt.x, pt.t, second_order ? 2 : 1);
      const double c0i =
          eval_inverse_weight(carleman, WeightMember::Carl0, pt.x, pt.t);
      const double c1i =
          eval_inverse_weight(carleman, WeightMember::Carl1, pt.x, pt.t);
      carl0_sq += pt.w * c0i * c0i * ye.value * ye.value;
      carl1_grad_sq += pt.w * c1i * c1i * ye.dx * ye.dx;
      if (omega) {
        const double inv0 = eval_inverse_weight(formulation_weights,
                                                WeightMember::Rho0, pt.x, pt.t);
        state_qT_sq += pt.w * inv0 * inv0 * ye.value * ye.value;
      }
      const double inv =
          eval_inverse_weight(formulation_weights, WeightMember::Rho, pt.x, pt.t);
      if (second_order) {
        const double Ly = ye.dt - coeffs.c(pt.x) * ye.dxx -
                          coeffs.eval_c_x(pt.x) * ye.dx +
                          coeffs.d(pt.x, pt.t) * ye.value;
        equation_sq += pt.w * inv * inv * Ly * Ly;
      } else {
        const FieldEval pe = evaluate_field(*p, pt.x, pt.t, 1);
        const double I = ye.dt - pe.dx + coeffs.d(pt.x, pt.t) * ye.value;
        const double J = coeffs.c(pt.x) * ye.dx - pe.value;
        const double inv1 = eval_inverse_weight(formulation_weights,
                                                WeightMember::Rho1, pt.x, pt.t);
        equation_sq += pt.w * (inv * inv * I * I + inv1 * inv1 * J * J);
        carl1_flux_sq += pt.w * c1i * c1i * pe.value * pe.value;
      }
    }
  }

  NormReport rep;
  const double state_norm = std::sqrt(state_qT_sq + eta * equation_sq);
  rep.values = {
      {"carl0_state", std::sqrt(carl0_sq)},
      {"carl1_grad", std::sqrt(carl1_grad_sq)},
      {"state_qT", std::sqrt(state_qT_sq)},
      {"equation", std::sqrt(equation_sq)},
      {"state_norm", state_norm},
  };
  double lhs = std::sqrt(carl0_sq);
  if (!second_order) {
    rep.values.emplace_back("carl1_flux", std::sqrt(carl1_flux_sq));
    lhs += std::sqrt(carl1_flux_sq);
  }
  rep.C_emp = state_norm > 1e-14 ? lhs / state_norm : 0.0;
  return rep;
}

namespace {

Eigen::SparseMatrix<double> shifted(const Eigen::SparseMatrix<double>& m) {
  double dmax = 0.0;
  for (int i = 0; i < m.rows(); ++i) dmax = std::max(dmax, m.coeff(i, i));
  Eigen::SparseMatrix<double> out = m;
  for (int i = 0; i < m.rows(); ++i)
    out.coeffRef(i, i) += 1e-12 * std::max(dmax, 1.0);
  return out;
}

}  // namespace

double estimate_infsup(const SaddleSystem& system, int max_iters, double tol) {
  const int nm = system.multiplier_dim();
  if (nm == 0) throw InvalidExtent("estimate_infsup: no multiplier block");
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ky(
      shifted(system.primal_gram));
  if (ky.info() != Eigen::Success)
    throw FactorizationFailure("estimate_infsup: primal Gram factorization failed");
  const Eigen::SparseMatrix<double> Bt = system.B.transpose();

  if (nm <= 500) {
    Eigen::MatrixXd S(nm, nm);
    for (int k = 0; k < nm; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(nm);
      e[k] = 1.0;
      S.col(k) = system.B * ky.solve(Bt * e);
    }
    const Eigen::MatrixXd M = Eigen::MatrixXd(system.multiplier_gram);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (S + S.transpose()), M);
    if (es.info() != Eigen::Success)
      throw NonConvergedEigen("estimate_infsup: dense eigensolve failed");
    return std::sqrt(std::max(es.eigenvalues().minCoeff(), 0.0));
  }

  // Lanczos in the M inner product on M^{-1}S, full reorthogonalization;
  // the smallest Ritz value converges to lambda_min(M^{-1}S).
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> mch(system.multiplier_gram);
  auto apply_S = [&](const Eigen::VectorXd& v) {
    return (system.B * ky.solve(Bt * v)).eval();
  };
  auto m_dot = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return u.dot(system.multiplier_gram * v);
  };
  const int steps = std::min(nm, max_iters);
  std::vector<Eigen::VectorXd> basis;
  std::vector<double> alpha, beta;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(nm);
  v /= std::sqrt(m_dot(v, v));
  basis.push_back(v);
  double theta_prev = -1.0;
  auto smallest_ritz = [&]() {
    const int j = static_cast<int>(alpha.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(j, j);
    for (int i = 0; i < j; ++i) {
      T(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < j)
        T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T,
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  };
  for (int j = 0; j < steps; ++j) {
    Eigen::VectorXd w = mch.solve(apply_S(basis.back()));
    const double a = m_dot(w, basis.back());
    alpha.push_back(a);
    for (const Eigen::VectorXd& q : basis) w -= m_dot(w, q) * q;
    for (const Eigen::VectorXd& q : basis) w -= m_dot(w, q) * q;
    const double b = std::sqrt(std::max(m_dot(w, w), 0.0));
    if (!std::isfinite(a) || !std::isfinite(b))
      throw NonConvergedEigen("estimate_infsup: Lanczos breakdown");
    if (b < 1e-14) break;  // invariant subspace: Ritz values exact
    if ((j + 1) % 20 == 0) {
      const double theta = smallest_ritz();
      if (theta_prev >= 0.0 &&
          std::abs(theta - theta_prev) <= tol * std::max(std::abs(theta), 1e-30))
        return std::sqrt(std::max(theta, 0.0));
      theta_prev = theta;
    }
    beta.push_back(b);
    basis.push_back(w / b);
  }
  return std::sqrt(std::max(smallest_ritz(), 0.0));
}

double multiplier_consistency(const Field& lambda, const Field& y,
                              const ObservationSet& obs,
                              const WeightFamily& weights,
                              const Coefficients& coeffs, double r) {
  const FemSpace& test = y.space;
  const auto& grid = test.grid;
  const QuadratureSet q = quadrature_points(grid, obs.quad_order);
  const int nd = test.dofs_per_cell();
  std::vector<BasisEval> tab;
  for (int k = 0; k < q.per_cell; ++k) {
    const QuadPoint& p = q.point(0, k);
    tab.push_back(eval_basis(test, 0, p.u, p.v, 2));
  }
  std::vector<int> opos(static_cast<std::size_t>(grid.cell_count()), -1);
  for (std::size_t i = 0; i < obs.cells.size(); ++i)
    opos[static_cast<std::size_t>(obs.cells[i])] = static_cast<int>(i);

  Eigen::VectorXd resid = Eigen::VectorXd::Zero(test.dof_count());
  Eigen::VectorXd load = Eigen::VectorXd::Zero(test.dof_count());
  for (int c = 0; c < grid.cell_count(); ++c) {
    const int oc = opos[static_cast<std::size_t>(c)];
    for (int k = 0; k < q.per_cell; ++k) {
      const QuadPoint& p = q.point(c, k);
      const double cc = coeffs.c(p.x), cx = coeffs.eval_c_x(p.x);
      const double dd = coeffs.d(p.x, p.t);
      const double inv = eval_inverse_weight(weights, WeightMember::Rho, p.x, p.t);
      const FieldEval ye = evaluate_field(y, p.x, p.t, 2);
      const double Ly = ye.dt - cc * ye.dxx - cx * ye.dx + dd * ye.value;
      const double lam = evaluate_field(lambda, p.x, p.t).value;
      for (int i = 0; i < nd; ++i) {
        const double Lphi = tab[k].dt[i] - cc * tab[k].dxx[i] -
                            cx * tab[k].dx[i] + dd * tab[k].value[i];
        const int gi = test.cell_dof(c, i);
        resid[gi] += p.w * (r * inv * inv * Ly + inv * lam) * Lphi;
      }
      if (oc >= 0) {
        const double inv0 =
            eval_inverse_weight(weights, WeightMember::Rho0, p.x, p.t);
        const double w0 = p.w * inv0 * inv0;
        const double yo = obs.value[oc * q.per_cell + k];
        for (int i = 0; i < nd; ++i) {
          const int gi = test.cell_dof(c, i);
          resid[gi] += w0 * (ye.value - yo) * tab[k].value[i];
          load[gi] += w0 * yo * tab[k].value[i];
        }
      }
    }
  }
  const auto mask = test.dirichlet_mask();
  double num = 0.0;
  for (int i = 0; i < resid.size(); ++i)
    if (!mask[static_cast<std::size_t>(i)])
      num = std::max(num, std::abs(resid[i]));
  const double scale = std::max(1.0, load.cwiseAbs().maxCoeff());
  return num / scale;
}

}  // namespace streco
