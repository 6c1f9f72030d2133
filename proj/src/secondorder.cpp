#include "streco/secondorder.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <Eigen/SparseQR>
#include <algorithm>
#include <cmath>
#include <vector>

namespace streco {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

Eigen::SparseMatrix<double> from_triplets(int rows, int cols,
                                          const Triplets& t) {
  Eigen::SparseMatrix<double> m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// Per-reference-point basis tables; identical in every cell of the uniform
// grid.
std::vector<BasisEval> reference_tables(const FemSpace& space,
                                        const QuadratureSet& q, int max_deriv) {
  std::vector<BasisEval> tab;
  tab.reserve(q.per_cell);
  for (int k = 0; k < q.per_cell; ++k) {
    const QuadPoint& p = q.point(0, k);
    tab.push_back(eval_basis(space, 0, p.u, p.v, max_deriv));
  }
  return tab;
}

// L phi = phi_t - (c phi_xx + c_x phi_x) + d phi for every local DOF.
Eigen::VectorXd apply_L(const BasisEval& e, double c, double cx, double d) {
  return e.dt - c * e.dxx - cx * e.dx + d * e.value;
}

// cell -> index into obs.cells, or -1.
std::vector<int> observation_positions(const ObservationSet& obs) {
  std::vector<int> pos(static_cast<std::size_t>(obs.grid.cell_count()), -1);
  for (std::size_t i = 0; i < obs.cells.size(); ++i)
    pos[static_cast<std::size_t>(obs.cells[i])] = static_cast<int>(i);
  return pos;
}

// Symmetric Dirichlet elimination on the primal side of an assembled system.
void apply_primal_mask(SaddleSystem& s) {
  const auto& mask = s.primal_mask;
  auto scrub = [&](Eigen::SparseMatrix<double>& m, bool rows, bool cols,
                   bool unit_diag) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
        const bool kill = (rows && mask[static_cast<std::size_t>(it.row())]) ||
                          (cols && mask[static_cast<std::size_t>(it.col())]);
        if (kill) it.valueRef() = unit_diag && it.row() == it.col() ? 1.0 : 0.0;
      }
    m.prune(0.0);
  };
  scrub(s.A, true, true, true);
  scrub(s.primal_gram, true, true, true);
  scrub(s.B, false, true, false);
  for (int i = 0; i < s.l1.size(); ++i)
    if (mask[static_cast<std::size_t>(i)]) s.l1[i] = 0.0;
}

double inv_w(const WeightFamily& f, WeightMember m, double x, double t) {
  return eval_inverse_weight(f, m, x, t);
}

}  // namespace

Eigen::SparseMatrix<double> SaddleSystem::full_matrix() const {
  const int np = primal_dim(), nm = multiplier_dim();
  Triplets t;
  t.reserve(static_cast<std::size_t>(A.nonZeros() + 2 * B.nonZeros() +
                                     C.nonZeros()));
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
      t.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < B.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(B, k); it; ++it) {
      t.emplace_back(np + it.row(), it.col(), it.value());
      t.emplace_back(it.col(), np + it.row(), it.value());
    }
  for (int k = 0; k < C.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(C, k); it; ++it)
      t.emplace_back(np + it.row(), np + it.col(), -it.value());
  return from_triplets(np + nm, np + nm, t);
}

Eigen::VectorXd SaddleSystem::full_rhs() const {
  Eigen::VectorXd rhs(primal_dim() + multiplier_dim());
  rhs << l1, l2;
  return rhs;
}

double coercivity_theta1(double alpha, double r, double eta) {
  return std::min(1.0 - alpha, r / eta);
}

namespace {

FemSpace multiplier_space(MultiplierKind kind, const SpaceTimeGrid& grid) {
  switch (kind) {
    case MultiplierKind::P0:
      return make_space(BasisKind::PiecewiseConstantP0, grid);
    case MultiplierKind::Q1:
      return make_space(BasisKind::BilinearQ1, grid);
    case MultiplierKind::Hermite:
      return make_space(BasisKind::HermiteC1Tensor, grid);
  }
  throw UnsupportedSpace("unknown multiplier kind");
}

Eigen::SparseMatrix<double> l2_mass(const FemSpace& space,
                                    const QuadratureSet& q) {
  const auto tab = reference_tables(space, q, 0);
  const int nd = space.dofs_per_cell();
  Triplets t;
  for (int c = 0; c < space.grid.cell_count(); ++c)
    for (int k = 0; k < q.per_cell; ++k) {
      const double w = q.point(c, k).w;
      for (int i = 0; i < nd; ++i)
        for (int j = 0; j < nd; ++j)
          t.emplace_back(space.cell_dof(c, i), space.cell_dof(c, j),
                         w * tab[k].value[i] * tab[k].value[j]);
    }
  return from_triplets(space.dof_count(), space.dof_count(), t);
}

}  // namespace

SaddleSystem assemble_mf(const SpaceTimeGrid& grid, const WeightFamily& weights,
                         const ObservationSet& obs, const Coefficients& coeffs,
                         double r, double eta, MultiplierKind mult) {
  if (r < 0.0) throw InvalidExtent("assemble_mf: r must be >= 0");
  if (eta <= 0.0) throw InvalidExtent("assemble_mf: eta must be > 0");
  const int order = obs.quad_order;
  const QuadratureSet q = quadrature_points(grid, order);
  const FemSpace prim = make_space(BasisKind::HermiteC1Tensor, grid);
  const FemSpace mspc = multiplier_space(mult, grid);
  const auto ptab = reference_tables(prim, q, 2);
  const auto mtab = reference_tables(mspc, q, 0);
  const auto opos = observation_positions(obs);

  const int np = prim.dof_count(), nm = mspc.dof_count();
  const int nd = prim.dofs_per_cell(), md = mspc.dofs_per_cell();
  Triplets tMis, tR, tB;
  Eigen::VectorXd l1 = Eigen::VectorXd::Zero(np);

  Eigen::VectorXd Lv(nd);
  for (int c = 0; c < grid.cell_count(); ++c) {
    const int oc = opos[static_cast<std::size_t>(c)];
    for (int k = 0; k < q.per_cell; ++k) {
      const QuadPoint& p = q.point(c, k);
      const double cc = coeffs.c(p.x), cx = coeffs.eval_c_x(p.x);
      const double dd = coeffs.d(p.x, p.t);
      Lv = apply_L(ptab[k], cc, cx, dd);
      const double inv = inv_w(weights, WeightMember::Rho, p.x, p.t);
      const double wr = p.w * inv * inv;
      for (int i = 0; i < nd; ++i) {
        const int gi = prim.cell_dof(c, i);
        for (int j = 0; j < nd; ++j)
          tR.emplace_back(gi, prim.cell_dof(c, j), wr * Lv[i] * Lv[j]);
        for (int m = 0; m < md; ++m)
          tB.emplace_back(mspc.cell_dof(c, m), gi,
                          p.w * inv * Lv[i] * mtab[k].value[m]);
      }
      if (oc >= 0) {
        const double inv0 = inv_w(weights, WeightMember::Rho0, p.x, p.t);
        const double w0 = p.w * inv0 * inv0;
        const double yo = obs.value[oc * q.per_cell + k];
        for (int i = 0; i < nd; ++i) {
          const int gi = prim.cell_dof(c, i);
          for (int j = 0; j < nd; ++j)
            tMis.emplace_back(gi, prim.cell_dof(c, j),
                              w0 * ptab[k].value[i] * ptab[k].value[j]);
          l1[gi] += w0 * yo * ptab[k].value[i];
        }
      }
    }
  }

  SaddleSystem s;
  s.formulation = "mf";
  s.r = r;
  s.eta = eta;
  s.quad_order = order;
  s.weights = weights;
  s.obs = obs;
  s.coeffs = coeffs;
  s.primal_spaces = {prim};
  s.multiplier_spaces = {mspc};
  s.primal_mask = prim.dirichlet_mask();

  const Eigen::SparseMatrix<double> Mis = from_triplets(np, np, tMis);
  const Eigen::SparseMatrix<double> R = from_triplets(np, np, tR);
  s.A = Mis + r * R;
  s.primal_gram = Mis + eta * R;
  s.B = from_triplets(nm, np, tB);
  s.C.resize(nm, nm);
  s.l1 = l1;
  s.l2 = Eigen::VectorXd::Zero(nm);
  s.multiplier_gram = l2_mass(mspc, q);
  apply_primal_mask(s);
  return s;
}

namespace {

// Stabilization by penalizing the residual of the first discrete optimality
// equation, rho = A y + B^T lambda - l1, in the norm G^{-1} with
// G = diag of the primal Gram (positive also when r = 0). The penalized
// saddle Lagrangian is stationary exactly at the unpenalized solution, so
// the solutions coincide; the condensed blocks are
//   A_a = A - alpha A G^{-1} A,  B_a = B - alpha B G^{-1} A,
//   C_a = alpha B G^{-1} B^T,    l1_a = l1 - alpha A G^{-1} l1,
//   l2_a = -alpha B G^{-1} l1.
SaddleSystem stabilize_matched(SaddleSystem base, double alpha) {
  const int np = base.primal_dim();
  Eigen::VectorXd g(np);
  double gmax = 0.0;
  for (int i = 0; i < np; ++i) {
    g[i] = base.primal_gram.coeff(i, i);
    gmax = std::max(gmax, g[i]);
  }
  for (int i = 0; i < np; ++i) g[i] = std::max(g[i], 1e-12 * gmax);
  const auto Ginv = g.cwiseInverse().asDiagonal();

  const Eigen::SparseMatrix<double> AG = base.A * Ginv;   // A G^{-1}
  const Eigen::SparseMatrix<double> BG = base.B * Ginv;   // B G^{-1}
  SaddleSystem s = base;
  s.A = base.A - alpha * (AG * base.A);
  s.B = base.B - alpha * (BG * base.A);
  s.C = Eigen::SparseMatrix<double>(alpha *
                                    (BG * Eigen::SparseMatrix<double>(
                                              base.B.transpose())));
  s.l2 = base.l2 - alpha * (BG * base.l1);
  s.l1 = base.l1 - alpha * (AG * base.l1);
  s.alpha = alpha;
  return s;
}

}  // namespace

SaddleSystem assemble_mf_alpha(const SpaceTimeGrid& grid,
                               const WeightFamily& weights,
                               const ObservationSet& obs,
                               const Coefficients& coeffs, double r,
                               double alpha, double eta,
                               StabilizedRealization realization,
                               MultiplierKind mult) {
  if (alpha < 0.0 || alpha >= 1.0)
    throw AlphaOutOfRange("assemble_mf_alpha: alpha must be in [0,1)");
  if (realization == StabilizedRealization::Matched) {
    SaddleSystem s = stabilize_matched(
        assemble_mf(grid, weights, obs, coeffs, r, eta, mult), alpha);
    s.formulation = "mf-alpha";
    return s;
  }

  // Literal realization: C1 Hermite multiplier carrying L*(rho^{-1}lambda)
  // by the product rule; blocks integrated pointwise as written.
  const int order = obs.quad_order;
  const QuadratureSet q = quadrature_points(grid, order);
  const FemSpace prim = make_space(BasisKind::HermiteC1Tensor, grid);
  const FemSpace mspc = make_space(BasisKind::HermiteC1Tensor, grid);
  const auto ptab = reference_tables(prim, q, 2);
  const auto opos = observation_positions(obs);

  const int np = prim.dof_count(), nm = mspc.dof_count();
  const int nd = prim.dofs_per_cell(), md = mspc.dofs_per_cell();
  Triplets tMis, tR, tB, tS, tC;
  Eigen::VectorXd l1 = Eigen::VectorXd::Zero(np);
  Eigen::VectorXd l2 = Eigen::VectorXd::Zero(nm);

  Eigen::VectorXd Lv(nd), Lstar(md);
  for (int c = 0; c < grid.cell_count(); ++c) {
    const int oc = opos[static_cast<std::size_t>(c)];
    for (int k = 0; k < q.per_cell; ++k) {
      const QuadPoint& p = q.point(c, k);
      const double cc = coeffs.c(p.x), cx = coeffs.eval_c_x(p.x);
      const double dd = coeffs.d(p.x, p.t);
      Lv = apply_L(ptab[k], cc, cx, dd);
      const double inv = inv_w(weights, WeightMember::Rho, p.x, p.t);
      // L*(rho^{-1} psi) with w = rho^{-1}:
      //   -(w_t psi + w psi_t) - c_x(w_x psi + w psi_x)
      //   - c(w_xx psi + 2 w_x psi_x + w psi_xx) + d w psi
      const InverseWeightDerivs wd =
          eval_inverse_weight_derivs(weights, WeightMember::Rho, p.x, p.t);
      const BasisEval& me = ptab[k];  // same reference table (Hermite)
      for (int m = 0; m < md; ++m)
        Lstar[m] = -(wd.d_t * me.value[m] + wd.inv * me.dt[m]) -
                   cx * (wd.d_x * me.value[m] + wd.inv * me.dx[m]) -
                   cc * (wd.d_xx * me.value[m] + 2.0 * wd.d_x * me.dx[m] +
                         wd.inv * me.dxx[m]) +
                   dd * wd.inv * me.value[m];
      for (int i = 0; i < nd; ++i) {
        const int gi = prim.cell_dof(c, i);
        for (int j = 0; j < nd; ++j)
          tR.emplace_back(gi, prim.cell_dof(c, j),
                          p.w * inv * inv * Lv[i] * Lv[j]);
        for (int m = 0; m < md; ++m)
          tB.emplace_back(mspc.cell_dof(c, m), gi,
                          p.w * inv * Lv[i] * me.value[m]);
      }
      const double inv0 = inv_w(weights, WeightMember::Rho0, p.x, p.t);
      // c_alpha runs over Q_T with the direct weight rho_0^2.
      if (inv0 > 0.0) {
        const double w02 = p.w / (inv0 * inv0);
        for (int m = 0; m < md; ++m)
          for (int n = 0; n < md; ++n)
            tC.emplace_back(mspc.cell_dof(c, m), mspc.cell_dof(c, n),
                            alpha * w02 * Lstar[m] * Lstar[n]);
      }
      if (oc >= 0) {
        const double w0 = p.w * inv0 * inv0;
        const double yo = obs.value[oc * q.per_cell + k];
        for (int i = 0; i < nd; ++i) {
          const int gi = prim.cell_dof(c, i);
          for (int j = 0; j < nd; ++j)
            tMis.emplace_back(gi, prim.cell_dof(c, j),
                              w0 * ptab[k].value[i] * ptab[k].value[j]);
          l1[gi] += (1.0 - alpha) * w0 * yo * ptab[k].value[i];
          for (int m = 0; m < md; ++m)
            tS.emplace_back(mspc.cell_dof(c, m), gi,
                            p.w * Lstar[m] * ptab[k].value[i]);
        }
        for (int m = 0; m < md; ++m)
          l2[mspc.cell_dof(c, m)] -= alpha * p.w * yo * Lstar[m];
      }
    }
  }

  SaddleSystem s;
  s.formulation = "mf-alpha-literal";
  s.r = r;
  s.alpha = alpha;
  s.eta = eta;
  s.quad_order = order;
  s.weights = weights;
  s.obs = obs;
  s.coeffs = coeffs;
  s.primal_spaces = {prim};
  s.multiplier_spaces = {mspc};
  s.primal_mask = prim.dirichlet_mask();

  const Eigen::SparseMatrix<double> Mis = from_triplets(np, np, tMis);
  const Eigen::SparseMatrix<double> R = from_triplets(np, np, tR);
  s.A = (1.0 - alpha) * Mis + r * R;
  s.primal_gram = Mis + eta * R;
  s.B = from_triplets(nm, np, tB) - alpha * from_triplets(nm, np, tS);
  s.C = from_triplets(nm, nm, tC);
  s.l1 = l1;
  s.l2 = l2;
  s.multiplier_gram = l2_mass(mspc, q);
  apply_primal_mask(s);

  // Multiplier space Psi: rho^{-1}lambda = 0 on the lateral boundary and at
  // t = T, imposed strongly on the controlling Hermite DOFs.
  std::vector<bool> mmask(static_cast<std::size_t>(nm), false);
  const auto lateral = mspc.dirichlet_mask();
  for (int i = 0; i < nm; ++i) mmask[i] = lateral[i];
  for (int i = 0; i <= grid.nx; ++i) {
    const int node = grid.nt * (grid.nx + 1) + i;
    mmask[4 * node + 0] = true;  // value at t = T
    mmask[4 * node + 1] = true;  // x-derivative at t = T
  }
  auto scrub_rows = [&](Eigen::SparseMatrix<double>& m, bool also_cols) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
        const bool kill =
            mmask[static_cast<std::size_t>(it.row())] ||
            (also_cols && mmask[static_cast<std::size_t>(it.col())]);
        if (kill)
          it.valueRef() =
              also_cols && it.row() == it.col() ? it.valueRef() : 0.0;
      }
    m.prune(0.0);
  };
  scrub_rows(s.B, false);
  // C gets a unit diagonal on masked multiplier DOFs so the full matrix
  // stays invertible.
  Triplets extra;
  for (int k = 0; k < s.C.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(s.C, k); it; ++it)
      if (mmask[static_cast<std::size_t>(it.row())] ||
          mmask[static_cast<std::size_t>(it.col())])
        it.valueRef() = 0.0;
  s.C.prune(0.0);
  for (int i = 0; i < nm; ++i)
    if (mmask[static_cast<std::size_t>(i)]) extra.emplace_back(i, i, 1.0);
  Eigen::SparseMatrix<double> eye(nm, nm);
  eye.setFromTriplets(extra.begin(), extra.end());
  s.C += eye;
  for (int i = 0; i < nm; ++i)
    if (mmask[static_cast<std::size_t>(i)]) s.l2[i] = 0.0;
  return s;
}

SaddleSystem assemble_qr(const SpaceTimeGrid& grid, const WeightFamily& weights,
                         const ObservationSet& obs, const Coefficients& coeffs,
                         double eps, double eta) {
  if (eps <= 0.0) throw NonPositiveEps("assemble_qr: eps must be > 0");
  // <Py,Py> + eps <.,.>_state = (1+eps) misfit + (1+eps*eta) equation term.
  SaddleSystem base = assemble_mf(grid, weights, obs, coeffs, 1.0, eta);
  SaddleSystem s = base;
  s.formulation = "qr";
  s.r = eps;
  // Recover the two ingredients: with r=1 and gram = Mis + eta*Req,
  //   A = Mis + Req  =>  Req = (gram - A) / (eta - 1) unless eta == 1.
  Eigen::SparseMatrix<double> Mis, Req;
  if (std::abs(eta - 1.0) > 1e-14) {
    Req = ((base.primal_gram - base.A) * (1.0 / (eta - 1.0))).eval();
    Mis = (base.A - Req).eval();
  } else {
    // eta == 1: A and gram coincide; reassemble with a different eta to
    // separate the terms.
    SaddleSystem alt = assemble_mf(grid, weights, obs, coeffs, 1.0, 2.0);
    Req = (alt.primal_gram - alt.A).eval();
    Mis = (alt.A - Req).eval();
  }
  s.A = (1.0 + eps) * Mis + (1.0 + eps * eta) * Req;
  // Keep the unit diagonal of the masked DOFs intact.
  for (int i = 0; i < s.primal_dim(); ++i)
    if (s.primal_mask[static_cast<std::size_t>(i)]) s.A.coeffRef(i, i) = 1.0;
  s.l1 = base.l1;
  s.B.resize(0, s.primal_dim());
  s.C.resize(0, 0);
  s.l2.resize(0);
  s.multiplier_spaces.clear();
  s.multiplier_gram.resize(0, 0);
  return s;
}

namespace {

double quad_norm_L_residual(const SaddleSystem& s, const Field& y) {
  const QuadratureSet q = quadrature_points(y.space.grid, s.quad_order);
  double acc = 0.0;
  for (const auto& p : q.points) {
    const FieldEval e = evaluate_field(y, p.x, p.t, 2);
    const double Ly = e.dt - s.coeffs.c(p.x) * e.dxx -
                      s.coeffs.eval_c_x(p.x) * e.dx +
                      s.coeffs.d(p.x, p.t) * e.value;
    const double inv = inv_w(s.weights, WeightMember::Rho, p.x, p.t);
    acc += p.w * inv * inv * Ly * Ly;
  }
  return std::sqrt(acc);
}

double quad_norm_IJ_residual(const SaddleSystem& s, const Field& y,
                             const Field& p) {
  const QuadratureSet q = quadrature_points(y.space.grid, s.quad_order);
  double acc = 0.0;
  for (const auto& pt : q.points) {
    const FieldEval ye = evaluate_field(y, pt.x, pt.t, 1);
    const FieldEval pe = evaluate_field(p, pt.x, pt.t, 1);
    const double I = ye.dt - pe.dx + s.coeffs.d(pt.x, pt.t) * ye.value;
    const double J = s.coeffs.c(pt.x) * ye.dx - pe.value;
    const double inv = inv_w(s.weights, WeightMember::Rho, pt.x, pt.t);
    const double inv1 = inv_w(s.weights, WeightMember::Rho1, pt.x, pt.t);
    acc += pt.w * (inv * inv * I * I + inv1 * inv1 * J * J);
  }
  return std::sqrt(acc);
}

double obs_weighted_norm(const ObservationSet& obs, const WeightFamily& f) {
  double acc = 0.0;
  for (int k = 0; k < obs.sample_count(); ++k) {
    const double inv0 = inv_w(f, WeightMember::Rho0, obs.x[k], obs.t[k]);
    acc += obs.w[k] * inv0 * inv0 * obs.value[k] * obs.value[k];
  }
  return std::sqrt(acc);
}

}  // namespace

double condition_estimate(const Eigen::SparseMatrix<double>& m, int iters) {
  const int n = static_cast<int>(m.rows());
  if (n == 0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
  double lmax = 0.0;
  for (int it = 0; it < iters; ++it) {
    v = (m * v).eval();
    lmax = v.norm();
    if (lmax == 0.0) return 0.0;
    v /= lmax;
  }
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(m);
  if (lu.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n).normalized();
  double inv_lmin = 0.0;
  for (int it = 0; it < iters; ++it) {
    w = lu.solve(w).eval();
    inv_lmin = w.norm();
    if (inv_lmin == 0.0) break;
    w /= inv_lmin;
  }
  return inv_lmin > 0.0 ? lmax * inv_lmin : std::numeric_limits<double>::infinity();
}

RenormalizedSystem apply_renormalization(const SaddleSystem& system,
                                         const WeightFamily& family,
                                         bool estimate_conditions) {
  const int np = system.primal_dim(), nm = system.multiplier_dim();
  RenormalizedSystem out;
  out.scale = Eigen::VectorXd::Ones(np + nm);
  int offset = 0;
  const double t_floor = 0.1 * system.primal_spaces.front().grid.dt();
  for (const auto& space : system.primal_spaces) {
    for (int d = 0; d < space.dof_count(); ++d) {
      // constrained DOFs keep their unit diagonal untouched
      if (system.primal_mask[static_cast<std::size_t>(offset + d)]) continue;
      double x, t;
      space.dof_node(d, x, t);
      const double inv0 = eval_inverse_weight(family, WeightMember::Rho0, x,
                                              std::max(t, t_floor));
      // clamp to [floor, 1]: below the class floor the variable carries no
      // weighted information, and rows whose misfit weight is already of
      // unit size or stronger must not be scaled down (the equation term
      // keeps them healthy regardless of the misfit weight there)
      out.scale[offset + d] =
          std::max(std::min(inv0, 1.0), family.rho_star);
    }
    offset += space.dof_count();
  }
  // ytilde = rho0^{-1} y: with s = rho0^{-1} consistent factors, solve
  // (S K S) u = S rhs with S = diag(1/s) on the primal block, then map back
  // y = s .* ... ; equivalently record scale so that u_original = scale .* u.
  Eigen::VectorXd S(np + nm);
  for (int i = 0; i < np + nm; ++i) S[i] = 1.0 / out.scale[i];
  const Eigen::SparseMatrix<double> K = system.full_matrix();
  out.K = S.asDiagonal() * K * S.asDiagonal();
  out.rhs = S.asDiagonal() * system.full_rhs();
  out.scale = S;  // u_original = S .* u_scaled  (S = diag entries)
  if (estimate_conditions) {
    const Eigen::SparseMatrix<double> Ablk = system.A;
    Eigen::VectorXd Sp = S.head(np);
    const Eigen::SparseMatrix<double> Ascaled =
        Sp.asDiagonal() * Ablk * Sp.asDiagonal();
    out.condition_before = condition_estimate(Ablk);
    out.condition_after = condition_estimate(Ascaled);
  }
  return out;
}

ReconstructionReport build_report(const SaddleSystem& system,
                                  const Eigen::VectorXd& u) {
  const int np = system.primal_dim(), nm = system.multiplier_dim();
  ReconstructionReport rep;
  int offset = 0;
  std::vector<Field> primal, mult;
  for (const auto& sp : system.primal_spaces) {
    primal.push_back(Field{sp, u.segment(offset, sp.dof_count())});
    offset += sp.dof_count();
  }
  for (const auto& sp : system.multiplier_spaces) {
    mult.push_back(Field{sp, u.segment(offset, sp.dof_count())});
    offset += sp.dof_count();
  }
  rep.y = primal[0];
  if (primal.size() > 1) rep.p = primal[1];
  if (!mult.empty()) {
    rep.lambda = mult[0];
    if (mult.size() > 1) rep.mu = mult[1];
  } else {
    rep.lambda = Field{make_space(BasisKind::PiecewiseConstantP0,
                                  system.primal_spaces[0].grid),
                      Eigen::VectorXd::Zero(
                          system.primal_spaces[0].grid.cell_count())};
  }

  rep.cost = weighted_misfit(rep.y, system.obs, system.weights);
  rep.misfit_norm = std::sqrt(2.0 * rep.cost);
  rep.obs_norm = obs_weighted_norm(system.obs, system.weights);
  rep.residual_norm = primal.size() > 1
                          ? quad_norm_IJ_residual(system, rep.y, *rep.p)
                          : quad_norm_L_residual(system, rep.y);
  if (nm > 0) {
    const Eigen::VectorXd lam = u.segment(np, nm);
    rep.multiplier_norm = std::sqrt(lam.dot(system.multiplier_gram * lam));
  }
  const Eigen::VectorXd resid =
      system.full_matrix() * u - system.full_rhs();
  rep.stats.final_residual = resid.norm();
  return rep;
}

ReconstructionReport solve_saddle(const SaddleSystem& system,
                                  const SolveOptions& options) {
  Eigen::VectorXd u;
  SolverStats stats;
  if (options.renormalize) {
    RenormalizedSystem rn = apply_renormalization(system, system.weights,
                                                  true);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(rn.K);
    if (lu.info() != Eigen::Success)
      throw FactorizationFailure("solve_saddle: renormalized factorization failed");
    u = rn.scale.asDiagonal() * lu.solve(rn.rhs);
    stats.condition_before = rn.condition_before;
    stats.condition_after = rn.condition_after;
    stats.factor_nnz = rn.K.nonZeros();
  } else {
    const Eigen::SparseMatrix<double> K = system.full_matrix();
    const Eigen::VectorXd rhs = system.full_rhs();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(K);
    if (lu.info() == Eigen::Success) {
      u = lu.solve(rhs);
    } else {
      // Rank-deficient saddle (r = 0 without stabilization): the system is
      // consistent, so a sparse least-squares solve yields a valid solution.
      Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>
          qr;
      qr.setPivotThreshold(1e-13);
      qr.compute(K);
      if (qr.info() != Eigen::Success)
        throw FactorizationFailure("solve_saddle: factorization failed");
      u = qr.solve(rhs);
      const double rel = (K * u - rhs).norm() /
                         std::max(rhs.norm(), 1e-300);
      if (!(rel < 1e-8))
        throw FactorizationFailure(
            "solve_saddle: singular system is inconsistent (relative residual " +
            std::to_string(rel) + ")");
    }
    stats.factor_nnz = K.nonZeros();
    if (options.condition_estimates)
      stats.condition_before = condition_estimate(system.A);
  }
  ReconstructionReport rep = build_report(system, u);
  rep.stats.factor_nnz = stats.factor_nnz;
  rep.stats.condition_before = stats.condition_before;
  rep.stats.condition_after = stats.condition_after;
  return rep;
}

}  // namespace streco
