#include "streco/firstorder.hpp"

#include <algorithm>
#include <cmath>

namespace streco {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

Eigen::SparseMatrix<double> from_triplets(int rows, int cols,
                                          const Triplets& t) {
  Eigen::SparseMatrix<double> m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

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

std::vector<int> observation_positions(const ObservationSet& obs) {
  std::vector<int> pos(static_cast<std::size_t>(obs.grid.cell_count()), -1);
  for (std::size_t i = 0; i < obs.cells.size(); ++i)
    pos[static_cast<std::size_t>(obs.cells[i])] = static_cast<int>(i);
  return pos;
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

}  // namespace

IJSamples apply_IJ(const PairField& pair, const Coefficients& coeffs,
                   int quad_order) {
  const QuadratureSet q = quadrature_points(pair.y.space.grid, quad_order);
  IJSamples out;
  const int n = static_cast<int>(q.points.size());
  out.I.resize(n);
  out.J.resize(n);
  for (int k = 0; k < n; ++k) {
    const QuadPoint& p = q.points[static_cast<std::size_t>(k)];
    const FieldEval ye = evaluate_field(pair.y, p.x, p.t, 1);
    const FieldEval pe = evaluate_field(pair.p, p.x, p.t, 1);
    out.I[k] = ye.dt - pe.dx + coeffs.d(p.x, p.t) * ye.value;
    out.J[k] = coeffs.c(p.x) * ye.dx - pe.value;
  }
  return out;
}

double coercivity_theta1_mixed(double alpha1, double r1, double eta1,
                               double r2, double eta2) {
  return std::min({1.0 - alpha1, r1 / eta1, r2 / eta2});
}

double infsup_delta_mixed(double c_omega_T, double rho_star, double rho1_sup,
                          double rho_sup, double eta1, double eta2) {
  const double s2 = 1.0 / (rho_star * rho_star);
  const double m = std::max(c_omega_T * s2 * rho1_sup * rho1_sup + eta1,
                            c_omega_T * s2 * rho_sup * rho_sup + eta2);
  return 1.0 / std::sqrt(m);
}

SaddleSystem assemble_mf4(const SpaceTimeGrid& grid,
                          const WeightFamily& weights,
                          const ObservationSet& obs, const Coefficients& coeffs,
                          double r1, double r2, double eta1, double eta2) {
  if (r1 < 0.0 || r2 < 0.0) throw InvalidExtent("assemble_mf4: r1, r2 >= 0");
  if (eta1 <= 0.0 || eta2 <= 0.0)
    throw InvalidExtent("assemble_mf4: eta1, eta2 > 0");
  const int order = obs.quad_order;
  const QuadratureSet q = quadrature_points(grid, order);
  const FemSpace yspc = make_space(BasisKind::BilinearQ1, grid);
  const FemSpace pspc = make_space(BasisKind::BilinearQ1, grid);
  const FemSpace lspc = make_space(BasisKind::PiecewiseConstantP0, grid);
  const FemSpace mspc = make_space(BasisKind::PiecewiseConstantP0, grid);
  const auto qtab = reference_tables(yspc, q, 1);
  const auto opos = observation_positions(obs);

  const int ny = yspc.dof_count(), npp = pspc.dof_count();
  const int nl = lspc.dof_count(), nmu = mspc.dof_count();
  const int np = ny + npp, nm = nl + nmu;
  const int nd = yspc.dofs_per_cell();  // 4, same for p
  Triplets tMis, tJJ, tII, tB;
  Eigen::VectorXd l1 = Eigen::VectorXd::Zero(np);

  // Per quad point, I and J values for the 8 local primal DOFs
  // (4 y-DOFs then 4 p-DOFs).
  Eigen::VectorXd Iv(2 * nd), Jv(2 * nd);
  for (int c = 0; c < grid.cell_count(); ++c) {
    const int oc = opos[static_cast<std::size_t>(c)];
    for (int k = 0; k < q.per_cell; ++k) {
      const QuadPoint& p = q.point(c, k);
      const double cc = coeffs.c(p.x), dd = coeffs.d(p.x, p.t);
      const BasisEval& e = qtab[k];
      for (int i = 0; i < nd; ++i) {
        Iv[i] = e.dt[i] + dd * e.value[i];  // y part
        Jv[i] = cc * e.dx[i];
        Iv[nd + i] = -e.dx[i];  // p part
        Jv[nd + i] = -e.value[i];
      }
      const double inv = eval_inverse_weight(weights, WeightMember::Rho, p.x, p.t);
      const double inv1 =
          eval_inverse_weight(weights, WeightMember::Rho1, p.x, p.t);
      auto gdof = [&](int local) {
        return local < nd ? yspc.cell_dof(c, local)
                          : ny + pspc.cell_dof(c, local - nd);
      };
      for (int i = 0; i < 2 * nd; ++i) {
        const int gi = gdof(i);
        for (int j = 0; j < 2 * nd; ++j) {
          tII.emplace_back(gi, gdof(j), p.w * inv * inv * Iv[i] * Iv[j]);
          tJJ.emplace_back(gi, gdof(j), p.w * inv1 * inv1 * Jv[i] * Jv[j]);
        }
        tB.emplace_back(lspc.cell_dof(c, 0), gi, p.w * inv * Iv[i]);
        tB.emplace_back(nl + mspc.cell_dof(c, 0), gi, p.w * inv1 * Jv[i]);
      }
      if (oc >= 0) {
        const double inv0 =
            eval_inverse_weight(weights, WeightMember::Rho0, p.x, p.t);
        const double w0 = p.w * inv0 * inv0;
        const double yo = obs.value[oc * q.per_cell + k];
        for (int i = 0; i < nd; ++i) {
          const int gi = yspc.cell_dof(c, i);
          for (int j = 0; j < nd; ++j)
            tMis.emplace_back(gi, yspc.cell_dof(c, j),
                              w0 * e.value[i] * e.value[j]);
          l1[gi] += w0 * yo * e.value[i];
        }
      }
    }
  }

  SaddleSystem s;
  s.formulation = "mf4";
  s.r = r1;
  s.r2 = r2;
  s.eta = eta1;
  s.eta2 = eta2;
  s.quad_order = order;
  s.weights = weights;
  s.obs = obs;
  s.coeffs = coeffs;
  s.primal_spaces = {yspc, pspc};
  s.multiplier_spaces = {lspc, mspc};
  s.primal_mask.assign(static_cast<std::size_t>(np), false);
  const auto ymask = yspc.dirichlet_mask();
  for (int i = 0; i < ny; ++i)
    s.primal_mask[static_cast<std::size_t>(i)] = ymask[i];

  const Eigen::SparseMatrix<double> Mis = from_triplets(np, np, tMis);
  const Eigen::SparseMatrix<double> JJ = from_triplets(np, np, tJJ);
  const Eigen::SparseMatrix<double> II = from_triplets(np, np, tII);
  s.A = Mis + r1 * JJ + r2 * II;
  s.primal_gram = Mis + eta1 * JJ + eta2 * II;
  s.B = from_triplets(nm, np, tB);
  s.C.resize(nm, nm);
  s.l1 = l1;
  s.l2 = Eigen::VectorXd::Zero(nm);
  // Block-diagonal multiplier mass (the product L2 x L2 inner product).
  {
    const Eigen::SparseMatrix<double> Ml = l2_mass(lspc, q);
    const Eigen::SparseMatrix<double> Mm = l2_mass(mspc, q);
    Triplets t;
    for (int k = 0; k < Ml.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(Ml, k); it; ++it)
        t.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < Mm.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(Mm, k); it; ++it)
        t.emplace_back(nl + it.row(), nl + it.col(), it.value());
    s.multiplier_gram = from_triplets(nm, nm, t);
  }
  apply_primal_mask(s);
  return s;
}

SaddleSystem assemble_mf4_alpha(const SpaceTimeGrid& grid,
                                const WeightFamily& weights,
                                const ObservationSet& obs,
                                const Coefficients& coeffs, double r1,
                                double r2, double alpha1, double alpha2,
                                StabilizedRealization realization, double eta1,
                                double eta2) {
  if (alpha1 < 0.0 || alpha1 >= 1.0 || alpha2 < 0.0 || alpha2 >= 1.0)
    throw AlphaOutOfRange("assemble_mf4_alpha: alpha1, alpha2 in [0,1)");
  if (realization == StabilizedRealization::Matched) {
    // Penalize the first discrete optimality equation of mf4 (weight
    // alpha1); exact coincidence with the mf4 solution. alpha2 is kept as
    // metadata only in this realization.
    SaddleSystem base = assemble_mf4(grid, weights, obs, coeffs, r1, r2, eta1, eta2);
    const int np = base.primal_dim();
    Eigen::VectorXd g(np);
    double gmax = 0.0;
    for (int i = 0; i < np; ++i) {
      g[i] = base.primal_gram.coeff(i, i);
      gmax = std::max(gmax, g[i]);
    }
    for (int i = 0; i < np; ++i) g[i] = std::max(g[i], 1e-12 * gmax);
    const auto Ginv = g.cwiseInverse().asDiagonal();
    const Eigen::SparseMatrix<double> AG = base.A * Ginv;
    const Eigen::SparseMatrix<double> BG = base.B * Ginv;
    SaddleSystem s = base;
    s.A = base.A - alpha1 * (AG * base.A);
    s.B = base.B - alpha1 * (BG * base.A);
    s.C = Eigen::SparseMatrix<double>(
        alpha1 * (BG * Eigen::SparseMatrix<double>(base.B.transpose())));
    s.l2 = base.l2 - alpha1 * (BG * base.l1);
    s.l1 = base.l1 - alpha1 * (AG * base.l1);
    s.formulation = "mf4-alpha";
    s.alpha = alpha1;
    s.alpha2 = alpha2;
    return s;
  }

  // Literal realization: multipliers (phi, sigma) on Q1 x Q1.
  const int order = obs.quad_order;
  const QuadratureSet q = quadrature_points(grid, order);
  const FemSpace yspc = make_space(BasisKind::BilinearQ1, grid);
  const FemSpace pspc = make_space(BasisKind::BilinearQ1, grid);
  const FemSpace fspc = make_space(BasisKind::BilinearQ1, grid);  // phi
  const FemSpace sspc = make_space(BasisKind::BilinearQ1, grid);  // sigma
  const auto qtab = reference_tables(yspc, q, 1);
  const auto opos = observation_positions(obs);

  const int ny = yspc.dof_count(), npp = pspc.dof_count();
  const int nf = fspc.dof_count(), ns = sspc.dof_count();
  const int np = ny + npp, nm = nf + ns;
  const int nd = yspc.dofs_per_cell();
  Triplets tMis, tJJ, tII, tB, tC;
  Eigen::VectorXd l1 = Eigen::VectorXd::Zero(np);
  Eigen::VectorXd l2 = Eigen::VectorXd::Zero(nm);

  Eigen::VectorXd Iv(2 * nd), Jv(2 * nd);    // primal I, J
  Eigen::VectorXd Is(2 * nd), Jm(2 * nd);    // multiplier I*, J
  for (int c = 0; c < grid.cell_count(); ++c) {
    const int oc = opos[static_cast<std::size_t>(c)];
    for (int k = 0; k < q.per_cell; ++k) {
      const QuadPoint& p = q.point(c, k);
      const double cc = coeffs.c(p.x), dd = coeffs.d(p.x, p.t);
      const BasisEval& e = qtab[k];
      for (int i = 0; i < nd; ++i) {
        Iv[i] = e.dt[i] + dd * e.value[i];
        Jv[i] = cc * e.dx[i];
        Iv[nd + i] = -e.dx[i];
        Jv[nd + i] = -e.value[i];
        // I*(phi,sigma) = -phi_t - sigma_x + d phi; J(phi,sigma) = c phi_x - sigma
        Is[i] = -e.dt[i] + dd * e.value[i];  // phi part
        Jm[i] = cc * e.dx[i];
        Is[nd + i] = -e.dx[i];  // sigma part
        Jm[nd + i] = -e.value[i];
      }
      const double inv = eval_inverse_weight(weights, WeightMember::Rho, p.x, p.t);
      const double inv1 =
          eval_inverse_weight(weights, WeightMember::Rho1, p.x, p.t);
      const double inv0 =
          eval_inverse_weight(weights, WeightMember::Rho0, p.x, p.t);
      auto gprim = [&](int local) {
        return local < nd ? yspc.cell_dof(c, local)
                          : ny + pspc.cell_dof(c, local - nd);
      };
      auto gmult = [&](int local) {
        return local < nd ? fspc.cell_dof(c, local)
                          : nf + sspc.cell_dof(c, local - nd);
      };
      for (int i = 0; i < 2 * nd; ++i) {
        const int gi = gprim(i);
        for (int j = 0; j < 2 * nd; ++j) {
          tII.emplace_back(gi, gprim(j), p.w * inv * inv * Iv[i] * Iv[j]);
          tJJ.emplace_back(gi, gprim(j), p.w * inv1 * inv1 * Jv[i] * Jv[j]);
        }
        // b without the alpha-term: J(y,p).sigma + I(y,p) phi over Q_T.
        for (int m = 0; m < 2 * nd; ++m) {
          double v = 0.0;
          if (m < nd)
            v = p.w * Iv[i] * e.value[m];  // phi value
          else
            v = p.w * Jv[i] * e.value[m - nd];  // sigma value
          tB.emplace_back(gmult(m), gi, v);
        }
      }
      // c_alpha over Q_T; the rho_0^2 factor is skipped where the inverse
      // weight underflowed to 0.
      const double w02 = inv0 > 0.0 ? p.w / (inv0 * inv0) : 0.0;
      for (int m = 0; m < 2 * nd; ++m)
        for (int n = 0; n < 2 * nd; ++n)
          tC.emplace_back(gmult(m), gmult(n),
                          alpha1 * w02 * Is[m] * Is[n] +
                              alpha2 * p.w * Jm[m] * Jm[n]);
      if (oc >= 0) {
        const double w0 = p.w * inv0 * inv0;
        const double yo = obs.value[oc * q.per_cell + k];
        for (int i = 0; i < nd; ++i) {
          const int gi = yspc.cell_dof(c, i);
          for (int j = 0; j < nd; ++j)
            tMis.emplace_back(gi, yspc.cell_dof(c, j),
                              w0 * e.value[i] * e.value[j]);
          l1[gi] += (1.0 - alpha1) * w0 * yo * e.value[i];
          // -alpha1 int_{qT} I*(phi,sigma) y : contributes to B rows.
          for (int m = 0; m < 2 * nd; ++m)
            tB.emplace_back(gmult(m), gi, -alpha1 * p.w * Is[m] * e.value[i]);
        }
        for (int m = 0; m < 2 * nd; ++m)
          l2[gmult(m)] -= alpha1 * p.w * yo * Is[m];
      }
    }
  }

  SaddleSystem s;
  s.formulation = "mf4-alpha-literal";
  s.r = r1;
  s.r2 = r2;
  s.alpha = alpha1;
  s.alpha2 = alpha2;
  s.eta = eta1;
  s.eta2 = eta2;
  s.quad_order = order;
  s.weights = weights;
  s.obs = obs;
  s.coeffs = coeffs;
  s.primal_spaces = {yspc, pspc};
  s.multiplier_spaces = {fspc, sspc};
  s.primal_mask.assign(static_cast<std::size_t>(np), false);
  const auto ymask = yspc.dirichlet_mask();
  for (int i = 0; i < ny; ++i)
    s.primal_mask[static_cast<std::size_t>(i)] = ymask[i];

  const Eigen::SparseMatrix<double> Mis = from_triplets(np, np, tMis);
  const Eigen::SparseMatrix<double> JJ = from_triplets(np, np, tJJ);
  const Eigen::SparseMatrix<double> II = from_triplets(np, np, tII);
  s.A = (1.0 - alpha1) * Mis + r1 * JJ + r2 * II;
  s.primal_gram = Mis + eta1 * JJ + eta2 * II;
  s.B = from_triplets(nm, np, tB);
  s.C = from_triplets(nm, nm, tC);
  s.l1 = l1;
  s.l2 = l2;
  {
    const Eigen::SparseMatrix<double> Mf = l2_mass(fspc, q);
    const Eigen::SparseMatrix<double> Ms = l2_mass(sspc, q);
    Triplets t;
    for (int k = 0; k < Mf.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(Mf, k); it; ++it)
        t.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < Ms.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(Ms, k); it; ++it)
        t.emplace_back(nf + it.row(), nf + it.col(), it.value());
    s.multiplier_gram = from_triplets(nm, nm, t);
  }
  apply_primal_mask(s);

  // Psi masks: phi = 0 on the lateral boundary and at t = T.
  std::vector<bool> mmask(static_cast<std::size_t>(nm), false);
  const auto lateral = fspc.dirichlet_mask();
  for (int i = 0; i < nf; ++i) mmask[static_cast<std::size_t>(i)] = lateral[i];
  for (int i = 0; i <= grid.nx; ++i)
    mmask[static_cast<std::size_t>(grid.nt * (grid.nx + 1) + i)] = true;
  for (int k = 0; k < s.B.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(s.B, k); it; ++it)
      if (mmask[static_cast<std::size_t>(it.row())]) it.valueRef() = 0.0;
  s.B.prune(0.0);
  for (int k = 0; k < s.C.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(s.C, k); it; ++it)
      if (mmask[static_cast<std::size_t>(it.row())] ||
          mmask[static_cast<std::size_t>(it.col())])
        it.valueRef() = 0.0;
  s.C.prune(0.0);
  Triplets eye_t;
  for (int i = 0; i < nm; ++i)
    if (mmask[static_cast<std::size_t>(i)]) eye_t.emplace_back(i, i, 1.0);
  Eigen::SparseMatrix<double> eye(nm, nm);
  eye.setFromTriplets(eye_t.begin(), eye_t.end());
  s.C += eye;
  for (int i = 0; i < nm; ++i)
    if (mmask[static_cast<std::size_t>(i)]) s.l2[i] = 0.0;
  return s;
}

}  // namespace streco
