#include "streco/forward.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace streco {

double Coefficients::eval_c_x(double x) const {
  if (c_x) return c_x(x);
  const double h = 1e-6;
  return (c(x + h) - c(x - h)) / (2 * h);
}

void validate_coefficients(const Coefficients& coeffs, const SpaceTimeGrid& grid,
                           int quad_order) {
  const QuadratureSet q = quadrature_points(grid, quad_order);
  for (const auto& p : q.points) {
    if (!(coeffs.c(p.x) >= coeffs.c0) || !(coeffs.c0 > 0.0))
      throw InvalidExtent("coefficients: c(x) >= c0 > 0 violated");
    if (!std::isfinite(coeffs.d(p.x, p.t)))
      throw InvalidExtent("coefficients: d not finite at a quadrature point");
  }
}

FieldEval evaluate_field(const Field& field, double x, double t,
                         int max_deriv) {
  const auto& g = field.space.grid;
  const int c = g.locate(x, t);
  const auto cell = g.cell(c);
  const double u = (x - cell.x0) / (cell.x1 - cell.x0);
  const double v = (t - cell.t0) / (cell.t1 - cell.t0);
  const BasisEval e = eval_basis(field.space, c, u, v, max_deriv);
  FieldEval out;
  for (int k = 0; k < field.space.dofs_per_cell(); ++k) {
    const double a = field.dofs[field.space.cell_dof(c, k)];
    out.value += a * e.value[k];
    out.dx += a * e.dx[k];
    out.dt += a * e.dt[k];
    out.dxx += a * e.dxx[k];
  }
  return out;
}

Field interpolate(const FemSpace& space, const ScalarField2D& fn) {
  Field field{space, Eigen::VectorXd::Zero(space.dof_count())};
  const auto& g = space.grid;
  switch (space.kind) {
    case BasisKind::BilinearQ1:
      for (int j = 0; j <= g.nt; ++j)
        for (int i = 0; i <= g.nx; ++i)
          field.dofs[j * (g.nx + 1) + i] =
              fn.f(g.x_min + i * g.dx(), j * g.dt());
      break;
    case BasisKind::HermiteC1Tensor:
      for (int j = 0; j <= g.nt; ++j)
        for (int i = 0; i <= g.nx; ++i) {
          const double x = g.x_min + i * g.dx();
          const double t = j * g.dt();
          const int n = j * (g.nx + 1) + i;
          field.dofs[4 * n + 0] = fn.f(x, t);
          field.dofs[4 * n + 1] = fn.fx ? fn.fx(x, t) : 0.0;
          field.dofs[4 * n + 2] = fn.ft ? fn.ft(x, t) : 0.0;
          field.dofs[4 * n + 3] = fn.fxt ? fn.fxt(x, t) : 0.0;
        }
      break;
    case BasisKind::PiecewiseConstantP0:
      for (int c = 0; c < g.cell_count(); ++c) {
        const auto cell = g.cell(c);
        field.dofs[c] = fn.f(0.5 * (cell.x0 + cell.x1), 0.5 * (cell.t0 + cell.t1));
      }
      break;
  }
  return field;
}

namespace {

// 2-point Gauss rule on [0,1]
constexpr double kGp[2] = {0.21132486540518713, 0.7886751345948129};
constexpr double kGw[2] = {0.5, 0.5};

struct SpatialOperators {
  Eigen::MatrixXd M;  // mass
  Eigen::MatrixXd K;  // stiffness with c(x)
  int n;              // interior node count
};

// P1 matrices on interior nodes of the spatial mesh.
SpatialOperators spatial_operators(const SpaceTimeGrid& g,
                                   const Coefficients& coeffs) {
  const int n = g.nx - 1;
  SpatialOperators op;
  op.n = n;
  op.M = Eigen::MatrixXd::Zero(n, n);
  op.K = Eigen::MatrixXd::Zero(n, n);
  const double h = g.dx();
  for (int e = 0; e < g.nx; ++e) {
    const double x0 = g.x_min + e * h;
    const int idx[2] = {e - 1, e};  // interior indices of the element's nodes
    for (int q = 0; q < 2; ++q) {
      const double x = x0 + kGp[q] * h;
      const double w = kGw[q] * h;
      const double phi[2] = {1 - kGp[q], kGp[q]};
      const double dphi[2] = {-1 / h, 1 / h};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          if (idx[a] < 0 || idx[a] >= n || idx[b] < 0 || idx[b] >= n) continue;
          op.M(idx[a], idx[b]) += w * phi[a] * phi[b];
          op.K(idx[a], idx[b]) += w * coeffs.c(x) * dphi[a] * dphi[b];
        }
    }
  }
  return op;
}

Eigen::MatrixXd potential_matrix(const SpaceTimeGrid& g,
                                 const Coefficients& coeffs, double t) {
  const int n = g.nx - 1;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  const double h = g.dx();
  for (int e = 0; e < g.nx; ++e) {
    const double x0 = g.x_min + e * h;
    const int idx[2] = {e - 1, e};
    for (int q = 0; q < 2; ++q) {
      const double x = x0 + kGp[q] * h;
      const double w = kGw[q] * h;
      const double phi[2] = {1 - kGp[q], kGp[q]};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          if (idx[a] < 0 || idx[a] >= n || idx[b] < 0 || idx[b] >= n) continue;
          D(idx[a], idx[b]) += w * coeffs.d(x, t) * phi[a] * phi[b];
        }
    }
  }
  return D;
}

Eigen::VectorXd load_vector(const SpaceTimeGrid& g,
                            const std::function<double(double, double)>& f,
                            double t) {
  const int n = g.nx - 1;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  const double h = g.dx();
  for (int e = 0; e < g.nx; ++e) {
    const double x0 = g.x_min + e * h;
    const int idx[2] = {e - 1, e};
    for (int q = 0; q < 2; ++q) {
      const double x = x0 + kGp[q] * h;
      const double w = kGw[q] * h;
      const double phi[2] = {1 - kGp[q], kGp[q]};
      for (int a = 0; a < 2; ++a)
        if (idx[a] >= 0 && idx[a] < n) b[idx[a]] += w * f(x, t) * phi[a];
    }
  }
  return b;
}

Eigen::VectorXd project_initial(const SpaceTimeGrid& g,
                                const Coefficients& coeffs,
                                const Eigen::MatrixXd& M) {
  // L2 projection of y0 onto the interior P1 space
  Eigen::VectorXd b = load_vector(
      g, [&](double x, double) { return coeffs.y0(x); }, 0.0);
  return M.ldlt().solve(b);
}

Field pack_q1(const SpaceTimeGrid& g, const std::vector<Eigen::VectorXd>& rows) {
  Field field{make_space(BasisKind::BilinearQ1, g),
              Eigen::VectorXd::Zero((g.nx + 1) * (g.nt + 1))};
  for (int j = 0; j <= g.nt; ++j)
    for (int i = 1; i < g.nx; ++i)
      field.dofs[j * (g.nx + 1) + i] = rows[j][i - 1];
  return field;
}

}  // namespace

Field solve_forward(const SpaceTimeGrid& grid, const Coefficients& coeffs,
                    double theta) {
  if (theta < 0.5 || theta > 1.0)
    throw InvalidExtent("solve_forward: theta must be in [0.5, 1]");
  validate_coefficients(coeffs, grid);
  const auto op = spatial_operators(grid, coeffs);
  const double dt = grid.dt();

  std::vector<Eigen::VectorXd> rows(grid.nt + 1);
  rows[0] = project_initial(grid, coeffs, op.M);

  Eigen::MatrixXd A_prev = op.K + potential_matrix(grid, coeffs, 0.0);
  Eigen::VectorXd b_prev = load_vector(grid, coeffs.f, 0.0);
  for (int j = 0; j < grid.nt; ++j) {
    const double t1 = (j + 1) * dt;
    const Eigen::MatrixXd A_next = op.K + potential_matrix(grid, coeffs, t1);
    const Eigen::VectorXd b_next = load_vector(grid, coeffs.f, t1);
    const Eigen::MatrixXd lhs = op.M + theta * dt * A_next;
    const Eigen::VectorXd rhs = (op.M - (1 - theta) * dt * A_prev) * rows[j] +
                                dt * (theta * b_next + (1 - theta) * b_prev);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
    if (std::abs(lu.determinant()) < 1e-300)
      throw SingularStep("solve_forward: singular time-step matrix");
    rows[j + 1] = lu.solve(rhs);
    A_prev = A_next;
    b_prev = b_next;
  }
  return pack_q1(grid, rows);
}

ForwardMixedSolution solve_forward_mixed(const SpaceTimeGrid& grid,
                                         const Coefficients& coeffs) {
  validate_coefficients(coeffs, grid);
  const auto op = spatial_operators(grid, coeffs);
  const int n = op.n;
  const int m = grid.nx;  // P0 flux DOFs
  const double h = grid.dx();
  const double dt = grid.dt();

  // Bm = (c^{-1} u_j, u_i) is diagonal for P0
  Eigen::VectorXd Bm(m);
  for (int e = 0; e < m; ++e) {
    double v = 0;
    for (int q = 0; q < 2; ++q)
      v += kGw[q] * h / coeffs.c(grid.x_min + (e + kGp[q]) * h);
    if (!(v > 0)) throw SingularBm("solve_forward_mixed: singular flux mass");
    Bm[e] = v;
  }

  // E_{ij} = (u_j, w_i') : interior node i touches cells i and i+1
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    E(i, i) = 1.0;       // cell i, slope +1/h over width h
    E(i, i + 1) = -1.0;  // cell i+1, slope -1/h
  }

  const Eigen::MatrixXd EBE =
      E * Bm.cwiseInverse().asDiagonal() * E.transpose();

  auto flux_moments = [&](double t) {
    Eigen::VectorXd Fm(m);
    for (int e = 0; e < m; ++e) {
      double v = 0;
      for (int q = 0; q < 2; ++q) {
        const double x = grid.x_min + (e + kGp[q]) * h;
        v += kGw[q] * h * coeffs.F(x, t) / coeffs.c(x);
      }
      Fm[e] = v;
    }
    return Fm;
  };
  std::vector<Eigen::VectorXd> yrows(grid.nt + 1), prows(grid.nt + 1);
  yrows[0] = project_initial(grid, coeffs, op.M);

  Eigen::MatrixXd A_prev = EBE + potential_matrix(grid, coeffs, 0.0);
  Eigen::VectorXd g_prev =
      load_vector(grid, coeffs.f, 0.0) + E * flux_moments(0.0).cwiseQuotient(Bm);
  auto flux_row = [&](const Eigen::VectorXd& Y, double t) {
    return (E.transpose() * Y - flux_moments(t)).cwiseQuotient(Bm);
  };
  prows[0] = flux_row(yrows[0], 0.0);
  for (int j = 0; j < grid.nt; ++j) {
    const double t1 = (j + 1) * dt;
    const Eigen::MatrixXd A_next = EBE + potential_matrix(grid, coeffs, t1);
    const Eigen::VectorXd g_next =
        load_vector(grid, coeffs.f, t1) + E * flux_moments(t1).cwiseQuotient(Bm);
    const Eigen::MatrixXd lhs = op.M + 0.5 * dt * A_next;
    const Eigen::VectorXd rhs =
        (op.M - 0.5 * dt * A_prev) * yrows[j] + 0.5 * dt * (g_next + g_prev);
    yrows[j + 1] = Eigen::PartialPivLU<Eigen::MatrixXd>(lhs).solve(rhs);
    prows[j + 1] = flux_row(yrows[j + 1], t1);
    A_prev = A_next;
    g_prev = g_next;
  }

  ForwardMixedSolution sol;
  sol.y = pack_q1(grid, yrows);
  // P0-in-x flux averaged to nodes for the Q1 space-time representation
  sol.p = Field{make_space(BasisKind::BilinearQ1, grid),
                Eigen::VectorXd::Zero((grid.nx + 1) * (grid.nt + 1))};
  for (int j = 0; j <= grid.nt; ++j)
    for (int i = 0; i <= grid.nx; ++i) {
      double v;
      if (i == 0)
        v = prows[j][0];
      else if (i == grid.nx)
        v = prows[j][grid.nx - 1];
      else
        v = 0.5 * (prows[j][i - 1] + prows[j][i]);
      sol.p.dofs[j * (grid.nx + 1) + i] = v;
    }
  return sol;
}

EstimateReport verify_energy_estimate(const Field& y, const Field& p,
                                      const Coefficients& coeffs) {
  const auto& g = y.space.grid;
  const QuadratureSet q = quadrature_points(g, 3);

  double grad_sq = 0, flux_sq = 0, dual_sq = 0;
  for (const auto& pt : q.points) {
    const FieldEval ye = evaluate_field(y, pt.x, pt.t, 1);
    const FieldEval pe = evaluate_field(p, pt.x, pt.t, 0);
    grad_sq += pt.w * ye.dx * ye.dx;
    flux_sq += pt.w * pe.value * pe.value;
  }

  // dual norm of y' through the inverse diagonal-stiffness surrogate
  const int n = g.nx - 1;
  const double h = g.dx();
  Eigen::VectorXd Kdiag(n);
  for (int i = 0; i < n; ++i) {
    const double x = g.x_min + (i + 1) * h;
    Kdiag[i] = 2.0 * coeffs.c(x) / h;
  }
  for (int j = 0; j < g.nt; ++j) {
    Eigen::VectorXd v(n);
    for (int i = 1; i < g.nx; ++i)
      v[i - 1] = (y.dofs[(j + 1) * (g.nx + 1) + i] - y.dofs[j * (g.nx + 1) + i]) /
                 g.dt();
    // functional f = M v with lumped mass h
    double s = 0;
    for (int i = 0; i < n; ++i) {
      const double f = h * v[i];
      s += f * f / Kdiag[i];
    }
    dual_sq += g.dt() * s;
  }

  double y0_sq = 0, f_sq = 0, F_sq = 0;
  for (const auto& pt : q.points) {
    f_sq += pt.w * coeffs.f(pt.x, pt.t) * coeffs.f(pt.x, pt.t);
    F_sq += pt.w * coeffs.F(pt.x, pt.t) * coeffs.F(pt.x, pt.t);
  }
  for (int e = 0; e < g.nx; ++e)
    for (int qq = 0; qq < 2; ++qq) {
      const double x = g.x_min + (e + kGp[qq]) * h;
      y0_sq += kGw[qq] * h * coeffs.y0(x) * coeffs.y0(x);
    }

  EstimateReport rep;
  rep.lhs = std::sqrt(dual_sq) + std::sqrt(grad_sq) + std::sqrt(flux_sq);
  rep.rhs = std::sqrt(y0_sq) + std::sqrt(f_sq) + std::sqrt(F_sq);
  rep.ratio = rep.rhs > 1e-14 ? rep.lhs / rep.rhs : 0.0;
  return rep;
}

}  // namespace streco
