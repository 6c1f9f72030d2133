#include "streco/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace streco {

int SpaceTimeGrid::locate(double x, double t) const {
  int i = static_cast<int>(std::floor((x - x_min) / dx()));
  int j = static_cast<int>(std::floor(t / dt()));
  i = std::clamp(i, 0, nx - 1);
  j = std::clamp(j, 0, nt - 1);
  return j * nx + i;
}

SpaceTimeGrid build_grid(double x_min, double x_max, double T, int nx, int nt) {
  if (!(x_min < x_max) || !(T > 0.0) || nx < 1 || nt < 1)
    throw InvalidExtent("build_grid: need x_min < x_max, T > 0, nx,nt >= 1");
  SpaceTimeGrid g;
  g.x_min = x_min;
  g.x_max = x_max;
  g.horizon = T;
  g.nx = nx;
  g.nt = nt;
  return g;
}

int FemSpace::dof_count() const {
  switch (kind) {
    case BasisKind::HermiteC1Tensor:
      return 4 * node_count();
    case BasisKind::BilinearQ1:
      return node_count();
    case BasisKind::PiecewiseConstantP0:
      return grid.cell_count();
  }
  return 0;
}

int FemSpace::dofs_per_cell() const {
  switch (kind) {
    case BasisKind::HermiteC1Tensor:
      return 16;
    case BasisKind::BilinearQ1:
      return 4;
    case BasisKind::PiecewiseConstantP0:
      return 1;
  }
  return 0;
}

int FemSpace::cell_dof(int c, int local) const {
  const int i = c % grid.nx;
  const int j = c / grid.nx;
  switch (kind) {
    case BasisKind::PiecewiseConstantP0:
      return c;
    case BasisKind::BilinearQ1: {
      const int a = local % 2;  // x corner
      const int b = local / 2;  // t corner
      return (j + b) * (grid.nx + 1) + (i + a);
    }
    case BasisKind::HermiteC1Tensor: {
      const int type = local % 4;
      const int corner = local / 4;
      const int a = corner % 2;
      const int b = corner / 2;
      const int node = (j + b) * (grid.nx + 1) + (i + a);
      return 4 * node + type;
    }
  }
  return -1;
}

std::vector<bool> FemSpace::dirichlet_mask() const {
  std::vector<bool> mask(static_cast<std::size_t>(dof_count()), false);
  if (kind == BasisKind::PiecewiseConstantP0) return mask;
  for (int j = 0; j <= grid.nt; ++j) {
    for (int i : {0, grid.nx}) {
      const int node = j * (grid.nx + 1) + i;
      if (kind == BasisKind::BilinearQ1) {
        mask[node] = true;
      } else {
        // value and t-derivative control the trace on the lateral boundary;
        // x-derivative DOFs have zero trace there already.
        mask[4 * node + 0] = true;
        mask[4 * node + 2] = true;
      }
    }
  }
  return mask;
}

void FemSpace::dof_node(int dof, double& x, double& t) const {
  int node = 0;
  switch (kind) {
    case BasisKind::HermiteC1Tensor:
      node = dof / 4;
      break;
    case BasisKind::BilinearQ1:
      node = dof;
      break;
    case BasisKind::PiecewiseConstantP0: {
      const auto c = grid.cell(dof);
      x = 0.5 * (c.x0 + c.x1);
      t = 0.5 * (c.t0 + c.t1);
      return;
    }
  }
  const int i = node % (grid.nx + 1);
  const int j = node / (grid.nx + 1);
  x = grid.x_min + i * grid.dx();
  t = j * grid.dt();
}

FemSpace make_space(BasisKind kind, const SpaceTimeGrid& grid) {
  return FemSpace{kind, grid};
}

namespace {

// Cubic Hermite shape functions on [0,1] and their derivatives.
// Column 0: value; 1: first derivative; 2: second derivative.
// Row order: H00 (value at 0), H10 (value at 1), H01 (slope at 0),
// H11 (slope at 1).
std::array<std::array<double, 3>, 4> hermite1d(double u) {
  const double u2 = u * u, u3 = u2 * u;
  return {{
      {1 - 3 * u2 + 2 * u3, -6 * u + 6 * u2, -6 + 12 * u},
      {3 * u2 - 2 * u3, 6 * u - 6 * u2, 6 - 12 * u},
      {u - 2 * u2 + u3, 1 - 4 * u + 3 * u2, -4 + 6 * u},
      {-u2 + u3, -2 * u + 3 * u2, -2 + 6 * u},
  }};
}

}  // namespace

BasisEval eval_basis(const FemSpace& space, int cell, double u, double v,
                     int max_deriv) {
  const int n = space.dofs_per_cell();
  if (max_deriv < 0)
    max_deriv = (space.kind == BasisKind::HermiteC1Tensor)  ? 2
                : (space.kind == BasisKind::BilinearQ1)     ? 1
                                                            : 0;
  if (max_deriv >= 2 && space.kind != BasisKind::HermiteC1Tensor)
    throw UnsupportedDerivative("second derivatives need a C1 space");
  if (max_deriv >= 1 && space.kind == BasisKind::PiecewiseConstantP0)
    throw UnsupportedDerivative("P0 has no derivatives");

  BasisEval e;
  e.value.setZero(n);
  e.dt.setZero(n);
  e.dx.setZero(n);
  e.dxx.setZero(n);
  const double hx = space.grid.dx();
  const double ht = space.grid.dt();
  (void)cell;

  switch (space.kind) {
    case BasisKind::PiecewiseConstantP0:
      e.value[0] = 1.0;
      break;
    case BasisKind::BilinearQ1: {
      const double xu[2] = {1 - u, u};
      const double tu[2] = {1 - v, v};
      const double dxu[2] = {-1.0 / hx, 1.0 / hx};
      const double dtu[2] = {-1.0 / ht, 1.0 / ht};
      for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a) {
          const int k = b * 2 + a;
          e.value[k] = xu[a] * tu[b];
          e.dx[k] = dxu[a] * tu[b];
          e.dt[k] = xu[a] * dtu[b];
        }
      break;
    }
    case BasisKind::HermiteC1Tensor: {
      const auto hu = hermite1d(u);
      const auto hv = hermite1d(v);
      // X factor per corner a and x-type (0: value, 1: derivative),
      // pre-scaled so that derivative DOFs are physical slopes.
      auto xfac = [&](int a, int xt, int order) {
        const int row = xt == 0 ? a : 2 + a;
        double s = hu[row][order] / std::pow(hx, order);
        if (xt == 1) s *= hx;
        return s;
      };
      auto tfac = [&](int b, int tt, int order) {
        const int row = tt == 0 ? b : 2 + b;
        double s = hv[row][order] / std::pow(ht, order);
        if (tt == 1) s *= ht;
        return s;
      };
      for (int corner = 0; corner < 4; ++corner) {
        const int a = corner % 2, b = corner / 2;
        for (int type = 0; type < 4; ++type) {
          const int xt = type == 1 || type == 3;
          const int tt = type == 2 || type == 3;
          const int k = corner * 4 + type;
          e.value[k] = xfac(a, xt, 0) * tfac(b, tt, 0);
          e.dx[k] = xfac(a, xt, 1) * tfac(b, tt, 0);
          e.dt[k] = xfac(a, xt, 0) * tfac(b, tt, 1);
          e.dxx[k] = xfac(a, xt, 2) * tfac(b, tt, 0);
        }
      }
      break;
    }
  }
  return e;
}

namespace {

struct Rule {
  std::vector<double> pts, wts;  // on [0,1]
};

Rule gauss_legendre(int order) {
  // Nodes/weights on [-1,1], mapped to [0,1].
  std::vector<double> x, w;
  switch (order) {
    case 2:
      x = {-0.5773502691896257, 0.5773502691896257};
      w = {1.0, 1.0};
      break;
    case 3:
      x = {-0.7745966692414834, 0.0, 0.7745966692414834};
      w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      break;
    case 4:
      x = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
           0.8611363115940526};
      w = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
           0.3478548451374538};
      break;
    default:
      throw UnsupportedOrder("quadrature order must be 2, 3 or 4");
  }
  Rule r;
  for (std::size_t k = 0; k < x.size(); ++k) {
    r.pts.push_back(0.5 * (x[k] + 1.0));
    r.wts.push_back(0.5 * w[k]);
  }
  return r;
}

}  // namespace

QuadratureSet quadrature_points(const SpaceTimeGrid& grid, int order) {
  const Rule r = gauss_legendre(order);
  QuadratureSet q;
  q.order = order;
  q.per_cell = order * order;
  q.points.reserve(static_cast<std::size_t>(grid.cell_count()) * q.per_cell);
  const double area = grid.dx() * grid.dt();
  for (int c = 0; c < grid.cell_count(); ++c) {
    const auto cell = grid.cell(c);
    for (int jt = 0; jt < order; ++jt)
      for (int ix = 0; ix < order; ++ix) {
        QuadPoint p;
        p.u = r.pts[ix];
        p.v = r.pts[jt];
        p.x = cell.x0 + p.u * (cell.x1 - cell.x0);
        p.t = cell.t0 + p.v * (cell.t1 - cell.t0);
        p.w = r.wts[ix] * r.wts[jt] * area;
        q.points.push_back(p);
      }
  }
  return q;
}

}  // namespace streco
