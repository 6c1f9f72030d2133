#ifndef STRECO_GRID_HPP
#define STRECO_GRID_HPP

#include <Eigen/Core>
#include <vector>

#include "streco/errors.hpp"

namespace streco {

/// Uniform tensor-product mesh of Q_T = (x_min,x_max) x (0,T).
/// Cell (i,j) spans [x_i, x_{i+1}] x [t_j, t_{j+1}], linearized as j*nx + i.
struct SpaceTimeGrid {
  double x_min = 0.0;
  double x_max = 1.0;
  double horizon = 1.0;  // T
  int nx = 1;
  int nt = 1;

  double dx() const { return (x_max - x_min) / nx; }
  double dt() const { return horizon / nt; }
  int cell_count() const { return nx * nt; }

  struct Cell {
    double x0, x1, t0, t1;
  };
  Cell cell(int i, int j) const {
    return {x_min + i * dx(), x_min + (i + 1) * dx(), j * dt(), (j + 1) * dt()};
  }
  Cell cell(int c) const { return cell(c % nx, c / nx); }

  /// Cell containing (x,t), clamped to the grid.
  int locate(double x, double t) const;
};

SpaceTimeGrid build_grid(double x_min, double x_max, double T, int nx, int nt);

enum class BasisKind { HermiteC1Tensor, BilinearQ1, PiecewiseConstantP0 };

/// Finite-element space on a SpaceTimeGrid.
///
/// Degrees of freedom:
///  - HermiteC1Tensor: 4 per node (value, d/dx, d/dt, d2/dxdt), C^1 in both
///    variables. Node n = j*(nx+1)+i carries global DOFs 4n..4n+3.
///  - BilinearQ1: 1 per node, continuous.
///  - PiecewiseConstantP0: 1 per cell.
struct FemSpace {
  BasisKind kind;
  SpaceTimeGrid grid;

  int node_count() const { return (grid.nx + 1) * (grid.nt + 1); }
  int dof_count() const;
  int dofs_per_cell() const;
  /// Global index of local DOF `local` of cell `c`.
  int cell_dof(int c, int local) const;
  /// true for DOFs constrained to zero by the lateral Dirichlet condition.
  std::vector<bool> dirichlet_mask() const;
  /// Space-time location of the node carrying a given DOF.
  void dof_node(int dof, double& x, double& t) const;
};

FemSpace make_space(BasisKind kind, const SpaceTimeGrid& grid);

/// Basis values and derivatives at one reference point, one row per local DOF.
struct BasisEval {
  Eigen::VectorXd value, dt, dx, dxx;
};

/// Evaluates the local basis of `space` at reference point (u,v) in [0,1]^2.
/// max_deriv in {0,1,2}; requesting derivatives the space cannot provide
/// throws UnsupportedDerivative.
BasisEval eval_basis(const FemSpace& space, int cell, double u, double v,
                     int max_deriv = -1);

struct QuadPoint {
  double x, t, w;
  double u, v;  // reference coordinates within the cell
};

/// Tensor Gauss-Legendre rule, `per_cell` points per cell, cell-major order.
struct QuadratureSet {
  int order = 3;
  int per_cell = 9;
  std::vector<QuadPoint> points;

  const QuadPoint& point(int cell, int k) const {
    return points[static_cast<std::size_t>(cell) * per_cell + k];
  }
};

QuadratureSet quadrature_points(const SpaceTimeGrid& grid, int order);

}  // namespace streco

#endif
