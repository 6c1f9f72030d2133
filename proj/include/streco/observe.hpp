#ifndef STRECO_OBSERVE_HPP
#define STRECO_OBSERVE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "streco/forward.hpp"
#include "streco/weights.hpp"

namespace streco {

/// Samples of y_obs at the quadrature points of q_T = omega x (0,T).
/// The layout mirrors the reconstruction grid's quadrature exactly: for each
/// grid cell intersecting omega, `per_cell` consecutive samples in the cell's
/// quadrature order.
struct ObservationSet {
  double omega_a = 0.0, omega_b = 0.0;  // after snapping to cell boundaries
  SpaceTimeGrid grid;
  int quad_order = 3;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> cells;          // cells intersecting omega, ascending
  Eigen::VectorXd x, t, w, value;  // one entry per retained quadrature point

  int sample_count() const { return static_cast<int>(value.size()); }
};

/// Snaps [a,b] to the nearest cell boundaries of the grid's spatial mesh.
/// Returns true when snapping moved an endpoint (the caller may warn).
bool snap_omega(const SpaceTimeGrid& grid, double& a, double& b);

ObservationSet make_observation(const Field& truth, double omega_a,
                                double omega_b, const SpaceTimeGrid& grid,
                                int quad_order, double sigma,
                                std::uint64_t seed);

/// J(y) = 1/2 * sum_k w_k rho0^{-2}(x_k,t_k) (y(x_k,t_k) - obs_k)^2.
double weighted_misfit(const Field& y, const ObservationSet& obs,
                       const WeightFamily& family);

void write_observation_csv(const ObservationSet& obs, const std::string& path);
/// Reads the (x, t, value) columns into an ObservationSet whose layout is
/// rebuilt from grid/omega/order; throws LayoutMismatch when the row count
/// disagrees.
ObservationSet read_observation_csv(const std::string& path,
                                    const SpaceTimeGrid& grid, double omega_a,
                                    double omega_b, int quad_order);

}  // namespace streco

#endif
