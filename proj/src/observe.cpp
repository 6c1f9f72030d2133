#include "streco/observe.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace streco {

bool snap_omega(const SpaceTimeGrid& grid, double& a, double& b) {
  const double h = grid.dx();
  auto snap = [&](double v) {
    return grid.x_min + h * std::round((v - grid.x_min) / h);
  };
  const double sa = snap(a), sb = snap(b);
  const bool moved = std::abs(sa - a) > 1e-12 || std::abs(sb - b) > 1e-12;
  a = sa;
  b = sb;
  return moved;
}

ObservationSet make_observation(const Field& truth, double omega_a,
                                double omega_b, const SpaceTimeGrid& grid,
                                int quad_order, double sigma,
                                std::uint64_t seed) {
  if (omega_a >= omega_b)
    throw DegenerateOmega("make_observation: omega_a >= omega_b");
  if (omega_a < grid.x_min - 1e-12 || omega_b > grid.x_max + 1e-12)
    throw OmegaOutsideDomain("make_observation: omega outside the domain");
  if (sigma < 0.0) throw InvalidExtent("make_observation: sigma < 0");

  ObservationSet obs;
  obs.grid = grid;
  obs.quad_order = quad_order;
  obs.sigma = sigma;
  obs.seed = seed;
  obs.omega_a = omega_a;
  obs.omega_b = omega_b;
  if (snap_omega(grid, obs.omega_a, obs.omega_b))
    std::cerr << "warning: omega snapped to cell boundaries ["
              << obs.omega_a << ", " << obs.omega_b << "]\n";
  if (obs.omega_a >= obs.omega_b)
    throw DegenerateOmega("make_observation: omega collapsed after snapping");

  const QuadratureSet q = quadrature_points(grid, quad_order);
  for (int c = 0; c < grid.cell_count(); ++c) {
    const auto cell = grid.cell(c);
    const double xm = 0.5 * (cell.x0 + cell.x1);
    if (xm > obs.omega_a && xm < obs.omega_b) obs.cells.push_back(c);
  }
  const int n = static_cast<int>(obs.cells.size()) * q.per_cell;
  obs.x.resize(n);
  obs.t.resize(n);
  obs.w.resize(n);
  obs.value.resize(n);
  int k = 0;
  for (int c : obs.cells)
    for (int j = 0; j < q.per_cell; ++j, ++k) {
      const QuadPoint& p = q.point(c, j);
      obs.x[k] = p.x;
      obs.t[k] = p.t;
      obs.w[k] = p.w;
      obs.value[k] = evaluate_field(truth, p.x, p.t).value;
    }
  if (sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (int i = 0; i < n; ++i) obs.value[i] += noise(rng);
  }
  return obs;
}

double weighted_misfit(const Field& y, const ObservationSet& obs,
                       const WeightFamily& family) {
  if (y.space.grid.nx != obs.grid.nx || y.space.grid.nt != obs.grid.nt)
    throw LayoutMismatch("weighted_misfit: field grid does not match observation layout");
  double J = 0.0;
  for (int k = 0; k < obs.sample_count(); ++k) {
    const double inv0 =
        eval_inverse_weight(family, WeightMember::Rho0, obs.x[k], obs.t[k]);
    const double diff = evaluate_field(y, obs.x[k], obs.t[k]).value - obs.value[k];
    J += 0.5 * obs.w[k] * inv0 * inv0 * diff * diff;
  }
  return J;
}

void write_observation_csv(const ObservationSet& obs, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot open " + tmp);
    out << "x,t,value\n";
    char buf[96];
    for (int k = 0; k < obs.sample_count(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", obs.x[k], obs.t[k],
                    obs.value[k]);
      out << buf;
    }
  }
  std::filesystem::rename(tmp, path);
}

ObservationSet read_observation_csv(const std::string& path,
                                    const SpaceTimeGrid& grid, double omega_a,
                                    double omega_b, int quad_order) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  // Rebuild the layout, then overwrite the values column from the file.
  Field zero{make_space(BasisKind::BilinearQ1, grid),
             Eigen::VectorXd::Zero((grid.nx + 1) * (grid.nt + 1))};
  ObservationSet obs =
      make_observation(zero, omega_a, omega_b, grid, quad_order, 0.0, 0);
  std::string line;
  std::getline(in, line);  // header
  int k = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (k >= obs.sample_count())
      throw LayoutMismatch("read_observation_csv: too many rows for layout");
    std::istringstream ss(line);
    std::string fx, ft, fv;
    std::getline(ss, fx, ',');
    std::getline(ss, ft, ',');
    std::getline(ss, fv, ',');
    obs.value[k++] = std::stod(fv);
  }
  if (k != obs.sample_count())
    throw LayoutMismatch("read_observation_csv: row count does not match layout");
  return obs;
}

}  // namespace streco
