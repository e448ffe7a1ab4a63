#pragma once

// Discretized control problems: finite-difference Poisson control in 2D/3D
// and a stabilized finite-difference convection-diffusion problem.

#include "ssn/sparse.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace ssn {

/// Uniform grid of interior nodes on the unit square/cube.
struct GridSpec {
  int dim = 2;
  /// Interior nodes per coordinate direction; h = 1/(points + 1).
  Index points = 4;
  /// Refinement level when the grid was built from one (points = 2^level).
  std::optional<int> level;

  static GridSpec from_level(int dim, int level);
  static GridSpec from_points(int dim, Index points);

  double h() const { return 1.0 / static_cast<double>(points + 1); }
  Index size() const;
  /// Coordinates of the node with lexicographic index `node` (x fastest).
  std::array<double, 3> node_coords(Index node) const;
};

/// Discretized problem data: state equation L y - Mbar u = f with diagonal
/// mass matrix M, tracking target y_d, box bounds [a, b], regularization
/// weights alpha (L2) and beta (L1), complementarity scaling c.
struct ProblemInstance {
  std::string name;
  GridSpec grid;
  SparseMatrix L;
  SparseMatrix M;
  SparseMatrix Mbar;
  Vector y_d;
  Vector f;
  Vector a;
  Vector b;
  double alpha = 1.0;
  double beta = 0.0;
  double c = 1.0;

  Index n() const { return L.rows(); }
  /// Diagonal of M.
  Vector mass() const { return M.diagonal_values(); }

  /// Checks dimensions, a < 0 < b, M diagonal positive, alpha/beta/c > 0.
  /// Throws ContractViolation.
  void validate() const;

  /// Replaces alpha and resets c = 1/alpha.
  ProblemInstance with_alpha(double new_alpha) const;
};

using Wind = std::function<std::pair<double, double>(double x, double y)>;

struct CDConfig {
  double epsilon = 1.0;
  /// Defaults to w = (2y(1-x^2), -2x(1-y^2)).
  Wind wind;
  /// Stabilization weight of the convection correction in Mbar; h/2 when unset.
  std::optional<double> delta;
  /// Square domain (lo, hi)^2; the unit grid is mapped onto it.
  double domain_lo = 0.0;
  double domain_hi = 1.0;
};

Wind default_wind();

/// sin(2 pi x) sin(2 pi y) exp(2x) / 6 in 2D, times sin(2 pi z) in 3D.
double desired_state_at(double x, double y, std::optional<double> z = std::nullopt);
Vector desired_state(const GridSpec& grid);

/// Standard (2d+1)-point Laplacian scaled by 1/h^2 on interior nodes,
/// homogeneous Dirichlet boundary eliminated.
SparseMatrix fd_laplacian(const GridSpec& grid);

/// L = FD Laplacian, M = Mbar = I, f = 0, constant bounds, c = 1/alpha.
ProblemInstance make_poisson(const GridSpec& grid, double alpha, double beta,
                             double a_val = -30.0, double b_val = 30.0);

/// 2D only. L = h^2 (eps * Laplacian + upwind w.grad), M = h^2 I,
/// Mbar = M + delta h^2 C with C the centered convection matrix.
ProblemInstance make_convection_diffusion(const GridSpec& grid, const CDConfig& cd,
                                          double alpha, double beta, double a_val = -20.0,
                                          double b_val = 20.0);

/// Writes L.mtx, M.mtx, Mbar.mtx, y_d.mtx, f.mtx, a.mtx, b.mtx and
/// manifest.json into `dir` (created if missing).
void export_problem(const ProblemInstance& prob, const std::filesystem::path& dir);
ProblemInstance import_problem(const std::filesystem::path& dir);

}  // namespace ssn
