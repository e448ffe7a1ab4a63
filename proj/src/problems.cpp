#include "ssn/problems.hpp"

#include "ssn/matrix_market.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

namespace ssn {

GridSpec GridSpec::from_level(int dim, int level) {
  require(dim == 2 || dim == 3, "GridSpec: dim must be 2 or 3");
  require(level >= 1 && level <= 12, "GridSpec: level out of range");
  GridSpec g;
  g.dim = dim;
  g.points = Index{1} << level;
  g.level = level;
  return g;
}

GridSpec GridSpec::from_points(int dim, Index points) {
  require(dim == 2 || dim == 3, "GridSpec: dim must be 2 or 3");
  require(points >= 1, "GridSpec: need at least one interior node per direction");
  GridSpec g;
  g.dim = dim;
  g.points = points;
  return g;
}

Index GridSpec::size() const {
  Index n = 1;
  for (int d = 0; d < dim; ++d) n *= points;
  return n;
}

std::array<double, 3> GridSpec::node_coords(Index node) const {
  const double hh = h();
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int d = 0; d < dim; ++d) {
    x[d] = static_cast<double>(node % points + 1) * hh;
    node /= points;
  }
  return x;
}

void ProblemInstance::validate() const {
  const Index nn = n();
  require(L.rows() == nn && L.cols() == nn, "problem: L must be square");
  require(M.rows() == nn && M.cols() == nn, "problem: M has wrong size");
  require(Mbar.rows() == nn && Mbar.cols() == nn, "problem: Mbar has wrong size");
  require(y_d.size() == nn && f.size() == nn && a.size() == nn && b.size() == nn,
          "problem: data vectors must have length n");
  require(M.is_diagonal(), "problem: M must be diagonal");
  require((M.diagonal_values().array() > 0.0).all(), "problem: M diagonal must be positive");
  require((a.array() < 0.0).all() && (b.array() > 0.0).all(), "problem: bounds must satisfy a < 0 < b");
  require(alpha > 0.0 && beta > 0.0 && c > 0.0, "problem: alpha, beta, c must be positive");
}

ProblemInstance ProblemInstance::with_alpha(double new_alpha) const {
  ProblemInstance p = *this;
  p.alpha = new_alpha;
  p.c = 1.0 / new_alpha;
  return p;
}

Wind default_wind() {
  return [](double x, double y) {
    return std::pair{2.0 * y * (1.0 - x * x), -2.0 * x * (1.0 - y * y)};
  };
}

double desired_state_at(double x, double y, std::optional<double> z) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double v = std::sin(two_pi * x) * std::sin(two_pi * y) * std::exp(2.0 * x) / 6.0;
  if (z) v *= std::sin(two_pi * *z);
  return v;
}

Vector desired_state(const GridSpec& grid) {
  Vector yd(grid.size());
  for (Index i = 0; i < yd.size(); ++i) {
    const auto x = grid.node_coords(i);
    yd[i] = grid.dim == 3 ? desired_state_at(x[0], x[1], x[2]) : desired_state_at(x[0], x[1]);
  }
  return yd;
}

namespace {

// Lexicographic neighbor of `node` along direction d, or -1 at the boundary.
Index neighbor(const GridSpec& g, Index node, int d, int step) {
  Index stride = 1;
  for (int k = 0; k < d; ++k) stride *= g.points;
  const Index coord = (node / stride) % g.points;
  const Index next = coord + step;
  if (next < 0 || next >= g.points) return -1;
  return node + step * stride;
}

}  // namespace

SparseMatrix fd_laplacian(const GridSpec& grid) {
  const Index n = grid.size();
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  std::vector<Triplet> t;
  t.reserve(n * (2 * grid.dim + 1));
  for (Index i = 0; i < n; ++i) {
    t.push_back({i, i, 2.0 * grid.dim * inv_h2});
    for (int d = 0; d < grid.dim; ++d) {
      for (int step : {-1, 1}) {
        const Index j = neighbor(grid, i, d, step);
        if (j >= 0) t.push_back({i, j, -inv_h2});
      }
    }
  }
  return SparseMatrix::from_triplets(n, n, t);
}

ProblemInstance make_poisson(const GridSpec& grid, double alpha, double beta, double a_val,
                             double b_val) {
  require(!grid.level || *grid.level >= 2, "make_poisson: level must be at least 2");
  ProblemInstance p;
  p.name = grid.dim == 3 ? "poisson3d" : "poisson2d";
  p.grid = grid;
  const Index n = grid.size();
  p.L = fd_laplacian(grid);
  p.M = SparseMatrix::identity(n);
  p.Mbar = SparseMatrix::identity(n);
  p.y_d = desired_state(grid);
  p.f = Vector::Zero(n);
  p.a = Vector::Constant(n, a_val);
  p.b = Vector::Constant(n, b_val);
  p.alpha = alpha;
  p.beta = beta;
  p.c = 1.0 / alpha;
  p.validate();
  return p;
}

ProblemInstance make_convection_diffusion(const GridSpec& grid, const CDConfig& cd, double alpha,
                                          double beta, double a_val, double b_val) {
  require(grid.dim == 2, "make_convection_diffusion: only 2D grids are supported");
  require(cd.epsilon > 0.0, "make_convection_diffusion: epsilon must be positive");
  require(cd.domain_hi > cd.domain_lo, "make_convection_diffusion: empty domain");
  const double width = cd.domain_hi - cd.domain_lo;
  const double h = grid.h() * width;  // physical spacing
  const double h2 = h * h;
  const double delta = cd.delta.value_or(h / 2.0);
  require(delta >= 0.0, "make_convection_diffusion: delta must be nonnegative");
  const Wind wind = cd.wind ? cd.wind : default_wind();
  auto physical = [&](Index i) {
    const auto x = grid.node_coords(i);
    return std::array<double, 2>{cd.domain_lo + width * x[0], cd.domain_lo + width * x[1]};
  };

  const Index n = grid.size();
  std::vector<Triplet> lt;  // h^2 * (eps * Laplacian + upwind convection)
  std::vector<Triplet> ct;  // centered convection
  lt.reserve(5 * n);
  ct.reserve(4 * n);
  Vector yd(n);
  for (Index i = 0; i < n; ++i) {
    const auto x = physical(i);
    yd[i] = desired_state_at(x[0], x[1]);
    const auto [w1, w2] = wind(x[0], x[1]);
    const double w[2] = {w1, w2};

    lt.push_back({i, i, cd.epsilon * 4.0});
    for (int d = 0; d < 2; ++d) {
      const Index lo = neighbor(grid, i, d, -1);
      const Index hi = neighbor(grid, i, d, +1);
      if (lo >= 0) lt.push_back({i, lo, -cd.epsilon});
      if (hi >= 0) lt.push_back({i, hi, -cd.epsilon});

      // backward difference for positive wind, forward for negative
      if (w[d] > 0.0) {
        lt.push_back({i, i, w[d] * h});
        if (lo >= 0) lt.push_back({i, lo, -w[d] * h});
      } else if (w[d] < 0.0) {
        lt.push_back({i, i, -w[d] * h});
        if (hi >= 0) lt.push_back({i, hi, w[d] * h});
      }

      if (hi >= 0) ct.push_back({i, hi, w[d] / (2.0 * h)});
      if (lo >= 0) ct.push_back({i, lo, -w[d] / (2.0 * h)});
    }
  }

  ProblemInstance p;
  p.name = "convdiff";
  p.grid = grid;
  p.L = SparseMatrix::from_triplets(n, n, lt);
  p.M = scale(SparseMatrix::identity(n), h2);
  const SparseMatrix C = SparseMatrix::from_triplets(n, n, ct);
  p.Mbar = add(p.M, C, 1.0, delta * h2);
  p.y_d = std::move(yd);
  p.f = Vector::Zero(n);
  p.a = Vector::Constant(n, a_val);
  p.b = Vector::Constant(n, b_val);
  p.alpha = alpha;
  p.beta = beta;
  p.c = 1.0 / alpha;
  p.validate();
  return p;
}

void export_problem(const ProblemInstance& prob, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto sym = [](const SparseMatrix& m) {
    return asymmetry(m) == 0.0 ? mtx::Symmetry::symmetric : mtx::Symmetry::general;
  };
  mtx::write_matrix(dir / "L.mtx", prob.L, sym(prob.L));
  mtx::write_matrix(dir / "M.mtx", prob.M, mtx::Symmetry::symmetric);
  mtx::write_matrix(dir / "Mbar.mtx", prob.Mbar, sym(prob.Mbar));
  mtx::write_vector(dir / "y_d.mtx", prob.y_d);
  mtx::write_vector(dir / "f.mtx", prob.f);
  mtx::write_vector(dir / "a.mtx", prob.a);
  mtx::write_vector(dir / "b.mtx", prob.b);

  nlohmann::json manifest = {
      {"name", prob.name},
      {"n", prob.n()},
      {"alpha", prob.alpha},
      {"beta", prob.beta},
      {"c", prob.c},
      {"grid", {{"dim", prob.grid.dim}, {"points", prob.grid.points}, {"h", prob.grid.h()}}},
      {"bounds", {{"a_min", prob.a.minCoeff()}, {"b_max", prob.b.maxCoeff()}}},
  };
  if (prob.grid.level) manifest["grid"]["level"] = *prob.grid.level;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

ProblemInstance import_problem(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("missing manifest.json in " + dir.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("manifest.json: ") + e.what());
  }
  ProblemInstance p;
  p.name = manifest.value("name", std::string("imported"));
  p.alpha = manifest.at("alpha").get<double>();
  p.beta = manifest.at("beta").get<double>();
  p.c = manifest.at("c").get<double>();
  const auto& g = manifest.at("grid");
  p.grid.dim = g.at("dim").get<int>();
  p.grid.points = g.at("points").get<Index>();
  if (g.contains("level")) p.grid.level = g.at("level").get<int>();
  p.L = mtx::read_matrix(dir / "L.mtx");
  p.M = mtx::read_matrix(dir / "M.mtx");
  p.Mbar = mtx::read_matrix(dir / "Mbar.mtx");
  p.y_d = mtx::read_vector(dir / "y_d.mtx");
  p.f = mtx::read_vector(dir / "f.mtx");
  p.a = mtx::read_vector(dir / "a.mtx");
  p.b = mtx::read_vector(dir / "b.mtx");
  p.validate();
  return p;
}

}  // namespace ssn
