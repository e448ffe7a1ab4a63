#include "ssn/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace ssn::mtx {
namespace {

struct Header {
  bool coordinate = true;
  bool symmetric = false;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

Header parse_banner(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  std::istringstream ss(line);
  std::string tag, object, format, field, symmetry;
  ss >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || lower(object) != "matrix") {
    throw IoError(path.string() + ": missing %%MatrixMarket matrix banner");
  }
  Header h;
  format = lower(format);
  if (format == "array") {
    h.coordinate = false;
  } else if (format != "coordinate") {
    throw IoError(path.string() + ": unsupported format '" + format + "'");
  }
  field = lower(field);
  if (field != "real" && field != "double" && field != "integer") {
    throw IoError(path.string() + ": unsupported field '" + field + "'");
  }
  symmetry = lower(symmetry);
  if (symmetry == "symmetric") {
    h.symmetric = true;
  } else if (symmetry != "general") {
    throw IoError(path.string() + ": unsupported symmetry '" + symmetry + "'");
  }
  return h;
}

// Next non-comment, non-blank line.
bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '%') continue;
    return true;
  }
  return false;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const SparseMatrix& a, Symmetry sym) {
  auto out = open_out(path);
  const bool symmetric = sym == Symmetry::symmetric;
  if (symmetric) require(a.rows() == a.cols(), "write_matrix: symmetric output needs a square matrix");
  const auto off = a.row_offsets();
  const auto col = a.col_indices();
  const auto val = a.values();
  Index count = 0;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index k = off[i]; k < off[i + 1]; ++k) {
      if (!symmetric || col[k] <= i) ++count;
    }
  }
  out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << "\n";
  out << a.rows() << " " << a.cols() << " " << count << "\n";
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index k = off[i]; k < off[i + 1]; ++k) {
      if (symmetric && col[k] > i) continue;
      out << i + 1 << " " << col[k] + 1 << " " << val[k] << "\n";
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

SparseMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const Header h = parse_banner(in, path);
  std::string line;
  if (!next_data_line(in, line)) throw IoError(path.string() + ": missing size line");
  std::istringstream size_line(line);
  Index rows = 0, cols = 0, nnz = 0;
  if (h.coordinate) {
    if (!(size_line >> rows >> cols >> nnz)) throw IoError(path.string() + ": bad size line");
  } else {
    if (!(size_line >> rows >> cols)) throw IoError(path.string() + ": bad size line");
    nnz = rows * cols;
  }

  std::vector<Triplet> trips;
  trips.reserve(h.symmetric ? 2 * nnz : nnz);
  for (Index e = 0; e < nnz; ++e) {
    if (!next_data_line(in, line)) throw IoError(path.string() + ": truncated data");
    std::istringstream ss(line);
    Index i = 0, j = 0;
    double v = 0.0;
    if (h.coordinate) {
      if (!(ss >> i >> j >> v)) throw IoError(path.string() + ": bad entry '" + line + "'");
      --i;
      --j;
    } else {
      // column-major dense listing
      if (!(ss >> v)) throw IoError(path.string() + ": bad entry '" + line + "'");
      i = e % rows;
      j = e / rows;
      if (v == 0.0) continue;
    }
    if (i < 0 || i >= rows || j < 0 || j >= cols) {
      throw IoError(path.string() + ": entry index out of range");
    }
    trips.push_back({i, j, v});
    if (h.symmetric && i != j) trips.push_back({j, i, v});
  }
  return SparseMatrix::from_triplets(rows, cols, trips);
}

void write_vector(const std::filesystem::path& path, const Vector& v) {
  auto out = open_out(path);
  out << "%%MatrixMarket matrix array real general\n";
  out << v.size() << " 1\n";
  for (Index i = 0; i < v.size(); ++i) out << v[i] << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

Vector read_vector(const std::filesystem::path& path) {
  const SparseMatrix a = read_matrix(path);
  if (a.cols() != 1) throw IoError(path.string() + ": expected a single column");
  Vector v = Vector::Zero(a.rows());
  const auto off = a.row_offsets();
  const auto val = a.values();
  for (Index i = 0; i < a.rows(); ++i) {
    if (off[i + 1] > off[i]) v[i] = val[off[i]];
  }
  return v;
}

}  // namespace ssn::mtx
