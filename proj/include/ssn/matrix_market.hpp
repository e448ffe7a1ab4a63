#pragma once

// Matrix Market import/export: coordinate real general/symmetric matrices,
// vectors as dense array files (coordinate vector files are accepted too).

#include "ssn/sparse.hpp"

#include <filesystem>

namespace ssn::mtx {

enum class Symmetry { general, symmetric };

/// Writes a coordinate real file. With Symmetry::symmetric only the lower
/// triangle is written; the caller guarantees the matrix is symmetric.
void write_matrix(const std::filesystem::path& path, const SparseMatrix& a,
                  Symmetry sym = Symmetry::general);
SparseMatrix read_matrix(const std::filesystem::path& path);

void write_vector(const std::filesystem::path& path, const Vector& v);
Vector read_vector(const std::filesystem::path& path);

}  // namespace ssn::mtx
