#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace porobiot {

/// Compressed row storage; columns within a row are sorted and unique once
/// the matrix is compressed.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Vector = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double, int>;

SparseMatrix from_triplets(std::size_t rows, std::size_t cols, const std::vector<Triplet>& entries);

/// max |A_ij - A_ji| over stored entries.
double max_asymmetry(const SparseMatrix& a);

/// Symmetry check relative to the largest stored magnitude.
bool is_symmetric(const SparseMatrix& a, double tol = 1e-12);

/// Coordinate text dump, one "row col value" line per stored entry.
void write_coo(std::ostream& out, const SparseMatrix& a);

} // namespace porobiot
