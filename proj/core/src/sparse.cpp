#include "porobiot/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace porobiot {

SparseMatrix from_triplets(std::size_t rows, std::size_t cols, const std::vector<Triplet>& entries)
{
    SparseMatrix a(static_cast<int>(rows), static_cast<int>(cols));
    a.setFromTriplets(entries.begin(), entries.end());
    a.makeCompressed();
    return a;
}

double max_asymmetry(const SparseMatrix& a)
{
    if (a.rows() != a.cols()) return INFINITY;
    const SparseMatrix at = a.transpose();
    const SparseMatrix diff = a - at;
    double worst = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    }
    return worst;
}

bool is_symmetric(const SparseMatrix& a, double tol)
{
    double scale = 0.0;
    for (int k = 0; k < a.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
    }
    return max_asymmetry(a) <= tol * std::max(scale, 1.0);
}

void write_coo(std::ostream& out, const SparseMatrix& a)
{
    const auto old = out.precision(17);
    for (int k = 0; k < a.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
    out.precision(old);
}

} // namespace porobiot
