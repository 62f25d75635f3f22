#include "porobiot/linalg.hpp"

#include "porobiot/errors.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>

namespace porobiot {

BlockLayout::BlockLayout(std::vector<std::size_t> sizes) : sizes_(std::move(sizes))
{
    offsets_.reserve(sizes_.size() + 1);
    offsets_.push_back(0);
    for (auto s : sizes_) offsets_.push_back(offsets_.back() + s);
}

Eigen::VectorBlock<Vector> BlockSystem::slice(Vector& v, std::size_t block) const
{
    return v.segment(static_cast<Eigen::Index>(layout.offset(block)), static_cast<Eigen::Index>(layout.size(block)));
}

Eigen::VectorBlock<const Vector> BlockSystem::slice(const Vector& v, std::size_t block) const
{
    return v.segment(static_cast<Eigen::Index>(layout.offset(block)), static_cast<Eigen::Index>(layout.size(block)));
}

SparseMatrix assemble_blocks(const BlockLayout& layout, const std::vector<std::vector<const SparseMatrix*>>& blocks)
{
    std::vector<Triplet> trip;
    std::size_t nnz = 0;
    for (const auto& row : blocks) {
        for (const auto* b : row) nnz += b ? static_cast<std::size_t>(b->nonZeros()) : 0;
    }
    trip.reserve(nnz);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        for (std::size_t j = 0; j < blocks[i].size(); ++j) {
            const SparseMatrix* b = blocks[i][j];
            if (!b) continue;
            if (static_cast<std::size_t>(b->rows()) != layout.size(i) ||
                static_cast<std::size_t>(b->cols()) != layout.size(j)) {
                throw InputError("block dimensions do not match the layout");
            }
            const int r0 = static_cast<int>(layout.offset(i)), c0 = static_cast<int>(layout.offset(j));
            for (int k = 0; k < b->outerSize(); ++k) {
                for (SparseMatrix::InnerIterator it(*b, k); it; ++it) trip.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
            }
        }
    }
    return from_triplets(layout.total(), layout.total(), trip);
}

struct Factorization::Impl {
    Kind kind;
    // Equilibration: the factorized matrix is diag(row) A diag(col).
    Vector row, col;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

Factorization::Factorization(const SparseMatrix& a, Kind kind) : impl_(std::make_unique<Impl>()), n_(static_cast<std::size_t>(a.rows()))
{
    if (a.rows() != a.cols()) throw FactorizationError("matrix is not square");
    impl_->kind = kind;
    const auto n = a.rows();
    impl_->row = Vector::Ones(n);
    impl_->col = Vector::Ones(n);
    Eigen::SparseMatrix<double> scaled(a);
    // Ruiz equilibration; symmetric for Cholesky so the scaled matrix stays SPD.
    for (int sweep = 0; sweep < 20; ++sweep) {
        Vector rmax = Vector::Zero(n), cmax = Vector::Zero(n);
        for (int k = 0; k < scaled.outerSize(); ++k) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(scaled, k); it; ++it) {
                const double v = std::abs(it.value());
                rmax[it.row()] = std::max(rmax[it.row()], v);
                cmax[it.col()] = std::max(cmax[it.col()], v);
            }
        }
        if (((rmax.array() - 1.0).abs().maxCoeff() < 1e-2) && ((cmax.array() - 1.0).abs().maxCoeff() < 1e-2)) break;
        Vector dr(n), dc(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (kind == Kind::Cholesky) {
                dr[i] = dc[i] = rmax[i] > 0.0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
            } else {
                dr[i] = rmax[i] > 0.0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
                dc[i] = cmax[i] > 0.0 ? 1.0 / std::sqrt(cmax[i]) : 1.0;
            }
        }
        scaled = dr.asDiagonal() * scaled * dc.asDiagonal();
        impl_->row.array() *= dr.array();
        impl_->col.array() *= dc.array();
    }
    if (kind == Kind::LU) {
        impl_->lu.analyzePattern(scaled);
        impl_->lu.factorize(scaled);
        if (impl_->lu.info() != Eigen::Success) throw FactorizationError("sparse LU failed: " + impl_->lu.lastErrorMessage());
    } else {
        impl_->ldlt.compute(scaled);
        if (impl_->ldlt.info() != Eigen::Success) throw FactorizationError("sparse LDLT failed (matrix not positive definite?)");
    }
}

Factorization::~Factorization() = default;
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;

Vector Factorization::solve(const Vector& b) const
{
    if (static_cast<std::size_t>(b.size()) != n_) throw InputError("right-hand side has the wrong size");
    const Vector sb = impl_->row.cwiseProduct(b);
    Vector x = impl_->kind == Kind::LU ? Vector(impl_->lu.solve(sb)) : Vector(impl_->ldlt.solve(sb));
    x = impl_->col.cwiseProduct(x);
    if (!x.allFinite()) throw FactorizationError("direct solve produced non-finite values (singular pivot)");
    return x;
}

std::pair<Vector, SolverReport> lu_solve(const BlockSystem& system)
{
    const auto start = std::chrono::steady_clock::now();
    Factorization f(system.matrix, Factorization::Kind::LU);
    Vector x = f.solve(system.rhs);
    SolverReport rep;
    rep.method = "lu";
    rep.iterations = 1;
    const double bn = system.rhs.norm();
    const double rn = (system.matrix * x - system.rhs).norm();
    rep.relative_residual = bn > 0.0 ? rn / bn : rn;
    rep.converged = true;
    rep.status = "converged";
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(x), rep};
}

std::pair<Vector, SolverReport> gmres(const SparseMatrix& a,
                                      const Vector& b,
                                      const LinearOperator& preconditioner,
                                      const GmresOptions& options,
                                      const Vector* initial_guess)
{
    const auto start = std::chrono::steady_clock::now();
    const auto n = b.size();
    auto precond = [&](const Vector& v) { return preconditioner ? preconditioner(v) : v; };

    SolverReport rep;
    rep.method = preconditioner ? "gmres+pc" : "gmres";
    Vector x = initial_guess ? *initial_guess : Vector::Zero(n);
    const double bnorm = precond(b).norm();
    if (bnorm == 0.0) {
        rep.converged = true;
        rep.status = "converged";
        return {Vector::Zero(n), rep};
    }

    const int m = std::max(1, options.restart);
    Eigen::MatrixXd basis(n, m + 1);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m + 1, m);
    Vector cs(m), sn(m), g(m + 1);

    Vector r = precond(b - a * x);
    double beta = r.norm();
    rep.relative_residual = beta / bnorm;
    double cycle_start_residual = beta;

    while (true) {
        if (rep.relative_residual <= options.tol) {
            rep.converged = true;
            rep.status = "converged";
            break;
        }
        if (rep.iterations >= options.max_iterations) {
            rep.status = "max_iterations";
            break;
        }
        basis.col(0) = r / beta;
        g.setZero();
        g[0] = beta;
        hess.setZero();
        int j = 0;
        bool happy = false;
        for (; j < m && rep.iterations < options.max_iterations; ++j) {
            Vector w = precond(a * basis.col(j));
            for (int i = 0; i <= j; ++i) {
                hess(i, j) = w.dot(basis.col(i));
                w -= hess(i, j) * basis.col(i);
            }
            hess(j + 1, j) = w.norm();
            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * hess(i, j) + sn[i] * hess(i + 1, j);
                hess(i + 1, j) = -sn[i] * hess(i, j) + cs[i] * hess(i + 1, j);
                hess(i, j) = t;
            }
            const double denom = std::hypot(hess(j, j), hess(j + 1, j));
            const double sub = hess(j + 1, j);
            cs[j] = denom > 0.0 ? hess(j, j) / denom : 1.0;
            sn[j] = denom > 0.0 ? sub / denom : 0.0;
            hess(j, j) = denom;
            hess(j + 1, j) = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            ++rep.iterations;
            const double rel = std::abs(g[j + 1]) / bnorm;
            rep.residual_history.push_back(rel);
            if (sub <= 1e-14 * beta) {
                happy = true;
                ++j;
                break;
            }
            if (rel <= options.tol) {
                ++j;
                break;
            }
            basis.col(j + 1) = w / sub;
        }
        if (j > 0) {
            const Vector y = hess.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
            x += basis.leftCols(j) * y;
        }
        r = precond(b - a * x);
        beta = r.norm();
        rep.relative_residual = beta / bnorm;
        if (happy && rep.relative_residual > options.tol) {
            rep.status = "breakdown";
            break;
        }
        if (!(beta < cycle_start_residual)) {
            rep.status = "stagnation";
            break;
        }
        cycle_start_residual = beta;
    }
    if (rep.converged) rep.status = "converged";
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(x), rep};
}

FixedStressPreconditioner::FixedStressPreconditioner(const SparseMatrix& mechanics,
                                                     const SparseMatrix& coupling,
                                                     const SparseMatrix& flow,
                                                     std::size_t n_u,
                                                     std::size_t n_q,
                                                     std::size_t n_p)
    : mechanics_(std::make_shared<Factorization>(mechanics, Factorization::Kind::Cholesky)),
      flow_(std::make_shared<Factorization>(flow, Factorization::Kind::LU)),
      coupling_(coupling),
      n_u_(n_u),
      n_q_(n_q),
      n_p_(n_p)
{
    if (static_cast<std::size_t>(coupling.rows()) != n_u || static_cast<std::size_t>(coupling.cols()) != n_p) {
        throw InputError("coupling block has the wrong shape");
    }
}

Vector FixedStressPreconditioner::apply(const Vector& residual) const
{
    const auto nu = static_cast<Eigen::Index>(n_u_);
    const auto nf = static_cast<Eigen::Index>(n_q_ + n_p_);
    Vector out(residual.size());
    const Vector flow = flow_->solve(residual.segment(nu, nf));
    out.segment(nu, nf) = flow;
    const Vector dp = flow.tail(static_cast<Eigen::Index>(n_p_));
    out.head(nu) = mechanics_->solve(residual.head(nu) - coupling_ * dp);
    return out;
}

LinearOperator FixedStressPreconditioner::as_operator() const
{
    return [self = *this](const Vector& r) { return self.apply(r); };
}

} // namespace porobiot
