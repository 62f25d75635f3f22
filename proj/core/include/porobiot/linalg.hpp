#pragma once

#include "porobiot/sparse.hpp"

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace porobiot {

/// Consecutive field blocks of a global vector, e.g. (u | q | p).
class BlockLayout {
  public:
    BlockLayout() = default;
    explicit BlockLayout(std::vector<std::size_t> sizes);

    [[nodiscard]] std::size_t num_blocks() const noexcept { return sizes_.size(); }
    [[nodiscard]] std::size_t size(std::size_t block) const { return sizes_.at(block); }
    [[nodiscard]] std::size_t offset(std::size_t block) const { return offsets_.at(block); }
    [[nodiscard]] std::size_t total() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }

  private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
};

struct BlockSystem {
    BlockLayout layout;
    SparseMatrix matrix;
    Vector rhs;

    [[nodiscard]] Eigen::VectorBlock<Vector> slice(Vector& v, std::size_t block) const;
    [[nodiscard]] Eigen::VectorBlock<const Vector> slice(const Vector& v, std::size_t block) const;
};

/// Assembles a block matrix from a row-major grid of optional blocks; null
/// entries are zero blocks.
SparseMatrix assemble_blocks(const BlockLayout& layout, const std::vector<std::vector<const SparseMatrix*>>& blocks);

struct SolverReport {
    std::string method;
    int iterations = 0;
    double relative_residual = 0.0;
    double seconds = 0.0;
    bool converged = false;
    std::string status;
    // Relative (preconditioned) residual after each Krylov iteration.
    std::vector<double> residual_history;
};

/// Sparse direct factorization, reusable across right-hand sides.
class Factorization {
  public:
    enum class Kind { LU, Cholesky };

    Factorization(const SparseMatrix& a, Kind kind = Kind::LU);
    ~Factorization();
    Factorization(Factorization&&) noexcept;
    Factorization& operator=(Factorization&&) noexcept;

    [[nodiscard]] Vector solve(const Vector& b) const;
    [[nodiscard]] std::size_t rows() const noexcept { return n_; }

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::size_t n_ = 0;
};

/// Direct solve with a residual check against the stored matrix.
std::pair<Vector, SolverReport> lu_solve(const BlockSystem& system);

using LinearOperator = std::function<Vector(const Vector&)>;

struct GmresOptions {
    int restart = 50;
    double tol = 1e-10;
    int max_iterations = 1000;
};

/// Left-preconditioned restarted GMRES with modified Gram-Schmidt. The
/// convergence test uses the preconditioned residual relative to the
/// preconditioned right-hand side.
std::pair<Vector, SolverReport> gmres(const SparseMatrix& a,
                                      const Vector& b,
                                      const LinearOperator& preconditioner,
                                      const GmresOptions& options = {},
                                      const Vector* initial_guess = nullptr);

/// One linearized splitting sweep on a (u | q | p) residual: the flow block
/// [M_q, -B_qp^T; tau B_qp, L1 M_p] is solved first, then the mechanics block
/// (A_e + L2 D) with the updated pressure fed through the coupling block.
class FixedStressPreconditioner {
  public:
    /// `coupling` is the (u, p) block of the system matrix, i.e. -alpha B_up.
    FixedStressPreconditioner(const SparseMatrix& mechanics,
                              const SparseMatrix& coupling,
                              const SparseMatrix& flow,
                              std::size_t n_u,
                              std::size_t n_q,
                              std::size_t n_p);

    [[nodiscard]] Vector apply(const Vector& residual) const;
    [[nodiscard]] LinearOperator as_operator() const;

  private:
    std::shared_ptr<const Factorization> mechanics_;
    std::shared_ptr<const Factorization> flow_;
    SparseMatrix coupling_;
    std::size_t n_u_, n_q_, n_p_;
};

} // namespace porobiot
