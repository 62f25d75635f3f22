#pragma once

#include "porobiot/fem.hpp"
#include "porobiot/linalg.hpp"
#include "porobiot/physics.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace porobiot {

/// Bilinear forms of the fully discrete problem in full (unconstrained) spaces.
struct BiotOperators {
    SparseMatrix A_e;  // 2 mu <eps(u) : eps(z)>              P1V x P1V
    SparseMatrix D;    // <div u, div z>                      P1V x P1V
    SparseMatrix B_up; // <p, div z>                          P1V x P0
    SparseMatrix M_q;  // nu_f <K^{-1} q, v>                  RT0 x RT0
    SparseMatrix B_qp; // <div q, w>                          P0 x RT0
    SparseMatrix M_p;  // <p, w>                              P0 x P0
};

struct MechanicsOperators {
    SparseMatrix A_e, D, B_up;
};
struct FlowOperators {
    SparseMatrix M_q, B_qp, M_p;
};

MechanicsOperators assemble_mechanics(const DofMap& p1v, const DofMap& p0, const MaterialModel& mat);
/// Throws AssumptionError when K <= 0 at a quadrature point.
FlowOperators assemble_flow(const DofMap& rt0, const DofMap& p0, const MaterialModel& mat);

struct NonlinearRhs {
    Vector bp; // <b(p_h), w>, P0 dual
    Vector hu; // <h(div u_h), div z>, P1V dual
    // Law evaluations outside the laws' admissible ranges.
    std::size_t out_of_range = 0;
};

/// Exact assembly: p_h and div u_h are cellwise constant.
NonlinearRhs assemble_nonlinear_rhs(const Vector& u, const Vector& p, const BiotOperators& ops, const MaterialModel& mat);

struct Loads {
    Vector f; // <f, z> plus tied plate loads, P1V dual
    Vector g; // <rho_f g, v> - int p_bar v.n, RT0 dual
    Vector s; // <S_f, w>, P0 dual
};

/// Essential constraints for one field. Free DOFs get their own reduced
/// index, tied DOFs share the index of their group master, fixed DOFs are
/// eliminated (reduced index -1).
class FieldConstraints {
  public:
    FieldConstraints() = default;
    explicit FieldConstraints(std::size_t n_full);

    void fix(std::size_t dof);
    void tie(std::size_t dof, std::size_t group);
    /// Finalizes numbering; throws ConfigurationError on tie/fix conflicts.
    void finalize();

    [[nodiscard]] std::size_t n_full() const noexcept { return state_.size(); }
    [[nodiscard]] std::size_t n_reduced() const noexcept { return n_reduced_; }
    [[nodiscard]] int reduced_index(std::size_t dof) const { return reduced_.at(dof); }
    [[nodiscard]] bool is_fixed(std::size_t dof) const { return reduced_.at(dof) < 0; }
    [[nodiscard]] const std::vector<std::size_t>& fixed_dofs() const noexcept { return fixed_; }
    /// Members of each tied group, master first.
    [[nodiscard]] const std::vector<std::vector<std::size_t>>& tied_groups() const noexcept { return groups_; }
    /// n_full x n_reduced prolongation with unit entries.
    [[nodiscard]] const SparseMatrix& prolongation() const noexcept { return t_; }

    [[nodiscard]] Vector restrict_dual(const Vector& full) const;
    [[nodiscard]] Vector expand(const Vector& reduced, const Vector& fixed_values) const;
    [[nodiscard]] Vector reduce_primal(const Vector& full) const;

  private:
    // -1 free, -2 fixed, >= 0 tie group
    std::vector<int> state_;
    std::vector<int> reduced_;
    std::vector<std::size_t> fixed_;
    std::vector<std::vector<std::size_t>> groups_;
    std::size_t n_reduced_ = 0;
    SparseMatrix t_;
};

/// T_row^T A T_col.
SparseMatrix reduce(const SparseMatrix& a, const FieldConstraints& rows, const FieldConstraints& cols);

/// Everything fixed by the mesh, material and boundary-condition layout.
struct Discretization {
    std::shared_ptr<const Mesh> mesh;
    std::shared_ptr<const DofMap> p1v;
    std::shared_ptr<const DofMap> rt0;
    std::shared_ptr<const DofMap> p0;
    BiotOperators ops;
    SparseMatrix mass_u; // plain L2 masses used for increment and error norms
    SparseMatrix mass_q;
    FieldConstraints u_constraints;
    FieldConstraints q_constraints;
    FieldConstraints p_constraints; // always unconstrained
};

/// Builds DOF maps, operators and constraint structure. Throws
/// ConfigurationError on conflicting constraints.
Discretization discretize(std::shared_ptr<const Mesh> mesh, const MaterialModel& mat, const ProblemDefinition& problem);

struct EssentialValues {
    Vector u; // full P1V vector, nonzero only on fixed DOFs
    Vector q; // full RT0 vector, nonzero only on fixed DOFs
};

EssentialValues essential_values(const Discretization& disc, const ProblemDefinition& problem, double t);

/// Right-hand sides at time t: degree-4 quadrature for f and S_f.
Loads assemble_loads(const Discretization& disc, const ProblemDefinition& problem, const MaterialModel& mat, double t);

/// Full-space block system over fields with constraints, reduced by symmetric
/// elimination: K~_ij = T_i^T A_ij T_j and rhs~_i = T_i^T (rhs_i - sum_j A_ij g_j).
BlockSystem apply_essential_bc(const std::vector<std::vector<const SparseMatrix*>>& blocks,
                               const std::vector<Vector>& rhs,
                               const std::vector<const FieldConstraints*>& constraints,
                               const std::vector<Vector>& fixed_values);

/// Optional operator dump for external verification.
void write_operator(std::ostream& out, const SparseMatrix& a);

} // namespace porobiot
