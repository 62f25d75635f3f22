#pragma once

#include "porobiot/assembly.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace porobiot {

enum class SchemeKind { Splitting, Monolithic };

SchemeKind parse_scheme_kind(const std::string& id);
std::string to_string(SchemeKind kind);

enum class LinearSolverKind {
    Direct,
    // Monolithic only: GMRES preconditioned by one linearized splitting sweep.
    Gmres,
};

struct SchemeConfig {
    SchemeKind kind = SchemeKind::Splitting;
    double L1 = 1.0;
    double L2 = 1.0;
    double tol = 1e-8;
    int max_iter = 500;
    double divergence_factor = 1e6;
    LinearSolverKind linear = LinearSolverKind::Direct;
    GmresOptions gmres;
    // Stabilization of the preconditioner's flow block; L1 when unset.
    std::optional<double> preconditioner_L1;

    /// Throws InputError on negative L, non-positive tol or caps.
    void validate() const;
};

struct TheoremFlags {
    bool splitting_safe = false;  // L1 >= L_b and L2 >= L_h + alpha^2 / b_m
    bool monolithic_safe = false; // L1 >= L_b / 2 and L2 >= L_h

    [[nodiscard]] bool safe_for(SchemeKind kind) const { return kind == SchemeKind::Splitting ? splitting_safe : monolithic_safe; }
};

TheoremFlags theorem_flags(double L1, double L2, const LawConstants& c, double alpha);

enum class LPreset {
    Undrained,     // L1 = 1/M, L2 = lambda + M alpha^2
    Practical,     // L1 = L_b, L2 = L_h
    OptimalLinear, // L1 = 1/M, L2 = lambda + M alpha^2 / 2
    TheoremSafe,   // smallest (L1, L2) meeting the scheme's convergence condition
};

LPreset parse_l_preset(const std::string& id);

struct LPair {
    double L1;
    double L2;
};

LPair preset_l(LPreset preset, SchemeKind kind, const MaterialModel& mat, const LawConstants& c);

/// (u, q, p) at one time level.
struct BiotState {
    FeFunction u;
    FeFunction q;
    FeFunction p;
    double time = 0.0;
};

BiotState initial_state(const Discretization& disc, const ProblemDefinition& problem);

struct IterationRecord {
    int iter = 0;
    double dp = 0.0;
    double dq = 0.0;
    double du = 0.0;
    double sum = 0.0;
    double rate = 0.0; // sum_i / sum_{i-1}; 0 for the first iteration
    SolverReport linear;
};

struct IterationTrace {
    int step = 0;
    std::vector<IterationRecord> records;
    int iterations = 0;
    bool converged = false;
    // converged | max_iter | diverged | non_finite
    std::string status;
    std::size_t out_of_range = 0;
    std::vector<std::string> warnings;
    LawConstants constants;
    TheoremFlags flags;
};

/// Right-hand-side data of one backward Euler step, fixed across iterations.
struct StepData {
    double time = 0.0;
    Loads loads;
    EssentialValues fixed;
    // b(p^{n-1}) + alpha div u^{n-1}, tested with P0
    Vector storage_prev;
};

/// Reduced operators and factorizations of one scheme, reusable across
/// iterations and time steps for a fixed (mesh, material, L1, L2, tau).
class SchemeSolver {
  public:
    SchemeSolver(std::shared_ptr<const Discretization> disc, MaterialModel mat, SchemeConfig cfg, double tau);

    [[nodiscard]] StepData prepare(const ProblemDefinition& problem, const BiotState& prev, double t) const;

    /// One iteration from `cur`; `report` receives the linear-solve statistics.
    [[nodiscard]] BiotState iterate(const StepData& data, const BiotState& cur, SolverReport* report = nullptr) const;

    [[nodiscard]] const Discretization& discretization() const noexcept { return *disc_; }
    [[nodiscard]] const std::shared_ptr<const Discretization>& discretization_ptr() const noexcept { return disc_; }
    [[nodiscard]] const MaterialModel& material() const noexcept { return mat_; }
    [[nodiscard]] const SchemeConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] double tau() const noexcept { return tau_; }

    /// Reduced monolithic (u | q | p) system matrix with the configured L1, L2.
    [[nodiscard]] const SparseMatrix& monolithic_matrix() const;
    /// Reduced monolithic right-hand side at iterate `cur`.
    [[nodiscard]] Vector monolithic_rhs(const StepData& data, const BiotState& cur) const;
    [[nodiscard]] BlockLayout monolithic_layout() const;
    [[nodiscard]] FixedStressPreconditioner make_preconditioner() const;

  private:
    struct Cache;
    BiotState split_step(const StepData& data, const BiotState& cur, SolverReport* report) const;
    BiotState monolithic_step(const StepData& data, const BiotState& cur, SolverReport* report) const;
    BiotState assemble_state(const StepData& data, const Vector& u, const Vector& q, const Vector& p) const;

    std::shared_ptr<const Discretization> disc_;
    MaterialModel mat_;
    SchemeConfig cfg_;
    double tau_;
    std::shared_ptr<const Cache> cache_;
};

/// Single iterations; each call builds its own solver.
BiotState splitting_iteration(const std::shared_ptr<const Discretization>& disc,
                              const MaterialModel& mat,
                              const ProblemDefinition& problem,
                              const SchemeConfig& cfg,
                              double tau,
                              const BiotState& prev,
                              const BiotState& cur);
BiotState monolithic_iteration(const std::shared_ptr<const Discretization>& disc,
                               const MaterialModel& mat,
                               const ProblemDefinition& problem,
                               const SchemeConfig& cfg,
                               double tau,
                               const BiotState& prev,
                               const BiotState& cur);

struct Increments {
    double dp, dq, du;
};

Increments increment_norms(const Discretization& disc, const BiotState& a, const BiotState& b);

using IterateObserver = std::function<void(int iter, const BiotState& state)>;

/// Iterates from the previous converged state until the increment sum drops
/// below tol, max_iter is hit, or the sum exceeds divergence_factor times its
/// first value. Non-convergence is reported in the trace, not thrown.
std::pair<BiotState, IterationTrace> iterate_to_convergence(const SchemeSolver& solver,
                                                            const StepData& data,
                                                            const BiotState& prev,
                                                            const IterateObserver& observer = {});

/// Law constants for the step ending at t: over exact values at t when the
/// problem has an exact solution, otherwise over the previous state, with a
/// relative padding of each range endpoint. Permeability bounds are sampled
/// at cell centroids. Non-finite derivatives yield infinite constants.
LawConstants observed_constants(const Discretization& disc,
                                const MaterialModel& mat,
                                const ProblemDefinition& problem,
                                const BiotState& prev,
                                double t,
                                double pad = 0.2);

struct TimeMarchResult {
    // states[0] is the initial state, states[n] the state at n tau.
    std::vector<BiotState> states;
    std::vector<IterationTrace> traces;
};

/// Backward Euler over `steps` steps of size tau. Throws SolverError with
/// the step index when an iteration diverges or produces non-finite values.
TimeMarchResult time_march(const ProblemDefinition& problem,
                           std::shared_ptr<const Mesh> mesh,
                           const MaterialModel& mat,
                           const SchemeConfig& cfg,
                           double tau,
                           int steps,
                           const IterateObserver& observer = {});

struct ResidualNorms {
    double mechanics;
    double darcy;
    double mass;
};

/// Residual of the fully coupled non-linear step equations at `state`,
/// in the discrete dual norms sqrt(r^T diag(M)^{-1} r) of the reduced spaces.
ResidualNorms nonlinear_residual(const Discretization& disc,
                                 const MaterialModel& mat,
                                 const StepData& data,
                                 double tau,
                                 const BiotState& state);

/// Trace CSV with columns step,iter,dp,dq,du,sum,rate,linsys,iters,relres,seconds.
/// Seconds are written as 0 unless `timings` is set, keeping output reproducible.
void write_trace_csv(std::ostream& out, const std::vector<IterationTrace>& traces, bool timings = false);

} // namespace porobiot
