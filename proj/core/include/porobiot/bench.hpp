#pragma once

#include "porobiot/schemes.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace porobiot {

/// Worker count: POROBIOT_THREADS when set and positive, else the hardware
/// concurrency (at least 1).
int worker_count();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Exceptions are
/// rethrown on the calling thread after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads);

/// n values from 10^a to 10^b.
std::vector<double> logspace(double a, double b, int n);

struct ErrorEntry {
    double h = 0.0;
    double tau = 0.0;
    double err_p = 0.0;
    double err_u = 0.0;
    double err_divu = 0.0;
    double err_q = 0.0;
};

/// L2 errors against the exact fields at t, by degree-4 quadrature per cell.
ErrorEntry error_norms(const BiotState& state, const ExactSolution& exact, double t);

/// log(e_{k-1}/e_k) / log(h_{k-1}/h_k); the first entry is NaN.
std::vector<double> convergence_orders(const std::vector<double>& errors, const std::vector<double>& h);

struct ErrorReport {
    std::vector<ErrorEntry> entries;
    std::vector<double> order_p, order_u, order_divu, order_q;
};

ErrorReport make_error_report(std::vector<ErrorEntry> entries);

/// Everything one run needs apart from the scheme parameters.
struct RunSetup {
    MaterialModel material;
    // Rebuilds the problem for a material (manufactured data depend on it).
    std::function<ProblemDefinition(const MaterialModel&)> problem;
    int nx = 16;
    int ny = 16;
    double tau = 0.25;
    SchemeConfig scheme;
};

/// Manufactured convergence study: for each (nx, steps) pair, march to the
/// final time and measure errors there. Per-run iteration traces are appended
/// to `traces` when given.
ErrorReport manufactured_convergence(const RunSetup& setup,
                                     const std::vector<int>& nx,
                                     const std::vector<int>& steps,
                                     std::vector<std::vector<IterationTrace>>* traces = nullptr);

struct SweepCell {
    double L1 = 0.0;
    double L2 = 0.0;
    int iters = 0;
    std::string status;
};

struct SweepGrid {
    std::vector<double> L1_values;
    std::vector<double> L2_values;
    // Row-major in L1: cells[i * L2_values.size() + j].
    std::vector<SweepCell> cells;

    /// Converged cell with the fewest iterations; ties go to the lower index.
    [[nodiscard]] const SweepCell* argmin() const;
};

/// First time step of the setup for every (L1, L2) pair.
SweepGrid sweep_L(const RunSetup& setup, const std::vector<double>& L1, const std::vector<double>& L2, int threads = 1);

enum class SensitivityAxis { H, Tau, K, Alpha };

SensitivityAxis parse_axis(const std::string& id);
std::string to_string(SensitivityAxis axis);

struct SensitivityRow {
    SensitivityAxis axis = SensitivityAxis::H;
    double value = 0.0;
    int iters = 0;
    std::string status;
};

/// Iteration count of the first time step as one parameter varies. For the
/// h axis, nx = round(extent.x / h) and ny = round(extent.y / h).
std::vector<SensitivityRow> sensitivity_grid(const RunSetup& setup,
                                             SensitivityAxis axis,
                                             const std::vector<double>& values,
                                             int threads = 1);

struct StepOutcome {
    BiotState state;
    IterationTrace trace;
    std::vector<BiotState> iterates; // iterates[0] is the seed
    StepData data;
};

/// First time step with every iterate archived.
StepOutcome run_first_step(const SchemeSolver& solver, const ProblemDefinition& problem, bool archive = true);

struct ContractionReport {
    std::string functional; // "E" (splitting) or "F" (monolithic)
    std::vector<double> values;
    double floor = 0.0;
    bool monotone = true;
    int first_violation = -1;
};

/// Splitting: E_i = (L1 - b_m)|e_p^i|^2 + (L2 - h_m)|div e_u^i|^2 with errors
/// against `reference`. Monolithic: F_i = L1|e_p^i|^2 + (L2 - h_m)|div e_u^i|^2
/// with increments e^i = x^i - x^{i-1}. Decrease is required while values
/// lie above floor = max weight * (10 tol)^2.
ContractionReport verify_contraction(const Discretization& disc,
                                     const SchemeConfig& cfg,
                                     const LawConstants& constants,
                                     const std::vector<BiotState>& iterates,
                                     const BiotState& reference);

struct SchemeCheck {
    SchemeKind kind = SchemeKind::Splitting;
    LPair L{0.0, 0.0};
    bool theorem_safe = false;
    IterationTrace trace;
    BiotState state;
    ResidualNorms residual{0.0, 0.0, 0.0};
    ContractionReport contraction;
};

struct CrossCheck {
    LawConstants constants;
    SchemeCheck splitting;
    SchemeCheck monolithic;
    // L2 norms of the field differences between the two converged states.
    double diff_p = 0.0;
    double diff_q = 0.0;
    double diff_u = 0.0;
};

/// First time step with both schemes from the same seed. Unset L pairs take
/// the theorem-safe preset over the observed constants of the step.
CrossCheck cross_verify(const RunSetup& setup,
                        std::optional<LPair> splitting_L = std::nullopt,
                        std::optional<LPair> monolithic_L = std::nullopt);

struct MandelSeries {
    std::vector<double> t;
    std::vector<double> p_probe;
    std::vector<double> uy_top;
    double peak = 0.0;
    double peak_time = 0.0;
    double final_value = 0.0;
};

/// Pressure at the probe cell and plate displacement over time.
MandelSeries mandel_report(const std::vector<BiotState>& states, Vec2 probe);

void write_errors_csv(std::ostream& out, const ErrorReport& report);
void write_sweep_csv(std::ostream& out, const SweepGrid& grid);
void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityRow>& rows);
void write_mandel_csv(std::ostream& out, const MandelSeries& series);

} // namespace porobiot
