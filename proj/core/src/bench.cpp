#include "porobiot/bench.hpp"

#include "porobiot/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

namespace porobiot {

int worker_count()
{
    if (const char* env = std::getenv("POROBIOT_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && n > 0) return static_cast<int>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads)
{
    const auto workers = static_cast<std::size_t>(std::clamp<long>(threads, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<double> logspace(double a, double b, int n)
{
    if (n < 1) throw InputError("logspace needs at least one point");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = std::pow(10.0, n == 1 ? a : a + (b - a) * k / (n - 1));
    return out;
}

ErrorEntry error_norms(const BiotState& state, const ExactSolution& exact, double t)
{
    const Mesh& mesh = state.p.dofmap->mesh();
    const auto rule = quadrature(4);
    ErrorEntry e;
    e.h = mesh.mesh_size();
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const double area = cell_geometry(mesh, c).area;
        const double ph = eval_p0(state.p, c);
        for (std::size_t k = 0; k < rule.points.size(); ++k) {
            const Vec2 x = barycentric_to_cartesian(mesh, c, rule.points[k]);
            const double w = area * rule.weights[k];
            const auto uh = eval_p1_vector(state.u, c, x);
            const Vec2 du = uh.value - exact.u(x, t);
            const Vec2 dq = eval_rt0(state.q, c, x) - exact.q(x, t);
            const double dp = ph - exact.p(x, t);
            const double dd = uh.divergence - exact.div_u(x, t);
            e.err_p += w * dp * dp;
            e.err_u += w * dot(du, du);
            e.err_divu += w * dd * dd;
            e.err_q += w * dot(dq, dq);
        }
    }
    e.err_p = std::sqrt(e.err_p);
    e.err_u = std::sqrt(e.err_u);
    e.err_divu = std::sqrt(e.err_divu);
    e.err_q = std::sqrt(e.err_q);
    return e;
}

std::vector<double> convergence_orders(const std::vector<double>& errors, const std::vector<double>& h)
{
    if (errors.size() != h.size()) throw InputError("convergence_orders: size mismatch");
    std::vector<double> out(errors.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 1; k < errors.size(); ++k) out[k] = std::log(errors[k - 1] / errors[k]) / std::log(h[k - 1] / h[k]);
    return out;
}

ErrorReport make_error_report(std::vector<ErrorEntry> entries)
{
    ErrorReport r;
    std::vector<double> h, p, u, d, q;
    for (const auto& e : entries) {
        h.push_back(e.h);
        p.push_back(e.err_p);
        u.push_back(e.err_u);
        d.push_back(e.err_divu);
        q.push_back(e.err_q);
    }
    r.order_p = convergence_orders(p, h);
    r.order_u = convergence_orders(u, h);
    r.order_divu = convergence_orders(d, h);
    r.order_q = convergence_orders(q, h);
    r.entries = std::move(entries);
    return r;
}

namespace {

std::shared_ptr<const Mesh> setup_mesh(const ProblemDefinition& problem, int nx, int ny)
{
    return std::make_shared<const Mesh>(generate_rect_mesh(problem.domain.origin, problem.domain.extent, nx, ny));
}

} // namespace

ErrorReport manufactured_convergence(const RunSetup& setup,
                                     const std::vector<int>& nx,
                                     const std::vector<int>& steps,
                                     std::vector<std::vector<IterationTrace>>* traces)
{
    if (nx.size() != steps.size()) throw InputError("manufactured_convergence: nx and steps differ in length");
    const auto problem = setup.problem(setup.material);
    if (!problem.exact) throw InputError("manufactured_convergence needs an exact solution");
    std::vector<ErrorEntry> entries;
    for (std::size_t k = 0; k < nx.size(); ++k) {
        const double tau = problem.final_time / steps[k];
        auto run = time_march(problem, setup_mesh(problem, nx[k], nx[k]), setup.material, setup.scheme, tau, steps[k]);
        auto e = error_norms(run.states.back(), *problem.exact, problem.final_time);
        e.tau = tau;
        entries.push_back(e);
        if (traces) traces->push_back(std::move(run.traces));
    }
    return make_error_report(std::move(entries));
}

const SweepCell* SweepGrid::argmin() const
{
    const SweepCell* best = nullptr;
    for (const auto& c : cells) {
        if (c.status != "converged") continue;
        if (!best || c.iters < best->iters) best = &c;
    }
    return best;
}

StepOutcome run_first_step(const SchemeSolver& solver, const ProblemDefinition& problem, bool archive)
{
    StepOutcome out;
    const auto seed = initial_state(solver.discretization(), problem);
    out.data = solver.prepare(problem, seed, solver.tau());
    if (archive) out.iterates.push_back(seed);
    auto observer = [&](int, const BiotState& s) {
        if (archive) out.iterates.push_back(s);
    };
    auto [state, trace] = iterate_to_convergence(solver, out.data, seed, observer);
    trace.step = 1;
    out.state = std::move(state);
    out.trace = std::move(trace);
    return out;
}

namespace {

// Keeps free-text statuses inside one CSV field.
std::string error_status(const std::exception& e)
{
    std::string msg = std::string("error: ") + e.what();
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    return msg;
}

std::pair<int, std::string> first_step_count(const std::shared_ptr<const Discretization>& disc,
                                             const MaterialModel& mat,
                                             const ProblemDefinition& problem,
                                             const SchemeConfig& cfg,
                                             double tau)
{
    try {
        SchemeSolver solver(disc, mat, cfg, tau);
        const auto out = run_first_step(solver, problem, false);
        return {out.trace.iterations, out.trace.status};
    } catch (const std::exception& e) {
        return {0, error_status(e)};
    }
}

} // namespace

SweepGrid sweep_L(const RunSetup& setup, const std::vector<double>& L1, const std::vector<double>& L2, int threads)
{
    if (L1.empty() || L2.empty()) throw InputError("sweep grids must be non-empty");
    const auto problem = setup.problem(setup.material);
    auto disc = std::make_shared<const Discretization>(discretize(setup_mesh(problem, setup.nx, setup.ny), setup.material, problem));
    SweepGrid grid;
    grid.L1_values = L1;
    grid.L2_values = L2;
    grid.cells.resize(L1.size() * L2.size());
    parallel_for(
        grid.cells.size(),
        [&](std::size_t k) {
            SweepCell& cell = grid.cells[k];
            cell.L1 = L1[k / L2.size()];
            cell.L2 = L2[k % L2.size()];
            SchemeConfig cfg = setup.scheme;
            cfg.L1 = cell.L1;
            cfg.L2 = cell.L2;
            std::tie(cell.iters, cell.status) = first_step_count(disc, setup.material, problem, cfg, setup.tau);
        },
        threads);
    return grid;
}

SensitivityAxis parse_axis(const std::string& id)
{
    std::string key;
    for (char ch : id) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (key == "h") return SensitivityAxis::H;
    if (key == "tau" || key == "dt") return SensitivityAxis::Tau;
    if (key == "k" || key == "permeability") return SensitivityAxis::K;
    if (key == "alpha") return SensitivityAxis::Alpha;
    throw InputError("unknown sensitivity axis '" + id + "'");
}

std::string to_string(SensitivityAxis axis)
{
    switch (axis) {
    case SensitivityAxis::H: return "h";
    case SensitivityAxis::Tau: return "tau";
    case SensitivityAxis::K: return "K";
    case SensitivityAxis::Alpha: return "alpha";
    }
    return "?";
}

std::vector<SensitivityRow> sensitivity_grid(const RunSetup& setup,
                                             SensitivityAxis axis,
                                             const std::vector<double>& values,
                                             int threads)
{
    std::vector<SensitivityRow> rows(values.size());
    parallel_for(
        values.size(),
        [&](std::size_t k) {
            const double v = values[k];
            SensitivityRow& row = rows[k];
            row.axis = axis;
            row.value = v;
            if (!(v > 0.0) && axis != SensitivityAxis::Alpha) {
                row.status = "error: value must be positive";
                return;
            }
            MaterialModel mat = setup.material;
            double tau = setup.tau;
            int nx = setup.nx, ny = setup.ny;
            switch (axis) {
            case SensitivityAxis::K:
                mat.permeability = [v](Vec2) { return v; };
                mat.constants.k_m = mat.constants.k_M = v;
                break;
            case SensitivityAxis::Alpha: mat.alpha = v; break;
            case SensitivityAxis::Tau: tau = v; break;
            case SensitivityAxis::H: break;
            }
            const auto problem = setup.problem(mat);
            if (axis == SensitivityAxis::H) {
                nx = std::max(1, static_cast<int>(std::lround(problem.domain.extent.x / v)));
                ny = std::max(1, static_cast<int>(std::lround(problem.domain.extent.y / v)));
            }
            try {
                auto disc = std::make_shared<const Discretization>(discretize(setup_mesh(problem, nx, ny), mat, problem));
                std::tie(row.iters, row.status) = first_step_count(disc, mat, problem, setup.scheme, tau);
            } catch (const std::exception& e) {
                row.status = error_status(e);
            }
        },
        threads);
    return rows;
}

ContractionReport verify_contraction(const Discretization& disc,
                                     const SchemeConfig& cfg,
                                     const LawConstants& constants,
                                     const std::vector<BiotState>& iterates,
                                     const BiotState& reference)
{
    ContractionReport r;
    const auto& o = disc.ops;
    auto sq_p = [&](const Vector& e) { return e.dot(o.M_p * e); };
    auto sq_div = [&](const Vector& e) { return e.dot(o.D * e); };
    double wp, wd;
    if (cfg.kind == SchemeKind::Splitting) {
        r.functional = "E";
        wp = cfg.L1 - constants.b_m;
        wd = cfg.L2 - constants.h_m;
        for (const auto& s : iterates) {
            r.values.push_back(wp * sq_p(s.p.coeffs - reference.p.coeffs) + wd * sq_div(s.u.coeffs - reference.u.coeffs));
        }
    } else {
        r.functional = "F";
        wp = cfg.L1;
        wd = cfg.L2 - constants.h_m;
        for (std::size_t i = 1; i < iterates.size(); ++i) {
            r.values.push_back(wp * sq_p(iterates[i].p.coeffs - iterates[i - 1].p.coeffs) +
                               wd * sq_div(iterates[i].u.coeffs - iterates[i - 1].u.coeffs));
        }
    }
    r.floor = std::max({wp, wd, 0.0}) * (10.0 * cfg.tol) * (10.0 * cfg.tol);
    for (std::size_t i = 1; i < r.values.size(); ++i) {
        if (r.values[i - 1] <= r.floor || r.values[i] <= r.floor) break;
        if (!(r.values[i] < r.values[i - 1])) {
            r.monotone = false;
            r.first_violation = static_cast<int>(i);
            break;
        }
    }
    return r;
}

CrossCheck cross_verify(const RunSetup& setup, std::optional<LPair> splitting_L, std::optional<LPair> monolithic_L)
{
    const auto problem = setup.problem(setup.material);
    auto disc = std::make_shared<const Discretization>(discretize(setup_mesh(problem, setup.nx, setup.ny), setup.material, problem));
    const auto seed = initial_state(*disc, problem);
    CrossCheck out;
    out.constants = observed_constants(*disc, setup.material, problem, seed, setup.tau);

    auto run = [&](SchemeKind kind, std::optional<LPair> L) {
        SchemeCheck c;
        c.kind = kind;
        c.L = L ? *L : preset_l(LPreset::TheoremSafe, kind, setup.material, out.constants);
        SchemeConfig cfg = setup.scheme;
        cfg.kind = kind;
        cfg.L1 = c.L.L1;
        cfg.L2 = c.L.L2;
        c.theorem_safe = theorem_flags(cfg.L1, cfg.L2, out.constants, setup.material.alpha).safe_for(kind);
        SchemeSolver solver(disc, setup.material, cfg, setup.tau);
        auto step = run_first_step(solver, problem, true);
        c.residual = nonlinear_residual(*disc, setup.material, step.data, setup.tau, step.state);
        c.contraction = verify_contraction(*disc, cfg, out.constants, step.iterates, step.state);
        c.trace = std::move(step.trace);
        c.state = std::move(step.state);
        return c;
    };
    out.splitting = run(SchemeKind::Splitting, splitting_L);
    out.monolithic = run(SchemeKind::Monolithic, monolithic_L);

    auto diff = [](const FeFunction& a, const FeFunction& b) {
        FeFunction d = a;
        d.coeffs -= b.coeffs;
        return l2_norm(d);
    };
    out.diff_p = diff(out.splitting.state.p, out.monolithic.state.p);
    out.diff_q = diff(out.splitting.state.q, out.monolithic.state.q);
    out.diff_u = diff(out.splitting.state.u, out.monolithic.state.u);
    return out;
}

MandelSeries mandel_report(const std::vector<BiotState>& states, Vec2 probe)
{
    MandelSeries s;
    if (states.empty()) return s;
    const Mesh& mesh = states.front().p.dofmap->mesh();
    const auto cell = mesh.locate(probe);
    if (!cell) throw InputError("probe point lies outside the domain");
    // Top-left vertex: the plate displacement is shared by all top vertices.
    std::size_t top = 0;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        const Vec2 x = mesh.vertices()[v], best = mesh.vertices()[top];
        if (x.y > best.y || (x.y == best.y && x.x < best.x)) top = v;
    }
    for (const auto& st : states) {
        s.t.push_back(st.time);
        s.p_probe.push_back(eval_p0(st.p, *cell));
        s.uy_top.push_back(st.u.coeffs[static_cast<Eigen::Index>(2 * top + 1)]);
    }
    const auto peak = std::max_element(s.p_probe.begin(), s.p_probe.end());
    s.peak = *peak;
    s.peak_time = s.t[static_cast<std::size_t>(peak - s.p_probe.begin())];
    s.final_value = s.p_probe.back();
    return s;
}

namespace {

struct CsvPrecision {
    explicit CsvPrecision(std::ostream& out) : out_(out), prec_(out.precision()) { out_.precision(12); }
    ~CsvPrecision() { out_.precision(prec_); }
    std::ostream& out_;
    std::streamsize prec_;
};

} // namespace

void write_errors_csv(std::ostream& out, const ErrorReport& report)
{
    CsvPrecision guard(out);
    out << "h,tau,err_p,err_u,err_divu,err_q,order_p,order_u\n";
    for (std::size_t k = 0; k < report.entries.size(); ++k) {
        const auto& e = report.entries[k];
        out << e.h << ',' << e.tau << ',' << e.err_p << ',' << e.err_u << ',' << e.err_divu << ',' << e.err_q << ',';
        if (k > 0) out << report.order_p[k] << ',' << report.order_u[k];
        else out << ',';
        out << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const SweepGrid& grid)
{
    CsvPrecision guard(out);
    out << "L1,L2,iters,status\n";
    for (const auto& c : grid.cells) out << c.L1 << ',' << c.L2 << ',' << c.iters << ',' << c.status << '\n';
}

void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityRow>& rows)
{
    CsvPrecision guard(out);
    out << "axis,value,iters,status\n";
    for (const auto& r : rows) out << to_string(r.axis) << ',' << r.value << ',' << r.iters << ',' << r.status << '\n';
}

void write_mandel_csv(std::ostream& out, const MandelSeries& series)
{
    CsvPrecision guard(out);
    out << "t,p_probe,uy_top\n";
    for (std::size_t k = 0; k < series.t.size(); ++k) {
        out << series.t[k] << ',' << series.p_probe[k] << ',' << series.uy_top[k] << '\n';
    }
}

} // namespace porobiot
