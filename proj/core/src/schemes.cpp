#include "porobiot/schemes.hpp"

#include "porobiot/errors.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <ostream>

namespace porobiot {

namespace {

std::string lower(const std::string& s)
{
    std::string out;
    for (char ch : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    return out;
}

double weighted_norm(const SparseMatrix& mass, const Vector& v) { return std::sqrt(std::max(0.0, v.dot(mass * v))); }

} // namespace

SchemeKind parse_scheme_kind(const std::string& id)
{
    const auto key = lower(id);
    if (key == "splitting" || key == "split") return SchemeKind::Splitting;
    if (key == "monolithic") return SchemeKind::Monolithic;
    throw InputError("unknown scheme '" + id + "'");
}

std::string to_string(SchemeKind kind) { return kind == SchemeKind::Splitting ? "splitting" : "monolithic"; }

void SchemeConfig::validate() const
{
    if (!(L1 >= 0.0) || !(L2 >= 0.0)) throw InputError("L1 and L2 must be non-negative");
    if (!(tol > 0.0)) throw InputError("tolerance must be positive");
    if (max_iter < 1) throw InputError("max_iter must be at least 1");
    if (!(divergence_factor > 1.0)) throw InputError("divergence_factor must exceed 1");
    if (linear == LinearSolverKind::Gmres && kind != SchemeKind::Monolithic) {
        throw InputError("GMRES is only available for the monolithic scheme");
    }
    if (preconditioner_L1 && !(*preconditioner_L1 >= 0.0)) throw InputError("preconditioner L1 must be non-negative");
}

TheoremFlags theorem_flags(double L1, double L2, const LawConstants& c, double alpha)
{
    TheoremFlags f;
    const double coupling = c.b_m > 0.0 ? alpha * alpha / c.b_m : (alpha == 0.0 ? 0.0 : INFINITY);
    f.splitting_safe = L1 >= c.L_b && L2 >= c.L_h + coupling;
    f.monolithic_safe = L1 >= c.L_b / 2.0 && L2 >= c.L_h;
    return f;
}

LPreset parse_l_preset(const std::string& id)
{
    const auto key = lower(id);
    if (key == "undrained") return LPreset::Undrained;
    if (key == "practical") return LPreset::Practical;
    if (key == "optimal-linear" || key == "optimal_linear") return LPreset::OptimalLinear;
    if (key == "theorem-safe" || key == "theorem_safe" || key == "safe") return LPreset::TheoremSafe;
    throw InputError("unknown L preset '" + id + "'");
}

LPair preset_l(LPreset preset, SchemeKind kind, const MaterialModel& mat, const LawConstants& c)
{
    const double a2 = mat.alpha * mat.alpha;
    switch (preset) {
    case LPreset::Undrained: return {1.0 / mat.biot_modulus, mat.lambda + mat.biot_modulus * a2};
    case LPreset::Practical: return {c.L_b, c.L_h};
    case LPreset::OptimalLinear: return {1.0 / mat.biot_modulus, mat.lambda + mat.biot_modulus * a2 / 2.0};
    case LPreset::TheoremSafe:
        if (kind == SchemeKind::Monolithic) return {c.L_b / 2.0, c.L_h};
        return {c.L_b, c.L_h + (a2 == 0.0 ? 0.0 : a2 / c.b_m)};
    }
    throw InputError("unknown L preset");
}

BiotState initial_state(const Discretization& disc, const ProblemDefinition& problem)
{
    BiotState s;
    s.u = interpolate_p1_vector(disc.p1v, problem.initial.u);
    s.q = interpolate_rt0(disc.rt0, problem.initial.q);
    s.p = interpolate_p0(disc.p0, problem.initial.p);
    s.time = 0.0;
    return s;
}

struct SchemeSolver::Cache {
    SparseMatrix K_full; // A_e + L2 D
    SparseMatrix K;      // reduced
    SparseMatrix C_up;   // -alpha B_up, reduced rows
    SparseMatrix Mq;     // reduced
    SparseMatrix Bqp;    // reduced columns
    SparseMatrix flow;   // [Mq, -Bqp^T; tau Bqp, L1 M_p]
    SparseMatrix mono;
    std::size_t nu = 0, nq = 0, np = 0;
    std::optional<Factorization> flow_lu;
    std::optional<Factorization> mech;
    std::optional<Factorization> mono_lu;
    std::optional<FixedStressPreconditioner> pc;
};

namespace {

SparseMatrix flow_block(const SparseMatrix& mq, const SparseMatrix& bqp, const SparseMatrix& mp, double tau, double l1)
{
    const SparseMatrix neg_bt = -SparseMatrix(bqp.transpose());
    const SparseMatrix tb = tau * bqp;
    const SparseMatrix lm = l1 * mp;
    return assemble_blocks(BlockLayout({static_cast<std::size_t>(mq.rows()), static_cast<std::size_t>(mp.rows())}),
                           {{&mq, &neg_bt}, {&tb, &lm}});
}

} // namespace

SchemeSolver::SchemeSolver(std::shared_ptr<const Discretization> disc, MaterialModel mat, SchemeConfig cfg, double tau)
    : disc_(std::move(disc)), mat_(std::move(mat)), cfg_(std::move(cfg)), tau_(tau)
{
    cfg_.validate();
    if (!(tau_ > 0.0)) throw InputError("time step must be positive");
    const auto& o = disc_->ops;
    const auto& cu = disc_->u_constraints;
    const auto& cq = disc_->q_constraints;
    auto c = std::make_shared<Cache>();
    c->K_full = o.A_e + cfg_.L2 * o.D;
    c->K = reduce(c->K_full, cu, cu);
    c->C_up = -mat_.alpha * SparseMatrix(cu.prolongation().transpose() * o.B_up);
    c->Mq = reduce(o.M_q, cq, cq);
    c->Bqp = o.B_qp * cq.prolongation();
    c->nu = cu.n_reduced();
    c->nq = cq.n_reduced();
    c->np = static_cast<std::size_t>(o.M_p.rows());
    c->flow = flow_block(c->Mq, c->Bqp, o.M_p, tau_, cfg_.L1);

    const SparseMatrix coupling_pu = -SparseMatrix(c->C_up.transpose());
    const SparseMatrix neg_bt = -SparseMatrix(c->Bqp.transpose());
    const SparseMatrix tb = tau_ * c->Bqp;
    const SparseMatrix lm = cfg_.L1 * o.M_p;
    c->mono = assemble_blocks(BlockLayout({c->nu, c->nq, c->np}),
                              {{&c->K, nullptr, &c->C_up}, {nullptr, &c->Mq, &neg_bt}, {&coupling_pu, &tb, &lm}});

    if (cfg_.kind == SchemeKind::Splitting) {
        c->flow_lu.emplace(c->flow, Factorization::Kind::LU);
        c->mech.emplace(c->K, Factorization::Kind::Cholesky);
    } else if (cfg_.linear == LinearSolverKind::Direct) {
        c->mono_lu.emplace(c->mono, Factorization::Kind::LU);
    } else {
        const double l1 = cfg_.preconditioner_L1.value_or(cfg_.L1);
        const SparseMatrix pflow = flow_block(c->Mq, c->Bqp, o.M_p, tau_, l1);
        c->pc.emplace(c->K, c->C_up, pflow, c->nu, c->nq, c->np);
    }
    cache_ = std::move(c);
}

BlockLayout SchemeSolver::monolithic_layout() const { return BlockLayout({cache_->nu, cache_->nq, cache_->np}); }

const SparseMatrix& SchemeSolver::monolithic_matrix() const { return cache_->mono; }

FixedStressPreconditioner SchemeSolver::make_preconditioner() const
{
    const double l1 = cfg_.preconditioner_L1.value_or(cfg_.L1);
    const SparseMatrix pflow = flow_block(cache_->Mq, cache_->Bqp, disc_->ops.M_p, tau_, l1);
    return FixedStressPreconditioner(cache_->K, cache_->C_up, pflow, cache_->nu, cache_->nq, cache_->np);
}

StepData SchemeSolver::prepare(const ProblemDefinition& problem, const BiotState& prev, double t) const
{
    StepData d;
    d.time = t;
    d.loads = assemble_loads(*disc_, problem, mat_, t);
    d.fixed = essential_values(*disc_, problem, t);
    const auto nl = assemble_nonlinear_rhs(prev.u.coeffs, prev.p.coeffs, disc_->ops, mat_);
    d.storage_prev = nl.bp + mat_.alpha * (disc_->ops.B_up.transpose() * prev.u.coeffs);
    return d;
}

BiotState SchemeSolver::assemble_state(const StepData& data, const Vector& u, const Vector& q, const Vector& p) const
{
    BiotState s;
    s.u = FeFunction(disc_->p1v, disc_->u_constraints.expand(u, data.fixed.u));
    s.q = FeFunction(disc_->rt0, disc_->q_constraints.expand(q, data.fixed.q));
    s.p = FeFunction(disc_->p0, p);
    s.time = data.time;
    return s;
}

BiotState SchemeSolver::iterate(const StepData& data, const BiotState& cur, SolverReport* report) const
{
    return cfg_.kind == SchemeKind::Splitting ? split_step(data, cur, report) : monolithic_step(data, cur, report);
}

BiotState SchemeSolver::split_step(const StepData& data, const BiotState& cur, SolverReport* report) const
{
    const auto start = std::chrono::steady_clock::now();
    const auto& o = disc_->ops;
    const auto& c = *cache_;
    const auto nl = assemble_nonlinear_rhs(cur.u.coeffs, cur.p.coeffs, o, mat_);

    // Step 1: flow with the mechanics frozen at iterate i.
    const Vector rq = data.loads.g - o.M_q * data.fixed.q;
    const Vector rp = tau_ * data.loads.s + data.storage_prev - nl.bp + cfg_.L1 * (o.M_p * cur.p.coeffs) -
                      mat_.alpha * (o.B_up.transpose() * cur.u.coeffs) - tau_ * (o.B_qp * data.fixed.q);
    Vector rhs_flow(static_cast<Eigen::Index>(c.nq + c.np));
    rhs_flow << disc_->q_constraints.restrict_dual(rq), rp;
    const Vector flow = c.flow_lu->solve(rhs_flow);
    const Vector p = flow.tail(static_cast<Eigen::Index>(c.np));

    // Step 2: mechanics with the new pressure.
    const Vector ru = data.loads.f + mat_.alpha * (o.B_up * p) + cfg_.L2 * (o.D * cur.u.coeffs) - nl.hu - c.K_full * data.fixed.u;
    const Vector rhs_mech = disc_->u_constraints.restrict_dual(ru);
    const Vector u = c.mech->solve(rhs_mech);

    if (report) {
        auto rel = [](const SparseMatrix& a, const Vector& x, const Vector& b) {
            const double bn = b.norm();
            const double rn = (a * x - b).norm();
            return bn > 0.0 ? rn / bn : rn;
        };
        report->method = "lu+ldlt";
        report->iterations = 2;
        report->relative_residual = std::max(rel(c.flow, flow, rhs_flow), rel(c.K, u, rhs_mech));
        report->converged = true;
        report->status = "converged";
        report->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return assemble_state(data, u, flow.head(static_cast<Eigen::Index>(c.nq)), p);
}

Vector SchemeSolver::monolithic_rhs(const StepData& data, const BiotState& cur) const
{
    const auto& o = disc_->ops;
    const auto& c = *cache_;
    const auto nl = assemble_nonlinear_rhs(cur.u.coeffs, cur.p.coeffs, o, mat_);
    const Vector ru = data.loads.f + cfg_.L2 * (o.D * cur.u.coeffs) - nl.hu - c.K_full * data.fixed.u;
    const Vector rq = data.loads.g - o.M_q * data.fixed.q;
    const Vector rp = tau_ * data.loads.s + data.storage_prev - nl.bp + cfg_.L1 * (o.M_p * cur.p.coeffs) -
                      mat_.alpha * (o.B_up.transpose() * data.fixed.u) - tau_ * (o.B_qp * data.fixed.q);
    Vector rhs(static_cast<Eigen::Index>(c.nu + c.nq + c.np));
    rhs << disc_->u_constraints.restrict_dual(ru), disc_->q_constraints.restrict_dual(rq), rp;
    return rhs;
}

BiotState SchemeSolver::monolithic_step(const StepData& data, const BiotState& cur, SolverReport* report) const
{
    const auto& c = *cache_;
    const Vector rhs = monolithic_rhs(data, cur);
    Vector x;
    SolverReport rep;
    if (c.mono_lu) {
        const auto start = std::chrono::steady_clock::now();
        x = c.mono_lu->solve(rhs);
        const double bn = rhs.norm();
        const double rn = (c.mono * x - rhs).norm();
        rep.method = "lu";
        rep.iterations = 1;
        rep.relative_residual = bn > 0.0 ? rn / bn : rn;
        rep.converged = true;
        rep.status = "converged";
        rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    } else {
        Vector x0(rhs.size());
        x0 << disc_->u_constraints.reduce_primal(cur.u.coeffs), disc_->q_constraints.reduce_primal(cur.q.coeffs), cur.p.coeffs;
        auto result = gmres(c.mono, rhs, c.pc->as_operator(), cfg_.gmres, &x0);
        x = std::move(result.first);
        rep = std::move(result.second);
    }
    if (report) *report = rep;
    const auto nu = static_cast<Eigen::Index>(c.nu), nq = static_cast<Eigen::Index>(c.nq), np = static_cast<Eigen::Index>(c.np);
    return assemble_state(data, x.head(nu), x.segment(nu, nq), x.tail(np));
}

BiotState splitting_iteration(const std::shared_ptr<const Discretization>& disc,
                              const MaterialModel& mat,
                              const ProblemDefinition& problem,
                              const SchemeConfig& cfg,
                              double tau,
                              const BiotState& prev,
                              const BiotState& cur)
{
    SchemeConfig c = cfg;
    c.kind = SchemeKind::Splitting;
    c.linear = LinearSolverKind::Direct;
    SchemeSolver solver(disc, mat, c, tau);
    return solver.iterate(solver.prepare(problem, prev, cur.time), cur);
}

BiotState monolithic_iteration(const std::shared_ptr<const Discretization>& disc,
                               const MaterialModel& mat,
                               const ProblemDefinition& problem,
                               const SchemeConfig& cfg,
                               double tau,
                               const BiotState& prev,
                               const BiotState& cur)
{
    SchemeConfig c = cfg;
    c.kind = SchemeKind::Monolithic;
    SchemeSolver solver(disc, mat, c, tau);
    return solver.iterate(solver.prepare(problem, prev, cur.time), cur);
}

Increments increment_norms(const Discretization& disc, const BiotState& a, const BiotState& b)
{
    return {weighted_norm(disc.ops.M_p, a.p.coeffs - b.p.coeffs), weighted_norm(disc.mass_q, a.q.coeffs - b.q.coeffs),
            weighted_norm(disc.mass_u, a.u.coeffs - b.u.coeffs)};
}

std::pair<BiotState, IterationTrace> iterate_to_convergence(const SchemeSolver& solver,
                                                            const StepData& data,
                                                            const BiotState& prev,
                                                            const IterateObserver& observer)
{
    const auto& cfg = solver.config();
    const auto& disc = solver.discretization();
    IterationTrace trace;
    BiotState cur = prev;
    double first = -1.0;
    double last = 0.0;
    trace.status = "max_iter";
    for (int i = 1; i <= cfg.max_iter; ++i) {
        IterationRecord rec;
        rec.iter = i;
        BiotState next = solver.iterate(data, cur, &rec.linear);
        if (!next.u.coeffs.allFinite() || !next.q.coeffs.allFinite() || !next.p.coeffs.allFinite()) {
            trace.status = "non_finite";
            trace.iterations = i;
            break;
        }
        if (!rec.linear.converged) trace.warnings.push_back("iteration " + std::to_string(i) + ": linear solver " + rec.linear.status);
        const auto inc = increment_norms(disc, next, cur);
        rec.dp = inc.dp;
        rec.dq = inc.dq;
        rec.du = inc.du;
        rec.sum = inc.dp + inc.dq + inc.du;
        rec.rate = i > 1 && last > 0.0 ? rec.sum / last : 0.0;
        trace.records.push_back(rec);
        trace.iterations = i;
        if (observer) observer(i, next);
        cur = std::move(next);
        if (first < 0.0) first = rec.sum;
        last = rec.sum;
        if (rec.sum <= cfg.tol) {
            trace.status = "converged";
            trace.converged = true;
            break;
        }
        if (!std::isfinite(rec.sum) || rec.sum > cfg.divergence_factor * first) {
            trace.status = "diverged";
            break;
        }
    }
    if (trace.status != "non_finite") {
        trace.out_of_range = assemble_nonlinear_rhs(cur.u.coeffs, cur.p.coeffs, disc.ops, solver.material()).out_of_range;
        if (trace.out_of_range > 0) {
            trace.warnings.push_back(std::to_string(trace.out_of_range) + " law evaluations outside the admissible range");
        }
    }
    return {std::move(cur), std::move(trace)};
}

LawConstants observed_constants(const Discretization& disc,
                                const MaterialModel& mat,
                                const ProblemDefinition& problem,
                                const BiotState& prev,
                                double t,
                                double pad)
{
    const Mesh& mesh = *disc.mesh;
    const auto n = mesh.num_cells();
    std::vector<double> p(n), s(n);
    double kmin = INFINITY, kmax = -INFINITY;
    const Vector div = problem.exact ? Vector() : cell_divergence(prev.u);
    for (std::size_t c = 0; c < n; ++c) {
        const Vec2 x = mesh.centroid(c);
        if (problem.exact) {
            p[c] = problem.exact->p(x, t);
            s[c] = problem.exact->div_u(x, t);
        } else {
            p[c] = prev.p.coeffs[static_cast<Eigen::Index>(c)];
            s[c] = div[static_cast<Eigen::Index>(c)];
        }
        const double k = mat.permeability(x);
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
    }
    const auto [plo, phi] = std::minmax_element(p.begin(), p.end());
    const auto [slo, shi] = std::minmax_element(s.begin(), s.end());
    LawConstants c = mat.constants;
    c.k_m = kmin;
    c.k_M = kmax;
    auto bounds = [](const NonlinearLaw& law, Interval range) {
        try {
            return estimate_constants(law, range, 2001);
        } catch (const AssumptionError&) {
            return DerivativeBounds{0.0, INFINITY};
        }
    };
    const auto b = bounds(mat.b_law, padded_range(*plo, *phi, pad));
    const auto h = bounds(mat.h_law, padded_range(*slo, *shi, pad));
    c.b_m = b.min;
    c.L_b = b.max;
    c.h_m = h.min;
    c.L_h = h.max;
    return c;
}

TimeMarchResult time_march(const ProblemDefinition& problem,
                           std::shared_ptr<const Mesh> mesh,
                           const MaterialModel& mat,
                           const SchemeConfig& cfg,
                           double tau,
                           int steps,
                           const IterateObserver& observer)
{
    if (steps < 1) throw InputError("time_march needs at least one step");
    if (!(tau > 0.0)) throw InputError("time step must be positive");
    auto disc = std::make_shared<const Discretization>(discretize(std::move(mesh), mat, problem));
    SchemeSolver solver(disc, mat, cfg, tau);
    TimeMarchResult out;
    out.states.push_back(initial_state(*disc, problem));
    for (int n = 1; n <= steps; ++n) {
        const double t = n * tau;
        const BiotState& prev = out.states.back();
        const auto constants = observed_constants(*disc, mat, problem, prev, t);
        const auto data = solver.prepare(problem, prev, t);
        auto [state, trace] = iterate_to_convergence(solver, data, prev, observer);
        trace.step = n;
        trace.constants = constants;
        trace.flags = theorem_flags(cfg.L1, cfg.L2, constants, mat.alpha);
        if (!trace.flags.safe_for(cfg.kind)) trace.warnings.push_back("L1, L2 outside the proven convergence region");
        if (trace.status == "diverged" || trace.status == "non_finite") {
            throw SolverError("step " + std::to_string(n) + ": iteration " + trace.status, n);
        }
        out.states.push_back(std::move(state));
        out.traces.push_back(std::move(trace));
    }
    return out;
}

ResidualNorms nonlinear_residual(const Discretization& disc,
                                 const MaterialModel& mat,
                                 const StepData& data,
                                 double tau,
                                 const BiotState& state)
{
    const auto& o = disc.ops;
    const auto nl = assemble_nonlinear_rhs(state.u.coeffs, state.p.coeffs, o, mat);
    const Vector& u = state.u.coeffs;
    const Vector& q = state.q.coeffs;
    const Vector& p = state.p.coeffs;
    const Vector ru = disc.u_constraints.restrict_dual(data.loads.f - o.A_e * u - nl.hu + mat.alpha * (o.B_up * p));
    const Vector rq = disc.q_constraints.restrict_dual(data.loads.g - o.M_q * q + o.B_qp.transpose() * p);
    const Vector rp = tau * data.loads.s + data.storage_prev - nl.bp - mat.alpha * (o.B_up.transpose() * u) - tau * (o.B_qp * q);
    auto dual = [](const Vector& r, const Vector& diag) { return std::sqrt(r.cwiseAbs2().cwiseQuotient(diag).sum()); };
    const Vector du = disc.u_constraints.restrict_dual(Vector(disc.mass_u.diagonal()));
    const Vector dq = disc.q_constraints.restrict_dual(Vector(disc.mass_q.diagonal()));
    return {dual(ru, du), dual(rq, dq), dual(rp, Vector(o.M_p.diagonal()))};
}

void write_trace_csv(std::ostream& out, const std::vector<IterationTrace>& traces, bool timings)
{
    out << "step,iter,dp,dq,du,sum,rate,linsys,iters,relres,seconds\n";
    const auto flags = out.flags();
    const auto prec = out.precision();
    out.precision(10);
    for (const auto& t : traces) {
        for (const auto& r : t.records) {
            out << t.step << ',' << r.iter << ',' << r.dp << ',' << r.dq << ',' << r.du << ',' << r.sum << ',' << r.rate << ','
                << r.linear.method << ',' << r.linear.iterations << ',' << r.linear.relative_residual << ','
                << (timings ? r.linear.seconds : 0.0) << '\n';
        }
    }
    out.flags(flags);
    out.precision(prec);
}

} // namespace porobiot
