#include "porobiot/physics.hpp"

#include "porobiot/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

namespace porobiot {

double odd_cbrt(double x) { return std::cbrt(x); }

double odd_pow_5_3(double x) { return std::copysign(std::pow(std::abs(x), 5.0 / 3.0), x); }

LawCase parse_law_case(const std::string& id)
{
    std::string key;
    for (char ch : id) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    static const std::map<std::string, LawCase> table = {
        {"linear", LawCase::Linear}, {"t1c1", LawCase::T1C1}, {"t1c2", LawCase::T1C2}, {"t1c3", LawCase::T1C3},
        {"t1c4", LawCase::T1C4},     {"t1c5", LawCase::T1C5}, {"t2c1", LawCase::T2C1}, {"t2c2", LawCase::T2C2},
        {"t2c3", LawCase::T2C3},
    };
    auto it = table.find(key);
    if (it == table.end()) throw InputError("unknown law case '" + id + "'");
    return it->second;
}

std::string to_string(LawCase c)
{
    switch (c) {
    case LawCase::Linear: return "linear";
    case LawCase::T1C1: return "t1c1";
    case LawCase::T1C2: return "t1c2";
    case LawCase::T1C3: return "t1c3";
    case LawCase::T1C4: return "t1c4";
    case LawCase::T1C5: return "t1c5";
    case LawCase::T2C1: return "t2c1";
    case LawCase::T2C2: return "t2c2";
    case LawCase::T2C3: return "t2c3";
    }
    return "?";
}

namespace {

NonlinearLaw law(std::function<double(double)> f, std::function<double(double)> df, std::string label)
{
    return NonlinearLaw{std::move(f), std::move(df), std::move(label), Interval{}};
}

NonlinearLaw exp_law(double scale, std::string label)
{
    return law([scale](double x) { return scale * std::exp(x); }, [scale](double x) { return scale * std::exp(x); },
               std::move(label));
}

NonlinearLaw cube_law(double lin, double cub, std::string label)
{
    return law([lin, cub](double x) { return lin * x + cub * x * x * x; },
               [lin, cub](double x) { return lin + 3.0 * cub * x * x; }, std::move(label));
}

NonlinearLaw cbrt_law(double lin, double scale, std::string label)
{
    // d/dx cbrt(x) = (1/3)|x|^(-2/3), infinite at the origin.
    return law([lin, scale](double x) { return lin * x + scale * odd_cbrt(x); },
               [lin, scale](double x) { return lin + scale / (3.0 * std::pow(std::abs(x), 2.0 / 3.0)); },
               std::move(label));
}

NonlinearLaw pow53_law(double lin, double scale, std::string label)
{
    return law([lin, scale](double x) { return lin * x + scale * odd_pow_5_3(x); },
               [lin, scale](double x) { return lin + scale * (5.0 / 3.0) * std::pow(std::abs(x), 2.0 / 3.0); },
               std::move(label));
}

} // namespace

LawPair law_catalog(LawCase id, double biot_modulus, double lambda)
{
    if (!(biot_modulus > 0.0)) throw InputError("Biot modulus must be positive");
    const double inv_m = 1.0 / biot_modulus;
    switch (id) {
    case LawCase::Linear: return {cube_law(inv_m, 0.0, "p/M"), cube_law(lambda, 0.0, "lambda*s")};
    case LawCase::T1C1: return {exp_law(1.0, "exp(p)"), cube_law(0.0, 1.0, "s^3")};
    case LawCase::T1C2: return {cube_law(0.0, 1.0, "p^3"), cube_law(0.0, 1.0, "s^3")};
    case LawCase::T1C3: return {cbrt_law(0.0, 1.0, "cbrt(p)"), cube_law(0.0, 1.0, "s^3")};
    case LawCase::T1C4: return {cube_law(0.0, 1.0, "p^3"), pow53_law(0.0, 1.0, "cbrt(s^5)")};
    case LawCase::T1C5: return {cbrt_law(0.0, 1.0, "cbrt(p)"), pow53_law(0.0, 1.0, "cbrt(s^5)")};
    case LawCase::T2C1:
        return {cube_law(inv_m, inv_m, "(p+p^3)/M"), cube_law(lambda, lambda, "lambda*s+lambda*s^3")};
    case LawCase::T2C2:
        return {cbrt_law(inv_m, inv_m, "(p+cbrt(p))/M"), pow53_law(lambda, lambda, "lambda*s+lambda*cbrt(s^5)")};
    case LawCase::T2C3: return {exp_law(inv_m, "exp(p)/M"), pow53_law(lambda, lambda, "lambda*s+lambda*cbrt(s^5)")};
    }
    throw InputError("unknown law case");
}

DerivativeBounds estimate_constants(const NonlinearLaw& law, Interval range, int samples)
{
    if (samples < 2) throw InputError("estimate_constants needs at least two samples");
    if (!std::isfinite(range.lo) || !std::isfinite(range.hi) || range.hi < range.lo) {
        throw InputError("estimate_constants needs a finite range");
    }
    DerivativeBounds out{INFINITY, -INFINITY};
    for (int k = 0; k < samples; ++k) {
        const double x = k + 1 == samples ? range.hi : range.lo + (range.hi - range.lo) * k / (samples - 1);
        const double d = law.deriv(x);
        if (!std::isfinite(d)) {
            throw AssumptionError(law.label + ": derivative not finite at " + std::to_string(x));
        }
        if (d < 0.0) throw AssumptionError(law.label + ": decreasing at " + std::to_string(x));
        out.min = std::min(out.min, d);
        out.max = std::max(out.max, d);
    }
    return out;
}

void MaterialModel::validate() const
{
    if (!(mu > 0.0)) throw AssumptionError("shear modulus must be positive");
    if (!(nu_f > 0.0)) throw AssumptionError("fluid viscosity must be positive");
    if (!(constants.k_m > 0.0) || constants.k_M < constants.k_m) throw AssumptionError("permeability bounds invalid");
    if (constants.b_m < 0.0 || constants.L_b < constants.b_m) throw AssumptionError("b constants out of order");
    if (constants.h_m < 0.0 || constants.L_h < constants.h_m) throw AssumptionError("h constants out of order");
    if (!b_law.eval || !h_law.eval) throw AssumptionError("material laws not set");
}

MaterialModel unit_material(LawCase laws)
{
    MaterialModel m;
    auto pair = law_catalog(laws, 1.0, 1.0);
    m.b_law = std::move(pair.b);
    m.h_law = std::move(pair.h);
    return m;
}

ProblemDefinition manufactured_problem(const MaterialModel& mat)
{
    ProblemDefinition prob;
    prob.name = "manufactured";
    prob.domain = Rect{{0.0, 0.0}, {1.0, 1.0}};
    prob.final_time = 1.0;
    for (auto& s : prob.bc) {
        s.mechanics = MechanicsBcKind::Dirichlet;
        s.flow = FlowBcKind::Pressure;
    }

    // The exact flux assumes a spatially constant permeability.
    const double mobility = mat.permeability(Vec2{0.5, 0.5}) / mat.nu_f;
    const Vec2 rho_g = mat.rho_f * mat.gravity;
    const double alpha = mat.alpha;
    const double mu = mat.mu;
    const NonlinearLaw b = mat.b_law;
    const NonlinearLaw h = mat.h_law;

    struct Derivs {
        double p, px, py, pxx, pyy, pxy, pt, s, st;
    };
    auto derivs = [](Vec2 x, double t) {
        const double X = x.x * (1.0 - x.x), Y = x.y * (1.0 - x.y);
        const double dX = 1.0 - 2.0 * x.x, dY = 1.0 - 2.0 * x.y;
        Derivs d{};
        d.p = t * X * Y;
        d.px = t * dX * Y;
        d.py = t * X * dY;
        d.pxx = -2.0 * t * Y;
        d.pyy = -2.0 * t * X;
        d.pxy = t * dX * dY;
        d.pt = X * Y;
        d.s = d.px + d.py;
        d.st = dX * Y + X * dY;
        return d;
    };

    ExactSolution ex;
    ex.p = [derivs](Vec2 x, double t) { return derivs(x, t).p; };
    ex.u = [derivs](Vec2 x, double t) {
        const double p = derivs(x, t).p;
        return Vec2{p, p};
    };
    ex.div_u = [derivs](Vec2 x, double t) { return derivs(x, t).s; };
    ex.q = [derivs, mobility, rho_g](Vec2 x, double t) {
        const auto d = derivs(x, t);
        return Vec2{-mobility * (d.px - rho_g.x), -mobility * (d.py - rho_g.y)};
    };
    prob.exact = ex;

    // f = -div(2 mu eps(u)) - grad h(div u) + alpha grad p
    prob.body_force = [derivs, mu, alpha, h](Vec2 x, double t) {
        const auto d = derivs(x, t);
        const double hp = h.deriv(d.s);
        const double fx = -mu * (2.0 * d.pxx + d.pyy + d.pxy) - hp * (d.pxx + d.pxy) + alpha * d.px;
        const double fy = -mu * (d.pxx + 2.0 * d.pyy + d.pxy) - hp * (d.pxy + d.pyy) + alpha * d.py;
        return Vec2{fx, fy};
    };
    // S_f = d/dt [b(p) + alpha div u] + div q
    prob.source = [derivs, mobility, alpha, b](Vec2 x, double t) {
        const auto d = derivs(x, t);
        const double storage = d.pt == 0.0 ? 0.0 : b.deriv(d.p) * d.pt;
        return storage + alpha * d.st - mobility * (d.pxx + d.pyy);
    };
    return prob;
}

void MandelConfig::validate() const
{
    if (!(a > 0.0) || !(b > 0.0)) throw InputError("Mandel dimensions must be positive");
    if (!(poisson > 0.0 && poisson < 0.5)) throw InputError("Mandel: drained Poisson ratio outside (0, 1/2)");
    if (!(skempton > 0.0 && skempton <= 1.0)) throw InputError("Mandel: Skempton coefficient outside (0, 1]");
    if (!(poisson_undrained >= poisson && poisson_undrained < 0.5)) {
        throw InputError("Mandel: undrained Poisson ratio outside [nu, 1/2)");
    }
}

MandelConfig make_mandel_config(const MaterialModel& mat, double a, double b, double load)
{
    MandelConfig cfg;
    cfg.a = a;
    cfg.b = b;
    cfg.load = load;
    const double lambda = mat.lambda, mu = mat.mu, alpha = mat.alpha, m = mat.biot_modulus;
    cfg.poisson = lambda / (2.0 * (lambda + mu));
    cfg.bulk_drained = lambda + 2.0 * mu / 3.0;
    cfg.skempton = alpha * m / (cfg.bulk_drained + alpha * alpha * m);
    const double c = alpha * cfg.skempton * (1.0 - 2.0 * cfg.poisson);
    cfg.poisson_undrained = (3.0 * cfg.poisson + c) / (3.0 - c);
    cfg.initial_pressure = load * cfg.skempton * (1.0 + cfg.poisson_undrained) / (3.0 * a);
    cfg.validate();
    return cfg;
}

MaterialModel mandel_material(LawCase laws)
{
    MaterialModel m;
    m.alpha = 1.0;
    m.mu = 2.475e9;
    m.lambda = 1.65e9;
    m.biot_modulus = 1.65e10;
    auto pair = law_catalog(laws, m.biot_modulus, m.lambda);
    m.b_law = std::move(pair.b);
    m.h_law = std::move(pair.h);
    const double k = 100.0 * kDarcy;
    m.permeability = [k](Vec2) { return k; };
    m.nu_f = 10.0 * kCentipoise;
    m.rho_f = 1000.0;
    m.gravity = {0.0, 0.0};
    m.constants = LawConstants{1.0 / m.biot_modulus, 1.0 / m.biot_modulus, m.lambda, m.lambda, k, k};
    return m;
}

ProblemDefinition mandel_problem(const MaterialModel& mat, const MandelConfig& cfg)
{
    cfg.validate();
    ProblemDefinition prob;
    prob.name = "mandel";
    prob.domain = Rect{{0.0, 0.0}, {cfg.a, cfg.b}};
    prob.final_time = 500.0;

    const auto zero_vec = [](Vec2, double) { return Vec2{}; };
    const auto zero = [](Vec2, double) { return 0.0; };
    auto& left = prob.side(Side::Left);
    left.mechanics = MechanicsBcKind::NormalDirichlet;
    left.displacement = zero_vec;
    left.flow = FlowBcKind::Flux;
    left.flow_value = zero;
    auto& bottom = prob.side(Side::Bottom);
    bottom.mechanics = MechanicsBcKind::NormalDirichlet;
    bottom.displacement = zero_vec;
    bottom.flow = FlowBcKind::Flux;
    bottom.flow_value = zero;
    auto& right = prob.side(Side::Right);
    right.mechanics = MechanicsBcKind::Traction;
    right.flow = FlowBcKind::Pressure;
    right.flow_value = zero;
    auto& top = prob.side(Side::Top);
    top.mechanics = MechanicsBcKind::TiedNormal;
    // The plate pushes down, against the outward normal.
    top.tied_load = -cfg.load;
    top.flow = FlowBcKind::Flux;
    top.flow_value = zero;

    // Undrained response to the instantaneous load (standard form with 1/a in
    // both displacement components).
    const double p0 = cfg.initial_pressure;
    const double ux = cfg.load * cfg.poisson_undrained / (2.0 * mat.mu * cfg.a);
    const double uy = -cfg.load * (1.0 - cfg.poisson_undrained) / (2.0 * mat.mu * cfg.a);
    prob.initial.p = [p0](Vec2) { return p0; };
    prob.initial.q = [](Vec2) { return Vec2{}; };
    prob.initial.u = [ux, uy](Vec2 x) { return Vec2{ux * x.x, uy * x.y}; };
    return prob;
}

Interval padded_range(double lo, double hi, double pad)
{
    if (hi < lo) std::swap(lo, hi);
    return Interval{lo - pad * std::abs(lo), hi + pad * std::abs(hi)};
}

LawConstants estimate_law_constants(const MaterialModel& mat, Interval p_range, Interval divu_range, int samples)
{
    LawConstants c = mat.constants;
    const auto b = estimate_constants(mat.b_law, p_range, samples);
    const auto h = estimate_constants(mat.h_law, divu_range, samples);
    c.b_m = b.min;
    c.L_b = b.max;
    c.h_m = h.min;
    c.L_h = h.max;
    return c;
}

} // namespace porobiot
