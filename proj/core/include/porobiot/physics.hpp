#pragma once

#include "porobiot/mesh.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>

namespace porobiot {

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    [[nodiscard]] bool contains(double x) const { return x >= lo && x <= hi; }
};

/// A monotone scalar law b(p) or h(div u) with its derivative.
struct NonlinearLaw {
    std::function<double(double)> eval;
    std::function<double(double)> deriv;
    std::string label;
    Interval admissible_range;

    double operator()(double x) const { return eval(x); }
};

/// Coefficient pairs from the two benchmark catalogs plus the linear model.
enum class LawCase { Linear, T1C1, T1C2, T1C3, T1C4, T1C5, T2C1, T2C2, T2C3 };

LawCase parse_law_case(const std::string& id);
std::string to_string(LawCase c);

struct LawPair {
    NonlinearLaw b;
    NonlinearLaw h;
};

/// b and h for a case. M (Biot modulus) and lambda only enter the linear and
/// Mandel-type cases.
LawPair law_catalog(LawCase id, double biot_modulus = 1.0, double lambda = 1.0);

/// Real cube root and x^(5/3), extended to negative arguments as odd functions.
double odd_cbrt(double x);
double odd_pow_5_3(double x);

struct DerivativeBounds {
    double min;
    double max;
};

/// (min, max) of law.deriv on a uniform grid over the range. Throws
/// AssumptionError when a sampled derivative is negative or not finite.
DerivativeBounds estimate_constants(const NonlinearLaw& law, Interval range, int samples);

/// Lipschitz and monotonicity constants of the laws and bounds on K.
struct LawConstants {
    double L_b = 1.0;
    double b_m = 1.0;
    double L_h = 1.0;
    double h_m = 1.0;
    double k_m = 1.0;
    double k_M = 1.0;
};

struct MaterialModel {
    double alpha = 1.0;
    double mu = 1.0;
    // Kept for presets and derived quantities; the laws carry the physics.
    double lambda = 1.0;
    double biot_modulus = 1.0;
    NonlinearLaw b_law;
    NonlinearLaw h_law;
    std::function<double(Vec2)> permeability = [](Vec2) { return 1.0; };
    double nu_f = 1.0;
    double rho_f = 1.0;
    Vec2 gravity{0.0, 0.0};
    LawConstants constants;

    /// Throws AssumptionError when mu <= 0, the permeability bounds are
    /// inconsistent, or constants are out of order.
    void validate() const;
};

/// Linear model with all parameters equal to one except where overridden.
MaterialModel unit_material(LawCase laws = LawCase::Linear);

enum class MechanicsBcKind {
    Dirichlet,       // both components prescribed
    NormalDirichlet, // u.n prescribed, tangential traction free
    Traction,        // natural, sigma.n = 0
    TiedNormal,      // u.n equal along the side (rigid plate), total load applied
};

enum class FlowBcKind {
    Flux,     // q.n prescribed (essential in mixed form)
    Pressure, // p prescribed (natural in mixed form)
};

using SpaceTimeScalar = std::function<double(Vec2, double)>;
using SpaceTimeVector = std::function<Vec2(Vec2, double)>;

struct SideBc {
    MechanicsBcKind mechanics = MechanicsBcKind::Dirichlet;
    // Dirichlet: the full vector; NormalDirichlet: the outward-normal component
    // is taken from it.
    SpaceTimeVector displacement = [](Vec2, double) { return Vec2{}; };
    // TiedNormal: total force along the outward normal per unit depth.
    double tied_load = 0.0;
    FlowBcKind flow = FlowBcKind::Pressure;
    SpaceTimeScalar flow_value = [](Vec2, double) { return 0.0; };
};

struct ExactSolution {
    SpaceTimeScalar p;
    SpaceTimeVector q;
    SpaceTimeVector u;
    SpaceTimeScalar div_u;
};

struct InitialState {
    std::function<Vec2(Vec2)> u = [](Vec2) { return Vec2{}; };
    std::function<Vec2(Vec2)> q = [](Vec2) { return Vec2{}; };
    std::function<double(Vec2)> p = [](Vec2) { return 0.0; };
};

struct ProblemDefinition {
    std::string name;
    Rect domain;
    double final_time = 1.0;
    // Indexed by static_cast<int>(Side).
    std::array<SideBc, 4> bc;
    InitialState initial;
    SpaceTimeVector body_force = [](Vec2, double) { return Vec2{}; };
    SpaceTimeScalar source = [](Vec2, double) { return 0.0; };
    std::optional<ExactSolution> exact;

    [[nodiscard]] const SideBc& side(Side s) const { return bc[static_cast<std::size_t>(s)]; }
    SideBc& side(Side s) { return bc[static_cast<std::size_t>(s)]; }
};

/// Unit square, T = 1, homogeneous data, exact solution
/// p = u_x = u_y = t x(1-x) y(1-y), q = -(K/nu_f) grad p, with f and S_f
/// obtained by differentiating the exact fields through the material laws.
ProblemDefinition manufactured_problem(const MaterialModel& mat);

struct MandelConfig {
    double a = 100.0;
    double b = 10.0;
    double load = 1.0e4; // F, N/m

    // Derived from the material through standard poroelastic relations.
    double poisson = 0.0;           // drained nu
    double bulk_drained = 0.0;      // K_dr = lambda + 2 mu / 3
    double skempton = 0.0;          // B
    double poisson_undrained = 0.0; // nu_u
    double initial_pressure = 0.0;  // F B (1 + nu_u) / (3a)

    void validate() const;
};

MandelConfig make_mandel_config(const MaterialModel& mat, double a = 100.0, double b = 10.0, double load = 1.0e4);

/// Mandel benchmark material in SI units (100 D, 10 cP), with laws of the
/// chosen case (Linear or T2C1..T2C3).
MaterialModel mandel_material(LawCase laws = LawCase::Linear);

/// Darcy to m^2.
inline constexpr double kDarcy = 9.869233e-13;
/// Centipoise to Pa s.
inline constexpr double kCentipoise = 1.0e-3;

/// Quarter-domain Mandel problem [0,a] x [0,b] with the rigid plate on top.
ProblemDefinition mandel_problem(const MaterialModel& mat, const MandelConfig& cfg);

/// Observed range of values, widened by a relative padding of each endpoint.
Interval padded_range(double lo, double hi, double pad);

/// Constants for both laws over observed ranges of p and div u.
LawConstants estimate_law_constants(const MaterialModel& mat, Interval p_range, Interval divu_range, int samples = 2001);

} // namespace porobiot
