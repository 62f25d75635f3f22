#include "commands.hpp"

#include "porobiot/errors.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifndef POROBIOT_VERSION
#define POROBIOT_VERSION "unknown"
#endif

namespace porobiot::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_mandel(const Config& cfg)
{
    const auto& kind = cfg.str("problem.kind");
    if (kind == "mandel") return true;
    if (kind == "manufactured") return false;
    throw ConfigurationError("problem.kind must be 'manufactured' or 'mandel', got '" + kind + "'");
}

// Mandel runs default to 1 s steps unless tau was set explicitly.
double effective_tau(const Config& cfg)
{
    if (is_mandel(cfg) && cfg.source("problem.tau") == Source::Default) return 1.0;
    const double tau = cfg.real("problem.tau");
    if (!(tau > 0.0)) throw ConfigurationError("problem.tau must be positive");
    return tau;
}

double default_final_time(const Config& cfg) { return is_mandel(cfg) ? 500.0 : 1.0; }

SchemeConfig build_scheme(const Config& cfg)
{
    SchemeConfig s;
    s.kind = parse_scheme_kind(cfg.str("scheme.kind"));
    s.tol = cfg.real("scheme.tol");
    s.max_iter = cfg.integer("scheme.max_iter");
    s.divergence_factor = cfg.real("scheme.divergence_factor");
    const auto& linear = cfg.str("solver.linear");
    if (linear == "direct") s.linear = LinearSolverKind::Direct;
    else if (linear == "gmres") s.linear = LinearSolverKind::Gmres;
    else throw ConfigurationError("solver.linear must be 'direct' or 'gmres', got '" + linear + "'");
    s.gmres.restart = cfg.integer("solver.gmres_restart");
    s.gmres.tol = cfg.real("solver.gmres_tol");
    s.gmres.max_iterations = cfg.integer("solver.gmres_max_iter");
    return s;
}

int thread_count(const Config& cfg)
{
    const int n = cfg.integer("solver.threads");
    return n > 0 ? n : worker_count();
}

LawConstants first_step_constants(const RunSetup& setup)
{
    const auto problem = setup.problem(setup.material);
    auto mesh = std::make_shared<const Mesh>(generate_rect_mesh(problem.domain.origin, problem.domain.extent, setup.nx, setup.ny));
    const Discretization disc = discretize(mesh, setup.material, problem);
    return observed_constants(disc, setup.material, problem, initial_state(disc, problem), setup.tau);
}

json constants_json(const LawConstants& c)
{
    return {{"L_b", c.L_b}, {"b_m", c.b_m}, {"L_h", c.L_h}, {"h_m", c.h_m}, {"k_m", c.k_m}, {"k_M", c.k_M}};
}

// nlohmann rejects NaN/inf as numbers; store them as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path);
    if (!out) throw ConfigurationError("cannot write '" + path.string() + "'");
    return out;
}

struct Artifacts {
    fs::path dir;
    json outputs = json::array();
    json results = json::object();

    std::ofstream open(const std::string& name)
    {
        outputs.push_back(name);
        return open_output(dir / name);
    }
};

void write_traces(Artifacts& art, const std::string& name, const std::vector<IterationTrace>& traces, const Config& cfg)
{
    if (!cfg.flag("output.trace")) return;
    auto out = art.open(name);
    write_trace_csv(out, traces, cfg.flag("output.timings"));
}

int run_manufactured(const Config& cfg, Artifacts& art, std::ostream& log)
{
    RunSetup setup = build_setup(cfg);
    const auto L = resolve_l(cfg, setup, setup.scheme.kind);
    setup.scheme.L1 = L.L1;
    setup.scheme.L2 = L.L2;
    const int levels = cfg.integer("problem.refinements");
    if (levels < 1) throw ConfigurationError("problem.refinements must be at least 1");
    const int steps = step_count(cfg);
    std::vector<int> nx, st;
    for (int k = 0; k < levels; ++k) {
        nx.push_back(setup.nx << k);
        st.push_back(steps << k);
    }
    std::vector<std::vector<IterationTrace>> traces;
    const auto report = manufactured_convergence(setup, nx, st, &traces);
    {
        auto out = art.open("errors.csv");
        write_errors_csv(out, report);
    }
    for (std::size_t k = 0; k < traces.size(); ++k)
        write_traces(art, levels == 1 ? "trace.csv" : "trace_" + std::to_string(k) + ".csv", traces[k], cfg);

    json rows = json::array();
    bool all_converged = true;
    for (std::size_t k = 0; k < report.entries.size(); ++k) {
        const auto& e = report.entries[k];
        int iters = 0;
        for (const auto& t : traces[k]) {
            iters += t.iterations;
            all_converged = all_converged && t.converged;
        }
        rows.push_back({{"h", e.h},
                        {"tau", e.tau},
                        {"err_p", e.err_p},
                        {"err_u", e.err_u},
                        {"err_divu", e.err_divu},
                        {"err_q", e.err_q},
                        {"order_p", num(report.order_p[k])},
                        {"order_u", num(report.order_u[k])},
                        {"iterations", iters}});
        log << "h=" << e.h << " tau=" << e.tau << " err_p=" << e.err_p << " err_u=" << e.err_u << " err_q=" << e.err_q
            << " iterations=" << iters << '\n';
    }
    art.results = {{"L1", L.L1}, {"L2", L.L2}, {"runs", rows}, {"all_steps_converged", all_converged}};
    if (!all_converged) log << "warning: some time steps stopped before the tolerance\n";
    return kSuccess;
}

int run_mandel(const Config& cfg, Artifacts& art, std::ostream& log)
{
    RunSetup setup = build_setup(cfg);
    const auto L = resolve_l(cfg, setup, setup.scheme.kind);
    setup.scheme.L1 = L.L1;
    setup.scheme.L2 = L.L2;
    const int steps = step_count(cfg);
    const auto problem = setup.problem(setup.material);
    auto mesh = std::make_shared<const Mesh>(generate_rect_mesh(problem.domain.origin, problem.domain.extent, setup.nx, setup.ny));
    const auto run = time_march(problem, mesh, setup.material, setup.scheme, setup.tau, steps);
    const Vec2 probe{cfg.real("problem.probe_x"), cfg.real("problem.probe_y")};
    const auto series = mandel_report(run.states, probe);
    {
        auto out = art.open("mandel.csv");
        write_mandel_csv(out, series);
    }
    write_traces(art, "trace.csv", run.traces, cfg);

    const auto mc = make_mandel_config(setup.material, cfg.real("problem.mandel_a"), cfg.real("problem.mandel_b"), cfg.real("problem.load"));
    int unconverged = 0, iters = 0;
    for (const auto& t : run.traces) {
        iters += t.iterations;
        if (!t.converged) ++unconverged;
    }
    art.results = {{"L1", L.L1},
                   {"L2", L.L2},
                   {"load", mc.load},
                   {"skempton", mc.skempton},
                   {"poisson", mc.poisson},
                   {"poisson_undrained", mc.poisson_undrained},
                   {"p0", mc.initial_pressure},
                   {"probe", {probe.x, probe.y}},
                   {"peak", series.peak},
                   {"peak_time", series.peak_time},
                   {"final", series.final_value},
                   {"total_iterations", iters},
                   {"unconverged_steps", unconverged}};
    log << "p0=" << mc.initial_pressure << " peak=" << series.peak << " at t=" << series.peak_time
        << " final=" << series.final_value << " iterations=" << iters << '\n';
    if (unconverged > 0) log << "warning: " << unconverged << " steps stopped before the tolerance\n";
    return kSuccess;
}

int run_sweep(const Config& cfg, Artifacts& art, std::ostream& log)
{
    const RunSetup setup = build_setup(cfg);
    const auto [L1, L2] = resolve_l_grid(cfg, setup);
    const auto grid = sweep_L(setup, L1, L2, thread_count(cfg));
    {
        auto out = art.open("sweep.csv");
        write_sweep_csv(out, grid);
    }
    const auto c = first_step_constants(setup);
    art.results = {{"cells", grid.cells.size()}, {"constants", constants_json(c)}};
    if (const auto* best = grid.argmin()) {
        art.results["argmin"] = {{"L1", best->L1}, {"L2", best->L2}, {"iters", best->iters}};
        log << "fastest: L1=" << best->L1 << " L2=" << best->L2 << " iterations=" << best->iters << '\n';
    } else {
        art.results["argmin"] = nullptr;
        log << "no cell converged\n";
    }
    log << "observed constants: L_b=" << c.L_b << " L_h=" << c.L_h << '\n';
    return kSuccess;
}

int run_sensitivity(const Config& cfg, Artifacts& art, std::ostream& log)
{
    RunSetup setup = build_setup(cfg);
    const auto L = resolve_l(cfg, setup, setup.scheme.kind);
    setup.scheme.L1 = L.L1;
    setup.scheme.L2 = L.L2;
    const auto axis = parse_axis(cfg.str("problem.axis"));
    const auto values = parse_grid("problem.values", cfg.str("problem.values"));
    const auto rows = sensitivity_grid(setup, axis, values, thread_count(cfg));
    {
        auto out = art.open("sensitivity.csv");
        write_sensitivity_csv(out, rows);
    }
    json jr = json::array();
    for (const auto& r : rows) {
        jr.push_back({{"value", r.value}, {"iters", r.iters}, {"status", r.status}});
        log << to_string(axis) << '=' << r.value << " iterations=" << r.iters << ' ' << r.status << '\n';
    }
    art.results = {{"axis", to_string(axis)}, {"L1", L.L1}, {"L2", L.L2}, {"rows", jr}};
    return kSuccess;
}

int run_verify(const Config& cfg, Artifacts& art, std::ostream& log)
{
    const RunSetup setup = build_setup(cfg);
    const auto check = cross_verify(setup, resolve_l(cfg, setup, SchemeKind::Splitting), resolve_l(cfg, setup, SchemeKind::Monolithic));
    const double tol = setup.scheme.tol;

    struct Row {
        std::string name;
        double value;
        double threshold;
        std::string verdict;
    };
    std::vector<Row> rows;
    auto bound = [&](const std::string& name, double v, double limit) {
        rows.push_back({name, v, limit, v <= limit ? "pass" : "fail"});
    };
    for (const auto* s : {&check.splitting, &check.monolithic}) {
        const auto id = to_string(s->kind);
        rows.push_back({id + "_converged", static_cast<double>(s->trace.iterations), static_cast<double>(setup.scheme.max_iter),
                        s->trace.converged ? "pass" : "fail"});
        bound(id + "_residual_mechanics", s->residual.mechanics, 10.0 * tol);
        bound(id + "_residual_darcy", s->residual.darcy, 10.0 * tol);
        bound(id + "_residual_mass", s->residual.mass, 10.0 * tol);
        rows.push_back({id + "_contraction_" + s->contraction.functional, static_cast<double>(s->contraction.first_violation),
                        s->contraction.floor,
                        !s->theorem_safe ? "skipped" : (s->contraction.monotone ? "pass" : "fail")});
    }
    bound("agreement_p", check.diff_p, 100.0 * tol);
    bound("agreement_q", check.diff_q, 100.0 * tol);
    bound("agreement_u", check.diff_u, 100.0 * tol);
    {
        auto out = art.open("verify.csv");
        out << std::setprecision(12) << "check,value,threshold,verdict\n";
        for (const auto& r : rows) out << r.name << ',' << r.value << ',' << r.threshold << ',' << r.verdict << '\n';
    }
    bool ok = true;
    json jr = json::object();
    for (const auto& r : rows) {
        ok = ok && r.verdict != "fail";
        jr[r.name] = {{"value", num(r.value)}, {"threshold", r.threshold}, {"verdict", r.verdict}};
        log << std::left << std::setw(34) << r.name << ' ' << r.verdict << " (" << r.value << " vs " << r.threshold << ")\n";
    }
    art.results = {{"constants", constants_json(check.constants)},
                   {"splitting_L", {check.splitting.L.L1, check.splitting.L.L2}},
                   {"monolithic_L", {check.monolithic.L.L1, check.monolithic.L.L2}},
                   {"checks", jr},
                   {"passed", ok}};
    return ok ? kSuccess : kCheckFailed;
}

std::string eigen_version()
{
    return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION);
}

} // namespace

MaterialModel build_material(const Config& cfg)
{
    const auto laws = parse_law_case(cfg.str("laws.case"));
    MaterialModel m = is_mandel(cfg) ? mandel_material(laws) : unit_material(laws);
    bool relaw = false;
    auto take = [&](const char* key, double& field) {
        if (cfg.is_auto(key)) return false;
        field = cfg.real(key);
        return true;
    };
    take("material.alpha", m.alpha);
    take("material.mu", m.mu);
    relaw |= take("material.lambda", m.lambda);
    relaw |= take("material.biot_modulus", m.biot_modulus);
    take("material.nu_f", m.nu_f);
    take("material.rho_f", m.rho_f);
    take("material.gravity_x", m.gravity.x);
    take("material.gravity_y", m.gravity.y);
    if (!cfg.is_auto("material.permeability")) {
        const double k = cfg.real("material.permeability");
        m.permeability = [k](Vec2) { return k; };
        m.constants.k_m = m.constants.k_M = k;
    }
    if (relaw) {
        if (!(m.biot_modulus > 0.0)) throw ConfigurationError("material.biot_modulus must be positive");
        auto pair = law_catalog(laws, m.biot_modulus, m.lambda);
        m.b_law = std::move(pair.b);
        m.h_law = std::move(pair.h);
        if (laws == LawCase::Linear) {
            m.constants.L_b = m.constants.b_m = 1.0 / m.biot_modulus;
            m.constants.L_h = m.constants.h_m = m.lambda;
        }
    }
    m.validate();
    return m;
}

int step_count(const Config& cfg)
{
    const int steps = cfg.integer("problem.steps");
    if (steps < 0) throw ConfigurationError("problem.steps must be non-negative");
    if (steps > 0) return steps;
    const double T = default_final_time(cfg);
    const double tau = effective_tau(cfg);
    const long n = std::lround(T / tau);
    if (n < 1 || std::abs(static_cast<double>(n) * tau - T) > 1e-9 * T)
        throw ConfigurationError("problem.tau does not divide the final time; set problem.steps");
    return static_cast<int>(n);
}

RunSetup build_setup(const Config& cfg)
{
    RunSetup s;
    s.material = build_material(cfg);
    s.tau = effective_tau(cfg);
    s.scheme = build_scheme(cfg);
    s.scheme.validate();
    const double final_time = s.tau * step_count(cfg);
    if (is_mandel(cfg)) {
        const double a = cfg.real("problem.mandel_a"), b = cfg.real("problem.mandel_b"), load = cfg.real("problem.load");
        s.problem = [a, b, load, final_time](const MaterialModel& m) {
            auto p = mandel_problem(m, make_mandel_config(m, a, b, load));
            p.final_time = final_time;
            return p;
        };
        s.nx = cfg.integer("problem.nx") > 0 ? cfg.integer("problem.nx") : 40;
        s.ny = cfg.integer("problem.ny") > 0 ? cfg.integer("problem.ny") : 40;
    } else {
        s.problem = [final_time](const MaterialModel& m) {
            auto p = manufactured_problem(m);
            p.final_time = final_time;
            return p;
        };
        const double h = cfg.real("problem.h");
        if (!(h > 0.0)) throw ConfigurationError("problem.h must be positive");
        s.nx = cfg.integer("problem.nx") > 0 ? cfg.integer("problem.nx") : std::max(1, static_cast<int>(std::lround(1.0 / h)));
        s.ny = cfg.integer("problem.ny") > 0 ? cfg.integer("problem.ny") : s.nx;
    }
    return s;
}

LPair resolve_l(const Config& cfg, const RunSetup& setup, SchemeKind kind)
{
    const auto& t1 = cfg.str("scheme.L1");
    const auto& t2 = cfg.str("scheme.L2");
    auto scalar = [](const char* key, const std::string& text) {
        const auto v = parse_grid(key, text);
        if (v.size() != 1) throw ConfigurationError(std::string(key) + ": a single value is needed here, got '" + text + "'");
        return v.front();
    };
    LPair out{0.0, 0.0};
    std::optional<LawConstants> c;
    auto preset = [&](const std::string& text) {
        if (!c) c = first_step_constants(setup);
        return preset_l(parse_l_preset(text), kind, setup.material, *c);
    };
    out.L1 = is_numeric(t1) ? scalar("scheme.L1", t1) : preset(t1).L1;
    out.L2 = is_numeric(t2) ? scalar("scheme.L2", t2) : preset(t2).L2;
    if (!std::isfinite(out.L1) || !std::isfinite(out.L2))
        throw ConfigurationError("the L preset is not finite for this problem (unbounded derivative); give numeric L1/L2");
    return out;
}

std::pair<std::vector<double>, std::vector<double>> resolve_l_grid(const Config& cfg, const RunSetup& setup)
{
    const auto& t1 = cfg.str("scheme.L1");
    const auto& t2 = cfg.str("scheme.L2");
    std::vector<double> g1, g2;
    if (!is_numeric(t1) || !is_numeric(t2)) {
        const auto L = resolve_l(cfg, setup, setup.scheme.kind);
        g1 = {L.L1};
        g2 = {L.L2};
    }
    if (is_numeric(t1)) g1 = parse_grid("scheme.L1", t1);
    if (is_numeric(t2)) g2 = parse_grid("scheme.L2", t2);
    return {g1, g2};
}

int run_command(const std::string& command, const Config& cfg, const std::string& argv_text, std::ostream& log)
{
    const auto start = std::chrono::steady_clock::now();
    Artifacts art;
    art.dir = cfg.str("output.dir");
    json manifest = {{"command", command}, {"argv", argv_text}};
    int code = kSuccess;
    std::string message;
    try {
        fs::create_directories(art.dir);
    } catch (const fs::filesystem_error& e) {
        log << "error: cannot create output directory: " << e.what() << '\n';
        return kConfigError;
    }
    try {
        if (command == "manufactured") code = run_manufactured(cfg, art, log);
        else if (command == "mandel") code = run_mandel(cfg, art, log);
        else if (command == "sweep") code = run_sweep(cfg, art, log);
        else if (command == "sensitivity") code = run_sensitivity(cfg, art, log);
        else if (command == "verify") code = run_verify(cfg, art, log);
        else throw ConfigurationError("unknown command '" + command + "'");
    } catch (const ConfigurationError& e) {
        code = kConfigError;
        message = e.what();
    } catch (const InputError& e) {
        code = kConfigError;
        message = e.what();
    } catch (const AssumptionError& e) {
        code = kConfigError;
        message = e.what();
    } catch (const SolverError& e) {
        code = kSolverFailure;
        message = e.what();
    } catch (const std::exception& e) {
        code = kSolverFailure;
        message = e.what();
    }
    if (!message.empty()) log << "error: " << message << '\n';

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest["status"] = code == kSuccess ? "ok" : (code == kCheckFailed ? "checks_failed" : "error");
    manifest["exit_code"] = code;
    if (!message.empty()) manifest["error"] = message;
    manifest["config"] = cfg.to_json();
    manifest["versions"] = {{"porobiot", POROBIOT_VERSION}, {"eigen", eigen_version()}, {"cli11", CLI11_VERSION}, {"compiler", __VERSION__}};
    manifest["threads"] = thread_count(cfg);
    manifest["timings"] = {{"total_seconds", seconds}};
    manifest["outputs"] = art.outputs;
    manifest["results"] = art.results;
    auto out = open_output(art.dir / "manifest.json");
    out << manifest.dump(2) << '\n';
    return code;
}

int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err)
{
    CLI::App app{"Splitting and monolithic L-scheme solvers for non-linear Biot poromechanics"};
    app.require_subcommand(1, 1);
    // --h is the mesh size.
    app.set_help_flag("--help", "Print this help message and exit");

    std::string config_path;
    std::vector<std::string> sets;
    // Flag -> config key; applied in this order, before --set.
    const std::vector<std::tuple<std::string, std::string, std::string>> mapped = {
        {"--case", "laws.case", "Law case: linear, t1c1..t1c5, t2c1..t2c3"},
        {"--nonlinear", "laws.case", "Mandel law case (linear, t2c1..t2c3)"},
        {"--problem", "problem.kind", "manufactured or mandel"},
        {"--h", "problem.h", "Mesh size of the unit-square problem"},
        {"--nx", "problem.nx", "Cells along x (overrides --h)"},
        {"--ny", "problem.ny", "Cells along y"},
        {"--tau", "problem.tau", "Time step"},
        {"--dt", "problem.tau", "Time step (alias of --tau)"},
        {"--steps", "problem.steps", "Number of time steps"},
        {"--refinements", "problem.refinements", "Refinement levels, h and tau halved each level"},
        {"--axis", "problem.axis", "Sensitivity axis: h, tau, K, alpha"},
        {"--values", "problem.values", "Sensitivity values: list or logspace(a,b,n)"},
        {"--scheme", "scheme.kind", "splitting or monolithic"},
        {"--L1", "scheme.L1", "Number, preset, or grid for sweeps"},
        {"--L2", "scheme.L2", "Number, preset, or grid for sweeps"},
        {"--tol", "scheme.tol", "Stopping tolerance on the increment sum"},
        {"--max-iter", "scheme.max_iter", "Iteration cap per time step"},
        {"--linear", "solver.linear", "direct or gmres"},
        {"--threads", "solver.threads", "Worker threads for sweeps (0: POROBIOT_THREADS or hardware)"},
        {"--out", "output.dir", "Output directory"},
    };
    std::vector<std::string> values(mapped.size());
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"manufactured", "Manufactured-solution run and error table"},
        {"mandel", "Mandel benchmark time series"},
        {"sweep", "First-step iteration counts over an (L1, L2) grid"},
        {"sensitivity", "First-step iteration counts along one parameter axis"},
        {"verify", "Cross-check both schemes, residuals and contraction on one step"},
    };
    std::vector<CLI::Option*> flag_opts;
    for (const auto& [name, desc] : commands) {
        auto* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "INI configuration file");
        sub->add_option("--set", sets, "Override section.key=value (repeatable)");
        for (std::size_t i = 0; i < mapped.size(); ++i) sub->add_option(std::get<0>(mapped[i]), values[i], std::get<2>(mapped[i]));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, log, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, log, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, log, err);
        return kConfigError;
    }
    const auto* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();

    Config cfg = Config::defaults();
    try {
        if (!config_path.empty()) cfg.load_file(config_path);
        for (std::size_t i = 0; i < mapped.size(); ++i)
            if (sub->count(std::get<0>(mapped[i])) > 0) cfg.set(std::get<1>(mapped[i]), values[i], Source::Override);
        for (const auto& s : sets) cfg.apply_override(s);
        if (command == "manufactured" || command == "mandel") cfg.set("problem.kind", command, Source::Override);
    } catch (const ConfigurationError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }

    std::string argv_text;
    for (int i = 0; i < argc; ++i) argv_text += (i ? " " : "") + std::string(argv[i]);
    return run_command(command, cfg, argv_text, log);
}

} // namespace porobiot::cli
