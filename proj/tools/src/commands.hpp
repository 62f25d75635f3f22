#pragma once

#include "config.hpp"

#include "porobiot/bench.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace porobiot::cli {

enum ExitCode : int {
    kSuccess = 0,
    kCheckFailed = 1,
    kConfigError = 2,
    kSolverFailure = 3,
};

/// Problem-preset material with every non-"auto" material key applied.
MaterialModel build_material(const Config& cfg);

/// Material, problem factory, mesh counts, tau and scheme settings. L1/L2 in
/// the returned scheme are left at their defaults; see resolve_l.
RunSetup build_setup(const Config& cfg);

/// Time steps of a march: problem.steps, or final time / tau.
int step_count(const Config& cfg);

/// Scalar (L1, L2) for a single-run scheme. Preset names resolve over the
/// observed constants of the first step.
LPair resolve_l(const Config& cfg, const RunSetup& setup, SchemeKind kind);

/// L grids for a sweep; preset names become single-value grids.
std::pair<std::vector<double>, std::vector<double>> resolve_l_grid(const Config& cfg, const RunSetup& setup);

/// Runs one subcommand against a resolved config and writes artifacts plus
/// manifest.json into output.dir. `argv_text` is recorded in the manifest.
int run_command(const std::string& command, const Config& cfg, const std::string& argv_text, std::ostream& log);

/// Full entry point: argument parsing, config layering, dispatch.
int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

} // namespace porobiot::cli
