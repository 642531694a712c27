#pragma once

#include "fdelab/io.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fdelab {

/// Settings shared by every subcommand.
struct RunContext {
    std::filesystem::path out_dir = ".";
    int threads = 1;
};

/// ParamSet and Regime for one triple, as printed by `fdelab params`.
[[nodiscard]] Json cmd_params(int n, double m, double beta);

/// Solves one profile per lambda in the config and writes
/// profile_<lambda>.csv, trace_<lambda>.csv and fit_<lambda>.json.
/// With two or more lambdas it adds scaling_check.json. Returns the summary
/// document that is also written to profile_summary.json.
[[nodiscard]] Json cmd_profile(const Json& config, const RunContext& ctx);

/// Runs the rescaled evolution and writes report.csv plus the optional
/// contraction.csv, envelope_scan.csv and evolve_summary.json.
[[nodiscard]] Json cmd_evolve(const Json& config, const RunContext& ctx);

/// Batch studies: the regime table, a grid-refinement stationarity study,
/// and the truncated L1 distance of two profiles against the radius.
[[nodiscard]] Json cmd_sweep(const Json& config, const RunContext& ctx);

/// Full command line. Prints JSON summaries to `out` and errors to `err`,
/// returning the process exit code (0, 1 usage, 2 input, 3 solver).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace fdelab
