#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include "vpgd/config.hpp"

namespace vpgd {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNotConverged = 3 };

/// Oracle run: traces.csv, u_mid.csv, u_field.csv, z_field_<j>.csv, report.json, manifest.json.
int cmd_solve_reference(const RunConfig& config, const std::filesystem::path& out);

/// PGD run in the configured time mode. Adds stagnation.csv, mode files and the solver report.
/// Returns kExitNotConverged (report still written) when the outer loop hits its cap.
int cmd_solve_pgd(const RunConfig& config, const std::filesystem::path& out);

/// Standalone multi-scale fit of a two-column CSV (time, value) on a uniform grid from t = 0.
int cmd_fit_signal(const std::filesystem::path& signal, const RunConfig& config,
                   const std::filesystem::path& out);

/// Relative space-time error of run A against run B (u and each shared z field).
int cmd_compare(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                const std::filesystem::path& out);

/// Times the oracle and both PGD variants on one problem; writes bench.csv (3 rows).
int cmd_bench(const RunConfig& config, const std::filesystem::path& out);

/// Runs `body`, mapping library errors to exit codes with a message on `err`.
int run_guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace vpgd
