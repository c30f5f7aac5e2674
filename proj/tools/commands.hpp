#pragma once

#include "config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace deeptrend::cli {

/// Options shared by the config-driven commands.
struct RunOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed; // overrides the config seed
    std::optional<std::filesystem::path> out;
    std::size_t jobs = 1;
};

/// Loads the config and applies the command-line overrides.
ExperimentConfig resolve_config(const RunOptions& options);

/// Writes a synthetic flow table described by the [synthetic] section of `spec_file`.
void cmd_generate(const std::filesystem::path& spec_file, const std::filesystem::path& out_csv,
                  std::optional<std::uint64_t> seed, std::ostream& log);

/// Writes `<prefix>trend.csv` (slot,value) and `<prefix>residual.csv`
/// (timestamp,flow,trend,residual) for one station, using every whole week.
void cmd_detrend(const std::filesystem::path& in_csv, const std::string& station,
                 const std::string& out_prefix, double max_missing_fraction, std::ostream& log);

/// Trains every configured (station, model) pair and writes
/// checkpoints/<station>__<model>.ckpt, losses/<station>__<model>.csv and a
/// checkpoint manifest.
void cmd_train(const RunOptions& options, std::ostream& log);

/// Loads the checkpoints written by cmd_train for the same config and writes
/// metrics.csv and cdf/<metric>__<model>.csv.
void cmd_evaluate(const RunOptions& options, std::ostream& log);

/// Trains and evaluates in one pass; writes metrics.csv, normalized.csv,
/// cdf/<metric>__<model>.csv and summary.csv (metric rows, model columns,
/// averaged over stations).
void cmd_compare(const RunOptions& options, std::ostream& log);

/// CLI entry point; returns the process exit code. Errors are reported on
/// `err` as a single `deeptrend: error: <message>` line.
int run_cli(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

} // namespace deeptrend::cli
