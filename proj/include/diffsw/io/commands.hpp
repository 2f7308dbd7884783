#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "diffsw/io/config.hpp"

namespace diffsw::io {

struct CommandOptions {
  std::filesystem::path out;
  bool force = false;                         // replace an existing output directory
  std::optional<std::filesystem::path> init;  // run only: start from this snapshot
};

ad::DiffSelector gradcheck_selector(const GradcheckConfig& c);

/// Creates `dir`. An existing non-empty directory is an error unless `force`,
/// in which case its contents are removed first.
void prepare_output_dir(const std::filesystem::path& dir, bool force);

/// Experiment drivers behind the CLI subcommands. Each writes
/// config.resolved, its CSVs and snapshots into o.out, and a short summary
/// to `log`.
void command_run(const RunConfig& c, const CommandOptions& o, std::ostream& log);
void command_gradcheck(const RunConfig& c, const CommandOptions& o, std::ostream& log);
void command_reconstruct(const RunConfig& c, const CommandOptions& o, std::ostream& log);
void command_calibrate(const RunConfig& c, const CommandOptions& o, std::ostream& log);
void command_sensitivity(const RunConfig& c, const CommandOptions& o, std::ostream& log);
void command_benchmark(const RunConfig& c, const CommandOptions& o, std::ostream& log);

}  // namespace diffsw::io
