#pragma once

#include "gzsl/run_config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace gzsl {

// Output root: the explicit flag, then GZSL_GESTURE_OUT, then the config's
// output_dir, then ./runs.
std::filesystem::path output_root(const RunConfig& config,
                                  const std::optional<std::filesystem::path>& flag);

/// Creates <root>/<UTC timestamp>-<config hash> and writes config.txt and
/// run.json into it.
std::filesystem::path create_run_dir(const RunConfig& config, const std::filesystem::path& root,
                                     const std::string& command);

// Most recent run directory under root whose name ends in the config hash.
std::optional<std::filesystem::path> find_run_dir(const RunConfig& config,
                                                  const std::filesystem::path& root);

// Each command reads its prerequisites from run_dir and writes its outputs
// there. Missing prerequisites raise IoError naming the absent file.
std::filesystem::path cmd_synth(const RunConfig& config, const std::filesystem::path& run_dir);
std::filesystem::path cmd_features(const RunConfig& config, const std::filesystem::path& run_dir);
void cmd_train_fs(const RunConfig& config, const std::filesystem::path& run_dir, int jobs);
void cmd_extract(const RunConfig& config, const std::filesystem::path& run_dir);
void cmd_train_zsl(const RunConfig& config, const std::filesystem::path& run_dir, int jobs);
GzslReport cmd_eval(const RunConfig& config, const std::filesystem::path& run_dir);
// Validates report.json and renders a summary table.
std::string cmd_report(const std::filesystem::path& report_json);
// Every stage in one process.
GzslReport cmd_run(const RunConfig& config, const std::filesystem::path& run_dir, int jobs);

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace gzsl
