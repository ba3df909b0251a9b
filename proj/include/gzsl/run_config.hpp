#pragma once

#include "gzsl/gzsl_eval.hpp"
#include "gzsl/synthetic.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gzsl {

struct SynthSettings {
  int classes = 11;
  int per_class = 40;
  int frames = 60;
  double frame_rate = 30.0;
  double style_jitter = 0.08;
  double joint_noise = 0.0;
  Index embedding_dim = 16;
};

/// Everything a run depends on. Stored as flat `key = value` lines; blank
/// lines and lines starting with # are ignored. Unknown keys and malformed
/// values are errors.
struct RunConfig {
  std::string motion_file;
  std::string embedding_file;
  std::string output_dir;
  ExperimentConfig experiment;
  SynthSettings synth;

  // Sets one key from its text form. Throws ConfigError.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  // Canonical text: every key in a fixed order.
  std::string serialize() const;
  // hash_text of serialize().
  std::string hash() const;

  static const std::vector<std::string>& keys();
};

RunConfig parse_run_config(std::istream& in, const std::string& source = "<stream>");
RunConfig load_run_config(const std::filesystem::path& path);
// Applies the lines of a config on top of an existing one.
void merge_run_config(RunConfig& config, std::istream& in, const std::string& source);

SynthConfig synth_config(const RunConfig& config);

}  // namespace gzsl
