#pragma once

#include "gzsl/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gzsl {

struct NamedArray {
  std::string name;
  Shape shape;
  Eigen::VectorXd values;
};

/// Model state on disk.
///
/// Layout: the line `GZSLCKPT 1`, one line of JSON describing the arrays
/// (kind, config, seed, names and shapes, payload size), then every array's
/// float64 values in little-endian byte order, concatenated in header order.
struct Checkpoint {
  std::string kind;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<NamedArray> arrays;

  void add(std::string name, const Tensor& t) { arrays.push_back({std::move(name), t.shape(), t.values()}); }
  void add(std::string name, const Eigen::VectorXd& v) {
    arrays.push_back({std::move(name), {v.size()}, v});
  }

  // Throws LookupError when absent.
  const NamedArray& get(const std::string& name) const;

  // Copies the named array into target after checking that shapes agree.
  void restore(const std::string& name, Tensor& target) const;
  void restore(const std::string& name, Eigen::VectorXd& target) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gzsl
