#pragma once

#include "gzsl/tensor.hpp"

#include <span>
#include <vector>

namespace gzsl {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment estimates for one parameter tensor.
struct AdamState {
  AdamState() = default;
  AdamState(Index size, const AdamConfig& config);

  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update per parameter, then zeroes the gradients.
/// Throws ContractError when a parameter has no gradient.
void adam_step(std::span<Tensor> params, std::span<AdamState> states);

// Owns the states for a fixed parameter list.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Tensor> params, const AdamConfig& config);

  void step() { adam_step(params_, states_); }
  void zero_grad();
  const std::vector<Tensor>& params() const { return params_; }
  const std::vector<AdamState>& states() const { return states_; }

 private:
  std::vector<Tensor> params_;
  std::vector<AdamState> states_;
};

}  // namespace gzsl
