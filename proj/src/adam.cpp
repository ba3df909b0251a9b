#include "gzsl/adam.hpp"

#include "gzsl/errors.hpp"

#include <cmath>

namespace gzsl {

AdamState::AdamState(Index size, const AdamConfig& config)
    : m(Eigen::VectorXd::Zero(size)),
      v(Eigen::VectorXd::Zero(size)),
      learning_rate(config.learning_rate),
      beta1(config.beta1),
      beta2(config.beta2),
      epsilon(config.epsilon) {}

void adam_step(std::span<Tensor> params, std::span<AdamState> states) {
  if (params.size() != states.size()) {
    throw ContractError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                        std::to_string(states.size()) + " states");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw ContractError("adam_step: parameter " + std::to_string(i) + " of shape " +
                          shape_string(params[i].shape()) + " has no gradient");
    }
    if (states[i].m.size() != params[i].numel() || states[i].v.size() != params[i].numel()) {
      throw ContractError("adam_step: state " + std::to_string(i) + " does not match parameter");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    AdamState& s = states[i];
    const Eigen::ArrayXd g = params[i].grad().array();
    s.step += 1;
    s.m = (s.beta1 * s.m.array() + (1.0 - s.beta1) * g).matrix();
    s.v = (s.beta2 * s.v.array() + (1.0 - s.beta2) * g.square()).matrix();
    const double c1 = 1.0 - std::pow(s.beta1, double(s.step));
    const double c2 = 1.0 - std::pow(s.beta2, double(s.step));
    const Eigen::ArrayXd update =
        s.learning_rate * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.epsilon);
    params[i].mutable_values().array() -= update;
    params[i].zero_grad();
  }
}

Adam::Adam(std::vector<Tensor> params, const AdamConfig& config) : params_(std::move(params)) {
  states_.reserve(params_.size());
  for (const auto& p : params_) states_.emplace_back(p.numel(), config);
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace gzsl
