#pragma once

#include "gzsl/tensor.hpp"

namespace gzsl {

// Spatial-temporal primitives over skeleton tensors laid out as
// [B x C x T x V] (batch, channel, frame, joint). Rank-3 [C x T x V] inputs
// are accepted where noted and treated as a batch of one.

/// Convolution along the time axis, applied independently at every joint.
///
/// kernel is [C_out x C_in x K] with K odd; the time axis is zero padded by
/// (K-1)/2 on both ends and the output has ceil(T / stride) frames.
Tensor temporal_conv1d(const Tensor& x, const Tensor& kernel, Index stride);

// Per frame: out[:, t, :] = w * x[:, t, :] * a_norm, with w [C_out x C_in].
Tensor graph_conv(const Tensor& x, const Tensor& a_norm, const Tensor& w);

// x[B x C x T x V] + bias[C].
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);

struct BatchNormState {
  explicit BatchNormState(Index channels = 0)
      : running_mean(Eigen::VectorXd::Zero(channels)),
        running_var(Eigen::VectorXd::Ones(channels)) {}

  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
  double momentum = 0.9;
  double epsilon = 1e-5;
};

/// Per-channel normalization of [B x C x T x V] (over B, T, V) or [B x C]
/// (over B). Training mode normalizes with batch statistics and folds them
/// into the running estimates; inference mode uses the running estimates.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  BatchNormState& state, bool training);

/// Mean over frames and joints of [B x C x T x V] -> [B x C]. When a
/// [B x T] mask is given only frames with a non-zero mask entry are averaged.
Tensor global_avg_pool(const Tensor& x, const Eigen::MatrixXd* frame_mask = nullptr);

}  // namespace gzsl
