#pragma once

#include "gzsl/tensor.hpp"

#include <span>

namespace gzsl {

// Differentiable primitives. Every op records its backward rule on the active
// tape and rejects non-finite inputs with NumericError.

// [M x K] * [K x N] -> [M x N]
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise, shapes must agree.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

// x[B x N] + bias[N] broadcast over rows.
Tensor add_bias(const Tensor& x, const Tensor& bias);

// x * w + b for x[B x in], w[in x out], b[out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Concatenation of two rank-2 tensors along columns.
Tensor concat(const Tensor& a, const Tensor& b);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

// Row-wise softmax of logits[B x C]; not recorded on the tape.
RowMatrix softmax(const Tensor& logits);

// Mean of squared differences over all entries.
Tensor mse_loss(const Tensor& prediction, const Tensor& target);

// Mean over rows of -log softmax(logits)[label]. Labels must lie in [0, C).
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

// Mean binary cross-entropy of probabilities against a constant target.
// Probabilities are clamped to [1e-7, 1 - 1e-7]; clamped entries pass no gradient.
Tensor binary_cross_entropy(const Tensor& probabilities, double target);

inline constexpr double kBceClamp = 1e-7;

}  // namespace gzsl
