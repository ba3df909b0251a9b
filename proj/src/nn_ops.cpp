#include "gzsl/nn_ops.hpp"

#include "gzsl/errors.hpp"

#include <cmath>
#include <memory>

namespace gzsl {

using detail::accumulate_grad;
using detail::make_result;
using detail::require_finite;

namespace {

struct Geometry {
  Index batch, channels, frames, joints;
};

Geometry skeleton_geometry(const Tensor& x, const char* op) {
  if (x.rank() == 4) return {x.dim(0), x.dim(1), x.dim(2), x.dim(3)};
  if (x.rank() == 3) return {1, x.dim(0), x.dim(1), x.dim(2)};
  throw ShapeError(std::string(op) + ": expected [B x C x T x V] or [C x T x V], got " +
                   shape_string(x.shape()));
}

Shape output_shape(const Tensor& x, Index batch, Index channels, Index frames, Index joints) {
  if (x.rank() == 3) return {channels, frames, joints};
  return {batch, channels, frames, joints};
}

bool tracking(std::initializer_list<Tensor> inputs) {
  if (active_tape() == nullptr) return false;
  for (const auto& t : inputs) {
    if (t.requires_grad()) return true;
  }
  return false;
}

}  // namespace

Tensor temporal_conv1d(const Tensor& x, const Tensor& kernel, Index stride) {
  const auto [batch, c_in, frames, joints] = skeleton_geometry(x, "temporal_conv1d");
  if (kernel.rank() != 3 || kernel.dim(1) != c_in) {
    throw ShapeError("temporal_conv1d: kernel " + shape_string(kernel.shape()) +
                     " does not match input " + shape_string(x.shape()));
  }
  const Index c_out = kernel.dim(0), width = kernel.dim(2);
  if (width % 2 == 0) {
    throw ConfigError("temporal_conv1d: kernel width must be odd, got " + std::to_string(width));
  }
  if (stride < 1) throw ConfigError("temporal_conv1d: stride must be positive");
  if (frames < width) {
    throw ContractError("temporal_conv1d: " + std::to_string(frames) +
                        " frames is shorter than kernel width " + std::to_string(width));
  }
  require_finite(x, "temporal_conv1d");
  require_finite(kernel, "temporal_conv1d");

  const Index pad = (width - 1) / 2;
  const Index out_frames = (frames + stride - 1) / stride;
  const Index in_plane = frames * joints, out_plane = out_frames * joints;
  const Index col_rows = c_in * width;
  const Eigen::Map<const RowMatrix> w(kernel.values().data(), c_out, col_rows);

  const bool track = tracking({x, kernel});
  auto columns = std::make_shared<std::vector<RowMatrix>>();
  if (track) columns->reserve(static_cast<std::size_t>(batch));

  Eigen::VectorXd out(batch * c_out * out_plane);
  RowMatrix cols(col_rows, out_plane);
  for (Index b = 0; b < batch; ++b) {
    const double* src = x.values().data() + b * c_in * in_plane;
    cols.setZero();
    for (Index c = 0; c < c_in; ++c) {
      for (Index k = 0; k < width; ++k) {
        double* row = cols.data() + (c * width + k) * out_plane;
        for (Index t_out = 0; t_out < out_frames; ++t_out) {
          const Index t = t_out * stride + k - pad;
          if (t < 0 || t >= frames) continue;
          std::copy_n(src + c * in_plane + t * joints, joints, row + t_out * joints);
        }
      }
    }
    Eigen::Map<RowMatrix>(out.data() + b * c_out * out_plane, c_out, out_plane).noalias() =
        w * cols;
    if (track) columns->push_back(cols);
  }

  return make_result(
      output_shape(x, batch, c_out, out_frames, joints), std::move(out), {x, kernel},
      [=](const Eigen::VectorXd& g) {
        const Eigen::Map<const RowMatrix> wm(kernel.values().data(), c_out, col_rows);
        RowMatrix dw = RowMatrix::Zero(c_out, col_rows);
        Eigen::VectorXd dx;
        if (x.requires_grad()) dx = Eigen::VectorXd::Zero(x.numel());
        for (Index b = 0; b < batch; ++b) {
          const Eigen::Map<const RowMatrix> gb(g.data() + b * c_out * out_plane, c_out, out_plane);
          const RowMatrix& cb = (*columns)[static_cast<std::size_t>(b)];
          if (kernel.requires_grad()) dw.noalias() += gb * cb.transpose();
          if (!x.requires_grad()) continue;
          RowMatrix dcols = wm.transpose() * gb;
          double* dst = dx.data() + b * c_in * in_plane;
          for (Index c = 0; c < c_in; ++c) {
            for (Index k = 0; k < width; ++k) {
              const double* row = dcols.data() + (c * width + k) * out_plane;
              for (Index t_out = 0; t_out < out_frames; ++t_out) {
                const Index t = t_out * stride + k - pad;
                if (t < 0 || t >= frames) continue;
                double* d = dst + c * in_plane + t * joints;
                const double* s = row + t_out * joints;
                for (Index v = 0; v < joints; ++v) d[v] += s[v];
              }
            }
          }
        }
        if (kernel.requires_grad()) {
          accumulate_grad(kernel.node(), Eigen::Map<const Eigen::VectorXd>(dw.data(), dw.size()));
        }
        if (x.requires_grad()) accumulate_grad(x.node(), dx);
      });
}

Tensor graph_conv(const Tensor& x, const Tensor& a_norm, const Tensor& w) {
  const auto [batch, c_in, frames, joints] = skeleton_geometry(x, "graph_conv");
  if (a_norm.rank() != 2 || a_norm.dim(0) != joints || a_norm.dim(1) != joints) {
    throw ShapeError("graph_conv: adjacency " + shape_string(a_norm.shape()) + " is not " +
                     std::to_string(joints) + "x" + std::to_string(joints));
  }
  if (w.rank() != 2 || w.dim(1) != c_in) {
    throw ShapeError("graph_conv: weight " + shape_string(w.shape()) + " does not match input " +
                     shape_string(x.shape()));
  }
  require_finite(x, "graph_conv");
  require_finite(a_norm, "graph_conv");
  require_finite(w, "graph_conv");

  const Index c_out = w.dim(0), plane = frames * joints;
  const Index stacked_rows = batch * c_in * frames;
  const Eigen::Map<const RowMatrix> xm(x.values().data(), stacked_rows, joints);

  // Mix joints first, then channels.
  RowMatrix mixed = xm * a_norm.matrix();
  Eigen::VectorXd out(batch * c_out * plane);
  for (Index b = 0; b < batch; ++b) {
    const Eigen::Map<const RowMatrix> yb(mixed.data() + b * c_in * plane, c_in, plane);
    Eigen::Map<RowMatrix>(out.data() + b * c_out * plane, c_out, plane).noalias() =
        w.matrix() * yb;
  }

  auto saved = std::make_shared<RowMatrix>();
  if (tracking({x, a_norm, w})) *saved = std::move(mixed);

  return make_result(
      output_shape(x, batch, c_out, frames, joints), std::move(out), {x, a_norm, w},
      [=](const Eigen::VectorXd& g) {
        const bool need_mixed_grad = x.requires_grad() || a_norm.requires_grad();
        RowMatrix dmixed;
        if (need_mixed_grad) dmixed.resize(stacked_rows, joints);
        RowMatrix dw = RowMatrix::Zero(c_out, c_in);
        for (Index b = 0; b < batch; ++b) {
          const Eigen::Map<const RowMatrix> gb(g.data() + b * c_out * plane, c_out, plane);
          const Eigen::Map<const RowMatrix> yb(saved->data() + b * c_in * plane, c_in, plane);
          if (w.requires_grad()) dw.noalias() += gb * yb.transpose();
          if (need_mixed_grad) {
            Eigen::Map<RowMatrix>(dmixed.data() + b * c_in * plane, c_in, plane).noalias() =
                w.matrix().transpose() * gb;
          }
        }
        if (w.requires_grad()) {
          accumulate_grad(w.node(), Eigen::Map<const Eigen::VectorXd>(dw.data(), dw.size()));
        }
        if (x.requires_grad()) {
          RowMatrix dx = dmixed * a_norm.matrix().transpose();
          accumulate_grad(x.node(), Eigen::Map<const Eigen::VectorXd>(dx.data(), dx.size()));
        }
        if (a_norm.requires_grad()) {
          const Eigen::Map<const RowMatrix> xs(x.values().data(), stacked_rows, joints);
          RowMatrix da = xs.transpose() * dmixed;
          accumulate_grad(a_norm.node(), Eigen::Map<const Eigen::VectorXd>(da.data(), da.size()));
        }
      });
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  const auto [batch, channels, frames, joints] = skeleton_geometry(x, "add_channel_bias");
  if (bias.numel() != channels) {
    throw ShapeError("add_channel_bias: bias " + shape_string(bias.shape()) +
                     " does not match input " + shape_string(x.shape()));
  }
  require_finite(x, "add_channel_bias");
  require_finite(bias, "add_channel_bias");
  const Index plane = frames * joints;
  Eigen::VectorXd out = x.values();
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      out.segment((b * channels + c) * plane, plane).array() += bias.values()[c];
    }
  }
  return make_result(x.shape(), std::move(out), {x, bias},
                     [=](const Eigen::VectorXd& g) {
                       accumulate_grad(x.node(), g);
                       if (!bias.requires_grad()) return;
                       Eigen::VectorXd db = Eigen::VectorXd::Zero(channels);
                       for (Index b = 0; b < batch; ++b) {
                         for (Index c = 0; c < channels; ++c) {
                           db[c] += g.segment((b * channels + c) * plane, plane).sum();
                         }
                       }
                       accumulate_grad(bias.node(), db);
                     });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  BatchNormState& state, bool training) {
  Index batch = 0, channels = 0, plane = 0;
  if (x.rank() == 4) {
    batch = x.dim(0);
    channels = x.dim(1);
    plane = x.dim(2) * x.dim(3);
  } else if (x.rank() == 2) {
    batch = x.dim(0);
    channels = x.dim(1);
    plane = 1;
  } else {
    throw ShapeError("batch_norm: expected [B x C x T x V] or [B x C], got " +
                     shape_string(x.shape()));
  }
  if (gamma.numel() != channels || beta.numel() != channels ||
      state.running_mean.size() != channels || state.running_var.size() != channels) {
    throw ShapeError("batch_norm: parameters do not match " + std::to_string(channels) +
                     " channels of " + shape_string(x.shape()));
  }
  require_finite(x, "batch_norm");
  require_finite(gamma, "batch_norm");
  require_finite(beta, "batch_norm");

  const Index count = batch * plane;
  const double eps = state.epsilon;
  Eigen::VectorXd mean_c(channels), var_c(channels);
  const auto seg = [&](const Eigen::VectorXd& v, Index b, Index c) {
    return v.segment((b * channels + c) * plane, plane);
  };

  if (training) {
    for (Index c = 0; c < channels; ++c) {
      double s = 0.0;
      for (Index b = 0; b < batch; ++b) s += seg(x.values(), b, c).sum();
      const double m = s / double(count);
      double ss = 0.0;
      for (Index b = 0; b < batch; ++b) {
        ss += (seg(x.values(), b, c).array() - m).square().sum();
      }
      mean_c[c] = m;
      var_c[c] = ss / double(count);
    }
    const double unbias = count > 1 ? double(count) / double(count - 1) : 1.0;
    state.running_mean = state.momentum * state.running_mean + (1.0 - state.momentum) * mean_c;
    state.running_var =
        state.momentum * state.running_var + (1.0 - state.momentum) * (var_c * unbias);
  } else {
    mean_c = state.running_mean;
    var_c = state.running_var;
  }
  const Eigen::VectorXd inv_std = (var_c.array() + eps).rsqrt().matrix();

  Eigen::VectorXd xhat(x.numel());
  Eigen::VectorXd out(x.numel());
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      const Index off = (b * channels + c) * plane;
      xhat.segment(off, plane) =
          ((x.values().segment(off, plane).array() - mean_c[c]) * inv_std[c]).matrix();
      out.segment(off, plane) =
          (xhat.segment(off, plane).array() * gamma.values()[c] + beta.values()[c]).matrix();
    }
  }

  return make_result(
      x.shape(), std::move(out), {x, gamma, beta},
      [=](const Eigen::VectorXd& g) {
        Eigen::VectorXd dgamma = Eigen::VectorXd::Zero(channels);
        Eigen::VectorXd dbeta = Eigen::VectorXd::Zero(channels);
        for (Index c = 0; c < channels; ++c) {
          for (Index b = 0; b < batch; ++b) {
            const Index off = (b * channels + c) * plane;
            dbeta[c] += g.segment(off, plane).sum();
            dgamma[c] += g.segment(off, plane).dot(xhat.segment(off, plane));
          }
        }
        if (gamma.requires_grad()) accumulate_grad(gamma.node(), dgamma);
        if (beta.requires_grad()) accumulate_grad(beta.node(), dbeta);
        if (!x.requires_grad()) return;
        Eigen::VectorXd dx(x.numel());
        for (Index c = 0; c < channels; ++c) {
          const double gm = gamma.values()[c];
          for (Index b = 0; b < batch; ++b) {
            const Index off = (b * channels + c) * plane;
            if (training) {
              // d/dx of (x - mean) * inv_std with batch statistics.
              dx.segment(off, plane) =
                  (gm * inv_std[c] / double(count) *
                   (double(count) * g.segment(off, plane).array() - dbeta[c] -
                    xhat.segment(off, plane).array() * dgamma[c]))
                      .matrix();
            } else {
              dx.segment(off, plane) = g.segment(off, plane) * (gm * inv_std[c]);
            }
          }
        }
        accumulate_grad(x.node(), dx);
      });
}

Tensor global_avg_pool(const Tensor& x, const Eigen::MatrixXd* frame_mask) {
  if (x.rank() != 4) {
    throw ShapeError("global_avg_pool: expected [B x C x T x V], got " + shape_string(x.shape()));
  }
  const Index batch = x.dim(0), channels = x.dim(1), frames = x.dim(2), joints = x.dim(3);
  if (frame_mask != nullptr && (frame_mask->rows() != batch || frame_mask->cols() != frames)) {
    throw ShapeError("global_avg_pool: mask is " + std::to_string(frame_mask->rows()) + "x" +
                     std::to_string(frame_mask->cols()) + ", expected " + std::to_string(batch) +
                     "x" + std::to_string(frames));
  }
  require_finite(x, "global_avg_pool");
  const Index plane = frames * joints;

  // Per-frame weights: 1/(valid frames * joints) on valid frames, else 0.
  Eigen::MatrixXd weights(batch, frames);
  for (Index b = 0; b < batch; ++b) {
    if (frame_mask == nullptr) {
      weights.row(b).setConstant(1.0 / double(plane));
      continue;
    }
    const auto valid = (frame_mask->row(b).array() != 0.0).cast<double>();
    const double n = valid.sum();
    if (n == 0.0) throw ContractError("global_avg_pool: sequence with no valid frames");
    weights.row(b) = valid.matrix() / (n * double(joints));
  }

  Eigen::VectorXd out(batch * channels);
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      const Eigen::Map<const RowMatrix> xm(x.values().data() + (b * channels + c) * plane, frames,
                                           joints);
      out[b * channels + c] = weights.row(b).dot(xm.rowwise().sum());
    }
  }
  return make_result({batch, channels}, std::move(out), {x}, [=](const Eigen::VectorXd& g) {
    Eigen::VectorXd dx(x.numel());
    for (Index b = 0; b < batch; ++b) {
      for (Index c = 0; c < channels; ++c) {
        Eigen::Map<RowMatrix> dm(dx.data() + (b * channels + c) * plane, frames, joints);
        dm = (weights.row(b).transpose() * g[b * channels + c]).replicate(1, joints);
      }
    }
    accumulate_grad(x.node(), dx);
  });
}

}  // namespace gzsl
