#include "gzsl/ops.hpp"

#include "gzsl/errors.hpp"

#include <cmath>

namespace gzsl {

using detail::accumulate_grad;
using detail::make_result;
using detail::require_finite;

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

void require_rank(const Tensor& t, Index rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
  }
}

Eigen::Map<const RowMatrix> as_matrix(const Eigen::VectorXd& v, Index rows, Index cols) {
  return {v.data(), rows, cols};
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                     shape_string(b.shape()));
  }
  require_finite(a, "matmul");
  require_finite(b, "matmul");
  const Index m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Eigen::VectorXd out(m * n);
  Eigen::Map<RowMatrix>(out.data(), m, n).noalias() = a.matrix() * b.matrix();
  return make_result({m, n}, std::move(out), {a, b}, [a, b, m, k, n](const Eigen::VectorXd& g) {
    const auto dc = as_matrix(g, m, n);
    if (a.requires_grad()) {
      Eigen::VectorXd da(m * k);
      Eigen::Map<RowMatrix>(da.data(), m, k).noalias() = dc * b.matrix().transpose();
      accumulate_grad(a.node(), da);
    }
    if (b.requires_grad()) {
      Eigen::VectorXd db(k * n);
      Eigen::Map<RowMatrix>(db.data(), k, n).noalias() = a.matrix().transpose() * dc;
      accumulate_grad(b.node(), db);
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  require_finite(a, "add");
  require_finite(b, "add");
  return make_result(a.shape(), a.values() + b.values(), {a, b},
                     [a, b](const Eigen::VectorXd& g) {
                       accumulate_grad(a.node(), g);
                       accumulate_grad(b.node(), g);
                     });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  require_finite(a, "sub");
  require_finite(b, "sub");
  return make_result(a.shape(), a.values() - b.values(), {a, b},
                     [a, b](const Eigen::VectorXd& g) {
                       accumulate_grad(a.node(), g);
                       if (b.requires_grad()) accumulate_grad(b.node(), -g);
                     });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  require_finite(a, "mul");
  require_finite(b, "mul");
  return make_result(a.shape(), a.values().cwiseProduct(b.values()), {a, b},
                     [a, b](const Eigen::VectorXd& g) {
                       if (a.requires_grad()) accumulate_grad(a.node(), g.cwiseProduct(b.values()));
                       if (b.requires_grad()) accumulate_grad(b.node(), g.cwiseProduct(a.values()));
                     });
}

Tensor scale(const Tensor& x, double factor) {
  require_finite(x, "scale");
  return make_result(x.shape(), x.values() * factor, {x}, [x, factor](const Eigen::VectorXd& g) {
    accumulate_grad(x.node(), g * factor);
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_bias");
  if (bias.numel() != x.dim(1)) {
    throw ShapeError("add_bias: bias " + shape_string(bias.shape()) + " does not match " +
                     shape_string(x.shape()));
  }
  require_finite(x, "add_bias");
  require_finite(bias, "add_bias");
  const Index rows = x.dim(0), cols = x.dim(1);
  Eigen::VectorXd out(rows * cols);
  Eigen::Map<RowMatrix> om(out.data(), rows, cols);
  om = x.matrix();
  om.rowwise() += bias.values().transpose();
  return make_result(x.shape(), std::move(out), {x, bias},
                     [x, bias, rows, cols](const Eigen::VectorXd& g) {
                       accumulate_grad(x.node(), g);
                       if (bias.requires_grad()) {
                         accumulate_grad(bias.node(),
                                         as_matrix(g, rows, cols).colwise().sum().transpose());
                       }
                     });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_bias(matmul(x, w), b);
}

Tensor concat(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat");
  require_rank(b, 2, "concat");
  if (a.dim(0) != b.dim(0)) {
    throw ShapeError("concat: row counts differ, " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  require_finite(a, "concat");
  require_finite(b, "concat");
  const Index rows = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  Eigen::VectorXd out(rows * (ca + cb));
  Eigen::Map<RowMatrix> om(out.data(), rows, ca + cb);
  om.leftCols(ca) = a.matrix();
  om.rightCols(cb) = b.matrix();
  return make_result({rows, ca + cb}, std::move(out), {a, b},
                     [a, b, rows, ca, cb](const Eigen::VectorXd& g) {
                       const auto gm = as_matrix(g, rows, ca + cb);
                       if (a.requires_grad()) {
                         RowMatrix ga = gm.leftCols(ca);
                         accumulate_grad(a.node(), Eigen::Map<Eigen::VectorXd>(ga.data(), ga.size()));
                       }
                       if (b.requires_grad()) {
                         RowMatrix gb = gm.rightCols(cb);
                         accumulate_grad(b.node(), Eigen::Map<Eigen::VectorXd>(gb.data(), gb.size()));
                       }
                     });
}

Tensor sum(const Tensor& x) {
  require_finite(x, "sum");
  const Index n = x.numel();
  return make_result({1}, Eigen::VectorXd::Constant(1, x.values().sum()), {x},
                     [x, n](const Eigen::VectorXd& g) {
                       accumulate_grad(x.node(), Eigen::VectorXd::Constant(n, g[0]));
                     });
}

Tensor mean(const Tensor& x) {
  require_finite(x, "mean");
  const Index n = x.numel();
  return make_result({1}, Eigen::VectorXd::Constant(1, x.values().mean()), {x},
                     [x, n](const Eigen::VectorXd& g) {
                       accumulate_grad(x.node(), Eigen::VectorXd::Constant(n, g[0] / double(n)));
                     });
}

Tensor relu(const Tensor& x) {
  require_finite(x, "relu");
  Eigen::VectorXd out = x.values().cwiseMax(0.0);
  return make_result(x.shape(), std::move(out), {x}, [x](const Eigen::VectorXd& g) {
    accumulate_grad(x.node(), (x.values().array() > 0.0).select(g, 0.0));
  });
}

Tensor sigmoid(const Tensor& x) {
  require_finite(x, "sigmoid");
  Eigen::VectorXd out = (1.0 + (-x.values().array()).exp()).inverse().matrix();
  Eigen::VectorXd y = out;
  return make_result(x.shape(), std::move(out), {x}, [x, y](const Eigen::VectorXd& g) {
    accumulate_grad(x.node(), (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

RowMatrix softmax(const Tensor& logits) {
  require_rank(logits, 2, "softmax");
  require_finite(logits, "softmax");
  RowMatrix p = logits.matrix();
  for (Index r = 0; r < p.rows(); ++r) {
    p.row(r).array() -= p.row(r).maxCoeff();
    p.row(r) = p.row(r).array().exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

Tensor mse_loss(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction, target, "mse_loss");
  require_finite(prediction, "mse_loss");
  require_finite(target, "mse_loss");
  Eigen::VectorXd diff = prediction.values() - target.values();
  const double n = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / n;
  return make_result({1}, Eigen::VectorXd::Constant(1, loss), {prediction, target},
                     [prediction, target, diff, n](const Eigen::VectorXd& g) {
                       Eigen::VectorXd d = diff * (2.0 * g[0] / n);
                       accumulate_grad(prediction.node(), d);
                       if (target.requires_grad()) accumulate_grad(target.node(), -d);
                     });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "softmax_cross_entropy");
  const Index rows = logits.dim(0), classes = logits.dim(1);
  if (static_cast<Index>(labels.size()) != rows) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for logits " + shape_string(logits.shape()));
  }
  for (int label : labels) {
    if (label < 0 || label >= classes) {
      throw IndexError("softmax_cross_entropy: label " + std::to_string(label) +
                       " outside [0, " + std::to_string(classes) + ")");
    }
  }
  RowMatrix p = softmax(logits);
  const auto lm = logits.matrix();
  double loss = 0.0;
  for (Index r = 0; r < rows; ++r) {
    const double mx = lm.row(r).maxCoeff();
    const double lse = mx + std::log((lm.row(r).array() - mx).exp().sum());
    loss += lse - lm(r, labels[static_cast<std::size_t>(r)]);
  }
  loss /= static_cast<double>(rows);
  std::vector<int> lab(labels.begin(), labels.end());
  return make_result({1}, Eigen::VectorXd::Constant(1, loss), {logits},
                     [logits, p, lab, rows, classes](const Eigen::VectorXd& g) {
                       RowMatrix d = p;
                       for (Index r = 0; r < rows; ++r) d(r, lab[static_cast<std::size_t>(r)]) -= 1.0;
                       d *= g[0] / static_cast<double>(rows);
                       accumulate_grad(logits.node(), Eigen::Map<Eigen::VectorXd>(d.data(), rows * classes));
                     });
}

Tensor binary_cross_entropy(const Tensor& probabilities, double target) {
  require_finite(probabilities, "binary_cross_entropy");
  const Eigen::ArrayXd raw = probabilities.values().array();
  const Eigen::ArrayXd p = raw.cwiseMax(kBceClamp).cwiseMin(1.0 - kBceClamp);
  const double n = static_cast<double>(p.size());
  const double loss =
      -(target * p.log() + (1.0 - target) * (1.0 - p).log()).sum() / n;
  return make_result({1}, Eigen::VectorXd::Constant(1, loss), {probabilities},
                     [probabilities, raw, p, target, n](const Eigen::VectorXd& g) {
                       Eigen::ArrayXd d = (-(target / p) + (1.0 - target) / (1.0 - p)) * (g[0] / n);
                       d = (raw < kBceClamp || raw > 1.0 - kBceClamp).select(0.0, d);
                       accumulate_grad(probabilities.node(), d.matrix());
                     });
}

}  // namespace gzsl
