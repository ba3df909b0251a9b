#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gzsl {

using Index = Eigen::Index;
using Shape = std::vector<Index>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string shape_string(const Shape& shape);
Index shape_numel(const Shape& shape);

namespace detail {

struct TensorNode {
  Shape shape;
  Eigen::VectorXd value;
  // Empty until the first gradient reaches this node.
  Eigen::VectorXd grad;
  bool requires_grad = false;
  // False for outputs of tape-recorded operations.
  bool leaf = true;
};

}  // namespace detail

/// Dense row-major float64 array with an optional gradient buffer.
///
/// Tensor is a shared handle: copies alias the same storage, which is how a
/// parameter owned by a model is also seen by the tape and by the optimizer.
/// The shape is fixed at construction.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, Eigen::VectorXd values, bool requires_grad = false);

  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m,
                            bool requires_grad = false);
  static Tensor from_vector(const Eigen::Ref<const Eigen::VectorXd>& v,
                            bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  Index rank() const { return static_cast<Index>(node_->shape.size()); }
  Index dim(Index axis) const { return node_->shape.at(static_cast<std::size_t>(axis)); }
  Index numel() const { return node_->value.size(); }

  const Eigen::VectorXd& values() const { return node_->value; }
  Eigen::Map<Eigen::VectorXd> mutable_values() {
    return {node_->value.data(), node_->value.size()};
  }
  double item() const;

  // Views of a rank-2 tensor as a row-major matrix.
  Eigen::Map<const RowMatrix> matrix() const;
  Eigen::Map<RowMatrix> mutable_matrix();

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->leaf; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  const Eigen::VectorXd& grad() const { return node_->grad; }
  void zero_grad();
  void clear_grad() { node_->grad.resize(0); }

  // A new leaf holding a copy of the values, outside any gradient path.
  Tensor detach() const;

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }
  detail::TensorNode& node() const { return *node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

/// Ordered record of differentiable operations.
///
/// Operations record themselves into the tape made active by a TapeScope on
/// the current thread. With no active tape nothing is recorded and results
/// carry no gradient path, which is how inference runs.
class GradientTape {
 public:
  using BackwardRule = std::function<void(const Eigen::VectorXd& output_grad)>;

  void record(std::vector<Tensor> inputs, Tensor output, BackwardRule rule);

  // Replays the records in reverse order, seeding d(loss)/d(loss) = 1.
  // Leaf gradients accumulate across calls; intermediate ones are reset.
  void backward(const Tensor& loss);

  void clear() { records_.clear(); }
  std::size_t size() const { return records_.size(); }

 private:
  struct Record {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardRule rule;
  };
  std::vector<Record> records_;
};

GradientTape* active_tape();

class TapeScope {
 public:
  explicit TapeScope(GradientTape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  GradientTape* previous_;
};

namespace detail {

// Adds delta into the node's gradient when it requires one.
void accumulate_grad(TensorNode& node, const Eigen::Ref<const Eigen::VectorXd>& delta);

// Wraps a freshly computed value as the result of an operation and records
// the backward rule when any input needs a gradient and a tape is active.
Tensor make_result(Shape shape, Eigen::VectorXd value, std::vector<Tensor> inputs,
                   GradientTape::BackwardRule rule);

bool any_requires_grad(const std::vector<Tensor>& inputs);

void require_finite(const Tensor& t, const char* op);

}  // namespace detail

}  // namespace gzsl
