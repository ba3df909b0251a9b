#include "gzsl/tensor.hpp"

#include "gzsl/errors.hpp"

#include <sstream>

namespace gzsl {

namespace {
thread_local GradientTape* g_active_tape = nullptr;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Index shape_numel(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_string(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape, bool requires_grad)
    : Tensor(shape, Eigen::VectorXd::Zero(shape_numel(shape)), requires_grad) {}

Tensor::Tensor(Shape shape, Eigen::VectorXd values, bool requires_grad)
    : node_(std::make_shared<detail::TensorNode>()) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_string(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, Eigen::VectorXd::Constant(1, value), requires_grad);
}

Tensor Tensor::from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m, bool requires_grad) {
  RowMatrix rm = m;
  return Tensor({m.rows(), m.cols()}, Eigen::Map<const Eigen::VectorXd>(rm.data(), rm.size()),
                requires_grad);
}

Tensor Tensor::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v, bool requires_grad) {
  return Tensor({v.size()}, v, requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() on tensor of shape " + shape_string(shape()));
  }
  return node_->value[0];
}

Eigen::Map<const RowMatrix> Tensor::matrix() const {
  if (rank() != 2) throw ShapeError("matrix view needs rank 2, got " + shape_string(shape()));
  return {node_->value.data(), dim(0), dim(1)};
}

Eigen::Map<RowMatrix> Tensor::mutable_matrix() {
  if (rank() != 2) throw ShapeError("matrix view needs rank 2, got " + shape_string(shape()));
  return {node_->value.data(), dim(0), dim(1)};
}

void Tensor::zero_grad() { node_->grad = Eigen::VectorXd::Zero(node_->value.size()); }

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->value, false); }

void GradientTape::record(std::vector<Tensor> inputs, Tensor output, BackwardRule rule) {
  records_.push_back({std::move(inputs), std::move(output), std::move(rule)});
}

void GradientTape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("undefined")));
  }
  for (auto& r : records_) {
    r.output.node().grad = Eigen::VectorXd::Zero(r.output.numel());
  }
  if (loss.is_leaf()) {
    // Nothing recorded leads to the loss; only its own gradient is seeded.
    detail::accumulate_grad(loss.node(), Eigen::VectorXd::Ones(1));
    return;
  }
  loss.node().grad[0] = 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    const auto& g = it->output.grad();
    if (!g.isZero(0.0)) it->rule(g);
  }
}

GradientTape* active_tape() { return g_active_tape; }

TapeScope::TapeScope(GradientTape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() { g_active_tape = previous_; }

namespace detail {

void accumulate_grad(TensorNode& node, const Eigen::Ref<const Eigen::VectorXd>& delta) {
  if (!node.requires_grad) return;
  if (node.grad.size() != node.value.size()) {
    node.grad = delta;
  } else {
    node.grad += delta;
  }
}

bool any_requires_grad(const std::vector<Tensor>& inputs) {
  for (const auto& t : inputs) {
    if (t.requires_grad()) return true;
  }
  return false;
}

Tensor make_result(Shape shape, Eigen::VectorXd value, std::vector<Tensor> inputs,
                   GradientTape::BackwardRule rule) {
  GradientTape* tape = active_tape();
  const bool track = tape != nullptr && any_requires_grad(inputs);
  Tensor out(std::move(shape), std::move(value), track);
  if (track) {
    out.node().leaf = false;
    tape->record(std::move(inputs), out, std::move(rule));
  }
  return out;
}

void require_finite(const Tensor& t, const char* op) {
  if (!t.values().allFinite()) {
    throw NumericError(std::string(op) + ": non-finite value in input of shape " +
                       shape_string(t.shape()));
  }
}

}  // namespace detail

}  // namespace gzsl
