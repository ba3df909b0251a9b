#include "gzsl/fs_ger.hpp"

#include "gzsl/errors.hpp"
#include "gzsl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace gzsl {

nlohmann::json FsGerConfig::to_json() const {
  return {{"channels", channels},     {"strides", strides}, {"kernel", kernel},
          {"projection", projection}, {"hidden", hidden},   {"feature_dim", feature_dim},
          {"seen_classes", seen_classes}, {"joints", joints}};
}

FsGerConfig FsGerConfig::from_json(const nlohmann::json& j) {
  FsGerConfig c;
  c.channels = j.at("channels").get<std::array<Index, 3>>();
  c.strides = j.at("strides").get<std::array<Index, 3>>();
  c.kernel = j.at("kernel").get<Index>();
  c.projection = j.at("projection").get<Index>();
  c.hidden = j.at("hidden").get<Index>();
  c.feature_dim = j.at("feature_dim").get<Index>();
  c.seen_classes = j.at("seen_classes").get<Index>();
  c.joints = j.at("joints").get<Index>();
  return c;
}

Tensor normalize_adjacency(const SkeletonTopology& topology) {
  if (!topology.connected()) {
    throw ConfigError("normalize_adjacency: skeleton graph is disconnected");
  }
  const Index n = topology.joint_count();
  const Eigen::MatrixXd a = topology.adjacency() + Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd inv_sqrt_degree = a.rowwise().sum().array().rsqrt();
  const Eigen::MatrixXd norm = inv_sqrt_degree.asDiagonal() * a * inv_sqrt_degree.asDiagonal();
  return Tensor::from_matrix(norm);
}

namespace {

Tensor he_uniform(Shape shape, Index fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / double(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::VectorXd v(shape_numel(shape));
  for (Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
  return Tensor(std::move(shape), std::move(v), true);
}

Tensor zeros_param(Shape shape) { return Tensor(std::move(shape), true); }

Tensor ones_param(Index n) { return Tensor({n}, Eigen::VectorXd::Ones(n), true); }

}  // namespace

FsGerModel::FsGerModel(const FsGerConfig& config, std::uint64_t seed)
    : config_(config),
      adjacency_(normalize_adjacency(SkeletonTopology::upper_body())),
      affective_mean_(Eigen::VectorXd::Zero(kAffectiveDim)),
      affective_scale_(Eigen::VectorXd::Ones(kAffectiveDim)) {
  if (config.joints != kJointCount) {
    throw ConfigError("FS-GER expects " + std::to_string(kJointCount) + " joints");
  }
  if (config.kernel < 1 || config.kernel % 2 == 0) {
    throw ConfigError("temporal kernel width must be odd, got " + std::to_string(config.kernel));
  }
  if (config.seen_classes < 1) throw ConfigError("FS-GER needs at least one seen class");
  std::mt19937_64 rng(seed);
  Index in = 3;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Index out = config.channels[i];
    Block& b = blocks_[i];
    b.graph_weight = he_uniform({out, in}, in, rng);
    b.temporal_kernel = he_uniform({out, out, config.kernel}, out * config.kernel, rng);
    b.bn_gamma = ones_param(out);
    b.bn_beta = zeros_param({out});
    b.bn = BatchNormState(out);
    b.stride = config.strides[i];
    in = out;
  }
  proj_kernel_ = he_uniform({config.projection, in, 1}, in, rng);
  proj_bias_ = zeros_param({config.projection});
  const Index concat_dim = config.projection + kAffectiveDim;
  fc1_w_ = he_uniform({concat_dim, config.hidden}, concat_dim, rng);
  fc1_b_ = zeros_param({config.hidden});
  fc2_w_ = he_uniform({config.hidden, config.feature_dim}, config.hidden, rng);
  fc2_b_ = zeros_param({config.feature_dim});
  head_w_ = he_uniform({config.feature_dim, config.seen_classes + 1}, config.feature_dim, rng);
  head_b_ = zeros_param({config.seen_classes + 1});
}

FsGerOutput FsGerModel::forward(const Tensor& poses, const Tensor& affective,
                                const Eigen::MatrixXd* frame_mask, bool training) {
  if (poses.rank() != 4 || poses.dim(1) != 3 || poses.dim(3) != config_.joints) {
    throw ShapeError("FS-GER input must be [B x 3 x T x " + std::to_string(config_.joints) +
                     "], got " + shape_string(poses.shape()));
  }
  const Index batch = poses.dim(0);
  if (affective.rank() != 2 || affective.dim(0) != batch || affective.dim(1) != kAffectiveDim) {
    throw ShapeError("affective input must be [" + std::to_string(batch) + " x 18], got " +
                     shape_string(affective.shape()));
  }

  std::optional<Eigen::MatrixXd> mask;
  if (frame_mask) mask = *frame_mask;

  Tensor h = poses;
  for (auto& b : blocks_) {
    h = graph_conv(h, adjacency_, b.graph_weight);
    h = temporal_conv1d(h, b.temporal_kernel, b.stride);
    h = relu(batch_norm(h, b.bn_gamma, b.bn_beta, b.bn, training));
    if (mask && b.stride > 1) {
      // Output frame t is centred on input frame t * stride.
      Eigen::MatrixXd next(batch, h.dim(2));
      for (Index t = 0; t < h.dim(2); ++t) next.col(t) = mask->col(t * b.stride);
      mask = std::move(next);
    }
  }
  h = add_channel_bias(temporal_conv1d(h, proj_kernel_, 1), proj_bias_);
  Tensor pooled = global_avg_pool(h, mask ? &*mask : nullptr);

  RowMatrix a = affective.matrix();
  a.rowwise() -= affective_mean_.transpose();
  a.array().rowwise() /= affective_scale_.transpose().array();
  Tensor standardized({batch, Index(kAffectiveDim)},
                      Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()));

  Tensor hidden = relu(linear(concat(pooled, standardized), fc1_w_, fc1_b_));
  Tensor features = linear(hidden, fc2_w_, fc2_b_);
  Tensor logits = linear(features, head_w_, head_b_);
  return {logits, features};
}

FsGerOutput FsGerModel::forward(const PoseInputs& inputs, const std::vector<std::size_t>& rows,
                                bool training) {
  const Index batch = Index(rows.size());
  const Index frames = inputs.frames;
  const Index per = 3 * frames * config_.joints;
  Eigen::VectorXd poses(batch * per);
  Eigen::VectorXd aff(batch * kAffectiveDim);
  Eigen::MatrixXd mask(batch, frames);
  for (Index r = 0; r < batch; ++r) {
    const std::size_t i = rows[std::size_t(r)];
    poses.segment(r * per, per) = inputs.poses[i];
    aff.segment(r * kAffectiveDim, kAffectiveDim) = inputs.affective[i];
    mask.row(r) = inputs.masks[i].transpose();
  }
  const bool padded = (mask.array() == 0.0).any();
  return forward(Tensor({batch, 3, frames, config_.joints}, std::move(poses)),
                 Tensor({batch, Index(kAffectiveDim)}, std::move(aff)), padded ? &mask : nullptr,
                 training);
}

std::vector<Tensor> FsGerModel::parameters() const {
  std::vector<Tensor> out;
  for (const auto& b : blocks_) {
    out.insert(out.end(), {b.graph_weight, b.temporal_kernel, b.bn_gamma, b.bn_beta});
  }
  out.insert(out.end(), {proj_kernel_, proj_bias_, fc1_w_, fc1_b_, fc2_w_, fc2_b_, head_w_, head_b_});
  return out;
}

void FsGerModel::set_affective_normalization(const AffectiveVector& mean,
                                             const AffectiveVector& scale) {
  if ((scale.array() <= 0.0).any()) {
    throw ContractError("affective normalization scale must be positive");
  }
  affective_mean_ = mean;
  affective_scale_ = scale;
}

Checkpoint FsGerModel::to_checkpoint(std::uint64_t seed) const {
  Checkpoint ck;
  ck.kind = "fs-ger";
  ck.config = config_.to_json();
  ck.seed = seed;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto p = "block" + std::to_string(i) + ".";
    const Block& b = blocks_[i];
    ck.add(p + "graph_weight", b.graph_weight);
    ck.add(p + "temporal_kernel", b.temporal_kernel);
    ck.add(p + "bn_gamma", b.bn_gamma);
    ck.add(p + "bn_beta", b.bn_beta);
    ck.add(p + "bn_running_mean", b.bn.running_mean);
    ck.add(p + "bn_running_var", b.bn.running_var);
  }
  ck.add("proj_kernel", proj_kernel_);
  ck.add("proj_bias", proj_bias_);
  ck.add("fc1_w", fc1_w_);
  ck.add("fc1_b", fc1_b_);
  ck.add("fc2_w", fc2_w_);
  ck.add("fc2_b", fc2_b_);
  ck.add("head_w", head_w_);
  ck.add("head_b", head_b_);
  ck.add("affective_mean", affective_mean_);
  ck.add("affective_scale", affective_scale_);
  return ck;
}

FsGerModel FsGerModel::from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "fs-ger") throw SchemaError("checkpoint kind is '" + ck.kind + "', not fs-ger");
  FsGerModel m(FsGerConfig::from_json(ck.config), ck.seed);
  for (std::size_t i = 0; i < m.blocks_.size(); ++i) {
    const auto p = "block" + std::to_string(i) + ".";
    Block& b = m.blocks_[i];
    ck.restore(p + "graph_weight", b.graph_weight);
    ck.restore(p + "temporal_kernel", b.temporal_kernel);
    ck.restore(p + "bn_gamma", b.bn_gamma);
    ck.restore(p + "bn_beta", b.bn_beta);
    ck.restore(p + "bn_running_mean", b.bn.running_mean);
    ck.restore(p + "bn_running_var", b.bn.running_var);
  }
  ck.restore("proj_kernel", m.proj_kernel_);
  ck.restore("proj_bias", m.proj_bias_);
  ck.restore("fc1_w", m.fc1_w_);
  ck.restore("fc1_b", m.fc1_b_);
  ck.restore("fc2_w", m.fc2_w_);
  ck.restore("fc2_b", m.fc2_b_);
  ck.restore("head_w", m.head_w_);
  ck.restore("head_b", m.head_b_);
  ck.restore("affective_mean", m.affective_mean_);
  ck.restore("affective_scale", m.affective_scale_);
  return m;
}

PoseInputs prepare_inputs(const Dataset& dataset, const std::vector<std::size_t>& indices,
                          Index frames) {
  PoseInputs out;
  out.frames = frames;
  for (std::size_t i : indices) {
    const PoseSequence& seq = dataset[i];
    const PaddedSequence padded = pad_or_crop(root_center(seq), frames);
    Eigen::VectorXd pose(3 * frames * kJointCount);
    // [channel][frame][joint]
    for (Index t = 0; t < frames; ++t) {
      const Frame& f = padded.sequence.frames[std::size_t(t)];
      for (int axis = 0; axis < 3; ++axis) {
        pose.segment((axis * frames + t) * kJointCount, kJointCount) = f.row(axis).transpose();
      }
    }
    out.ids.push_back(seq.id);
    out.poses.push_back(std::move(pose));
    out.masks.push_back(padded.valid);
    out.affective.push_back(extract_affective(seq));
  }
  return out;
}

SupervisedSet make_supervised_set(const Dataset& dataset, const std::vector<std::size_t>& indices,
                                  const std::vector<std::string>& seen_classes, Index frames) {
  SupervisedSet set;
  set.seen_classes = seen_classes;
  std::vector<std::size_t> kept;
  for (std::size_t i : indices) {
    const auto& label = dataset[i].label;
    if (!label) continue;
    const auto it = std::find(seen_classes.begin(), seen_classes.end(), *label);
    set.labels.push_back(it == seen_classes.end() ? int(seen_classes.size())
                                                  : int(it - seen_classes.begin()));
    kept.push_back(i);
  }
  set.inputs = prepare_inputs(dataset, kept, frames);
  return set;
}

void FsGerTrainingLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,loss,accuracy\n";
  out.precision(17);
  for (const auto& e : epochs) out << e.epoch << ',' << e.loss << ',' << e.accuracy << '\n';
}

FsGerTrainingLog train_supervised(FsGerModel& model, const SupervisedSet& data,
                                  const FsGerTrainConfig& config,
                                  const std::function<bool(const FsGerEpoch&)>& on_epoch) {
  const std::size_t n = data.inputs.size();
  const int classes = int(model.config().seen_classes);
  if (int(data.seen_classes.size()) != classes) {
    throw ConfigError("training set lists " + std::to_string(data.seen_classes.size()) +
                      " seen classes, model has " + std::to_string(classes));
  }
  std::vector<int> counts(std::size_t(classes) + 1, 0);
  for (int l : data.labels) {
    if (l < 0 || l > classes) throw IndexError("training label out of range");
    ++counts[std::size_t(l)];
  }
  for (int c = 0; c < classes; ++c) {
    if (counts[std::size_t(c)] == 0) {
      throw ConfigError("seen class '" + data.seen_classes[std::size_t(c)] +
                        "' has no training sequences");
    }
  }
  if (config.batch_size < 1) throw ConfigError("batch size must be positive");

  AffectiveVector mean = AffectiveVector::Zero();
  for (const auto& a : data.inputs.affective) mean += a;
  mean /= double(n);
  AffectiveVector var = AffectiveVector::Zero();
  for (const auto& a : data.inputs.affective) var += (a - mean).cwiseAbs2();
  AffectiveVector scale = (var / double(n)).cwiseSqrt();
  for (int k = 0; k < kAffectiveDim; ++k) {
    if (!(scale[k] > 1e-12)) scale[k] = 1.0;
  }
  model.set_affective_normalization(mean, scale);

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t s = 0; s < n; s += std::size_t(config.batch_size)) {
    batches.emplace_back(order.begin() + long(s),
                         order.begin() + long(std::min(n, s + std::size_t(config.batch_size))));
  }
  std::vector<std::size_t> batch_order(batches.size());
  std::iota(batch_order.begin(), batch_order.end(), 0);

  Adam adam(model.parameters(), config.adam);
  FsGerTrainingLog log;
  std::vector<double> batch_loss(batches.size());
  std::vector<int> batch_correct(batches.size());
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(batch_order.begin(), batch_order.end(), rng);
    for (std::size_t bi : batch_order) {
      const auto& rows = batches[bi];
      std::vector<int> labels;
      for (std::size_t r : rows) labels.push_back(data.labels[r]);
      GradientTape tape;
      Tensor loss;
      FsGerOutput out;
      {
        TapeScope scope(tape);
        out = model.forward(data.inputs, rows, true);
        loss = softmax_cross_entropy(out.logits, labels);
      }
      adam.zero_grad();
      tape.backward(loss);
      adam.step();
      batch_loss[bi] = loss.item() * double(rows.size());
      const auto lm = out.logits.matrix();
      int correct = 0;
      for (Index r = 0; r < lm.rows(); ++r) {
        Index arg = 0;
        lm.row(r).maxCoeff(&arg);
        correct += int(arg) == labels[std::size_t(r)] ? 1 : 0;
      }
      batch_correct[bi] = correct;
    }
    FsGerEpoch e;
    e.epoch = epoch;
    // Summed in partition order so the value does not depend on batch order.
    for (std::size_t b = 0; b < batches.size(); ++b) {
      e.loss += batch_loss[b];
      e.accuracy += batch_correct[b];
    }
    e.loss /= double(n);
    e.accuracy /= double(n);
    log.epochs.push_back(e);
    if (on_epoch && !on_epoch(e)) break;
    if (config.stop_at_perfect && e.accuracy >= 1.0) break;
  }
  return log;
}

std::vector<Eigen::VectorXd> extract_features(FsGerModel& model, const PoseInputs& inputs) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(inputs.size());
  constexpr std::size_t kChunk = 32;
  for (std::size_t s = 0; s < inputs.size(); s += kChunk) {
    std::vector<std::size_t> rows;
    for (std::size_t i = s; i < std::min(inputs.size(), s + kChunk); ++i) rows.push_back(i);
    const FsGerOutput o = model.forward(inputs, rows, false);
    const auto fm = o.features.matrix();
    for (Index r = 0; r < fm.rows(); ++r) out.push_back(fm.row(r).transpose());
  }
  return out;
}

}  // namespace gzsl
