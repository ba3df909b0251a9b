#pragma once

#include "gzsl/adam.hpp"
#include "gzsl/affective.hpp"
#include "gzsl/checkpoint.hpp"
#include "gzsl/nn_ops.hpp"
#include "gzsl/skeleton.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gzsl {

// Architecture of the supervised feature extractor.
struct FsGerConfig {
  std::array<Index, 3> channels = {64, 128, 256};
  std::array<Index, 3> strides = {1, 2, 2};
  Index kernel = 9;
  Index projection = 128;
  Index hidden = 100;
  Index feature_dim = 64;
  // Seen classes; the classifier has one extra output for the dummy class.
  Index seen_classes = 6;
  Index joints = kJointCount;

  nlohmann::json to_json() const;
  static FsGerConfig from_json(const nlohmann::json& j);
};

struct FsGerTrainConfig {
  AdamConfig adam;
  int batch_size = 8;
  int max_epochs = 200;
  // Stop once an epoch classifies every training sequence correctly.
  bool stop_at_perfect = true;
  std::uint64_t seed = 0;
};

/// Pre-processed network inputs for a list of sequences: root-centered poses
/// padded or cropped to a fixed length, their frame masks and raw affective
/// features.
struct PoseInputs {
  Index frames = 0;
  std::vector<std::string> ids;
  // Per sequence, 3 x T x V values in channel-major order.
  std::vector<Eigen::VectorXd> poses;
  std::vector<Eigen::VectorXd> masks;
  std::vector<AffectiveVector> affective;

  std::size_t size() const { return poses.size(); }
};

PoseInputs prepare_inputs(const Dataset& dataset, const std::vector<std::size_t>& indices,
                          Index frames);

// Training targets: index into the seen class list, or the dummy index.
struct SupervisedSet {
  PoseInputs inputs;
  std::vector<int> labels;
  std::vector<std::string> seen_classes;
  int dummy_label() const { return int(seen_classes.size()); }
};

/// Labels every selected sequence by its position in seen_classes; any other
/// label (an unseen class) maps to the single dummy class.
SupervisedSet make_supervised_set(const Dataset& dataset, const std::vector<std::size_t>& indices,
                                  const std::vector<std::string>& seen_classes, Index frames);

struct FsGerOutput {
  Tensor logits;    // [B x (seen + 1)]
  Tensor features;  // [B x feature_dim]
};

/// Three graph-conv / temporal-conv / BatchNorm / ReLU blocks, a 1x1
/// projection, masked global pooling, concatenation with the standardized
/// affective features, two fully connected layers producing the gesture
/// feature and a linear classification head.
class FsGerModel {
 public:
  FsGerModel(const FsGerConfig& config, std::uint64_t seed);

  const FsGerConfig& config() const { return config_; }
  const Tensor& adjacency() const { return adjacency_; }

  // poses [B x 3 x T x V], affective [B x 18], mask [B x T] or null.
  FsGerOutput forward(const Tensor& poses, const Tensor& affective,
                      const Eigen::MatrixXd* frame_mask, bool training);

  // Batches rows of prepared inputs and runs forward.
  FsGerOutput forward(const PoseInputs& inputs, const std::vector<std::size_t>& rows,
                      bool training);

  std::vector<Tensor> parameters() const;

  void set_affective_normalization(const AffectiveVector& mean, const AffectiveVector& scale);
  const Eigen::VectorXd& affective_mean() const { return affective_mean_; }
  const Eigen::VectorXd& affective_scale() const { return affective_scale_; }

  Checkpoint to_checkpoint(std::uint64_t seed) const;
  static FsGerModel from_checkpoint(const Checkpoint& checkpoint);

 private:
  struct Block {
    Tensor graph_weight;     // [C_out x C_in]
    Tensor temporal_kernel;  // [C_out x C_out x K]
    Tensor bn_gamma, bn_beta;
    BatchNormState bn;
    Index stride = 1;
  };

  FsGerConfig config_;
  Tensor adjacency_;
  std::array<Block, 3> blocks_;
  Tensor proj_kernel_, proj_bias_;
  Tensor fc1_w_, fc1_b_, fc2_w_, fc2_b_, head_w_, head_b_;
  Eigen::VectorXd affective_mean_;
  Eigen::VectorXd affective_scale_;
};

/// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I. Throws
/// ConfigError for a disconnected topology.
Tensor normalize_adjacency(const SkeletonTopology& topology);

struct FsGerEpoch {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct FsGerTrainingLog {
  std::vector<FsGerEpoch> epochs;
  void write_csv(const std::filesystem::path& path) const;
};

/// Minimizes softmax cross-entropy with Adam. The batch partition is drawn
/// once from the seed and the batch order is reshuffled every epoch; the
/// logged loss and accuracy are means over the epoch's training-mode passes.
/// Affective normalization is fitted on the training set first. on_epoch, if
/// given, sees every logged epoch and ends training by returning false.
FsGerTrainingLog train_supervised(FsGerModel& model, const SupervisedSet& data,
                                  const FsGerTrainConfig& config,
                                  const std::function<bool(const FsGerEpoch&)>& on_epoch = {});

struct GestureFeature {
  std::string id;
  Eigen::VectorXd values;
  // Class word, or empty for unlabeled features.
  std::string label;
  // Set when the sequence belonged to the dummy class during training.
  bool dummy = false;
};

/// One feature vector per prepared sequence, computed in inference mode.
std::vector<Eigen::VectorXd> extract_features(FsGerModel& model, const PoseInputs& inputs);

}  // namespace gzsl
