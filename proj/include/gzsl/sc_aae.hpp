#pragma once

#include "gzsl/adam.hpp"
#include "gzsl/checkpoint.hpp"
#include "gzsl/fs_ger.hpp"
#include "gzsl/lexicon.hpp"
#include "gzsl/ops.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

namespace gzsl {

struct ScAaeConfig {
  Index feature_dim = 64;
  Index semantic_dim = 300;
  Index latent_dim = 16;
  // Width of both hidden layers of the encoder and the decoder.
  Index hidden = 100;
  std::array<Index, 2> language_hidden = {100, 100};
  std::array<Index, 2> feature_hidden = {100, 32};

  nlohmann::json to_json() const;
  static ScAaeConfig from_json(const nlohmann::json& j);
};

struct AaeHyperParams {
  double gamma = 1.0;  // language-adversarial weight
  double delta = 1.5;  // feature-adversarial weight
  int epochs = 200;
  int batch_size = 6;
  Index latent_dim = 16;
  double supervised_weight = 1.0;  // weight of MSE(y_hat, e_y) on labelled pairs
  double autoencoder_lr = 1e-3;
  double generator_lr = 1e-3;
  double discriminator_lr = 1e-3;

  void validate() const;
};

// Fully connected layer with weights [in x out].
struct Dense {
  Tensor w, b;
  Tensor operator()(const Tensor& x) const { return linear(x, w, b); }
};

// Stack of Dense layers with ReLU between them (none after the last).
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<Index>& widths, std::mt19937_64& rng);

  Tensor operator()(const Tensor& x) const;
  std::vector<Tensor> parameters() const;
  std::vector<Dense>& layers() { return layers_; }
  const std::vector<Dense>& layers() const { return layers_; }

 private:
  std::vector<Dense> layers_;
};

struct Encoding {
  Tensor z;       // [B x latent]
  Tensor y_hat;   // [B x semantic]
};

/// Encoder with latent and semantic heads, a decoder from (z, y_hat) back to
/// the gesture feature, and sigmoid discriminators on the semantic and latent
/// outputs. Inputs are standardized with statistics fitted during training.
class ScAaeModel {
 public:
  ScAaeModel(const ScAaeConfig& config, std::uint64_t seed);

  const ScAaeConfig& config() const { return config_; }

  // x rows are raw gesture features.
  Encoding encode(const Tensor& x) const;
  Tensor decode(const Tensor& z, const Tensor& y_hat) const;
  Tensor language_critic(const Tensor& y) const;
  Tensor feature_critic(const Tensor& z) const;

  // Vector conveniences for single samples.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const Eigen::VectorXd& x) const;
  Eigen::VectorXd decode(const Eigen::VectorXd& z, const Eigen::VectorXd& y_hat) const;

  // Input standardization applied inside encode.
  Tensor standardize(const Tensor& x) const;
  void set_feature_normalization(const Eigen::VectorXd& mean, const Eigen::VectorXd& scale);
  const Eigen::VectorXd& feature_mean() const { return feature_mean_; }
  const Eigen::VectorXd& feature_scale() const { return feature_scale_; }

  std::vector<Tensor> encoder_parameters() const;
  std::vector<Tensor> decoder_parameters() const;
  std::vector<Tensor> language_critic_parameters() const;
  std::vector<Tensor> feature_critic_parameters() const;
  std::vector<Tensor> parameters() const;

  Mlp& encoder_trunk() { return trunk_; }
  Dense& latent_head() { return z_head_; }
  Dense& semantic_head() { return y_head_; }

  Checkpoint to_checkpoint(std::uint64_t seed) const;
  static ScAaeModel from_checkpoint(const Checkpoint& checkpoint);

 private:
  ScAaeConfig config_;
  Mlp trunk_;
  Dense z_head_, y_head_;
  Mlp decoder_;
  Mlp language_critic_;
  Mlp feature_critic_;
  Eigen::VectorXd feature_mean_;
  Eigen::VectorXd feature_scale_;
};

struct AaeEpoch {
  int epoch = 0;
  double recon_loss = 0.0;
  double d_lang_loss = 0.0;
  double d_feat_loss = 0.0;
  double gen_loss = 0.0;
  double sup_loss = 0.0;
};

struct AaeTrainingLog {
  std::vector<AaeEpoch> epochs;
  void write_csv(const std::filesystem::path& path) const;
  std::string csv() const;
};

// gamma * BCE(D_lang(y_hat), 1) + delta * BCE(D_feat(z), 1) on the rows of x;
// a term with zero weight is left out of the graph entirely. Undefined when
// both weights are zero.
Tensor generator_loss(const ScAaeModel& model, const Tensor& x, double gamma, double delta);

// BCE(critic(real), 1) + BCE(critic(fake), 0).
Tensor critic_loss(const Tensor& real_scores, const Tensor& fake_scores);

/// The individual updates of one training batch, exposed so that each step's
/// effect on the parameters can be inspected.
class ScAaeTrainer {
 public:
  ScAaeTrainer(ScAaeModel& model, const EmotionLexicon& lexicon, const AaeHyperParams& hp,
               std::uint64_t seed);

  struct Batch {
    RowMatrix seen;                 // labelled features
    RowMatrix targets;              // matching class embeddings
    RowMatrix unlabeled;            // may have zero rows
  };

  // Encoder + decoder on reconstruction of all rows plus the supervised
  // semantic term. Returns {reconstruction, supervised}.
  std::pair<double, double> reconstruction_step(const Batch& batch);
  // Feature critic: prior samples versus encoder latents of all rows.
  double feature_critic_step(const Batch& batch);
  // Language critic: lexicon embeddings versus encoder semantic outputs.
  double language_critic_step(const Batch& batch);
  // Encoder against both critics on the labelled rows.
  double generator_step(const Batch& batch);

  std::mt19937_64& rng() { return rng_; }

 private:
  RowMatrix prior_samples(Index rows);
  RowMatrix lexicon_samples(Index rows);

  ScAaeModel& model_;
  const EmotionLexicon& lexicon_;
  AaeHyperParams hp_;
  std::mt19937_64 rng_;
  Adam autoencoder_opt_;
  Adam generator_opt_;
  Adam language_opt_;
  Adam feature_opt_;
};

/// Two-phase adversarial training. Batches pair each labelled feature with
/// its class embedding, one class per slot; unlabeled features take part in
/// reconstruction and in the feature-critic update only.
AaeTrainingLog train_sc_aae(ScAaeModel& model, std::span<const GestureFeature> seen,
                            std::span<const GestureFeature> unseen,
                            const EmotionLexicon& lexicon, const AaeHyperParams& hp,
                            std::uint64_t seed);

// Nearest lexicon word to the encoder's semantic output.
std::string classify(const ScAaeModel& model, const Eigen::VectorXd& x,
                     const EmotionLexicon& lexicon, Restrict restrict = Restrict::kAll);

}  // namespace gzsl
