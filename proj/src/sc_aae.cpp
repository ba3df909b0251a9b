#include "gzsl/sc_aae.hpp"

#include "gzsl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace gzsl {

nlohmann::json ScAaeConfig::to_json() const {
  return {{"feature_dim", feature_dim},         {"semantic_dim", semantic_dim},
          {"latent_dim", latent_dim},           {"hidden", hidden},
          {"language_hidden", language_hidden}, {"feature_hidden", feature_hidden}};
}

ScAaeConfig ScAaeConfig::from_json(const nlohmann::json& j) {
  ScAaeConfig c;
  c.feature_dim = j.at("feature_dim").get<Index>();
  c.semantic_dim = j.at("semantic_dim").get<Index>();
  c.latent_dim = j.at("latent_dim").get<Index>();
  c.hidden = j.at("hidden").get<Index>();
  c.language_hidden = j.at("language_hidden").get<std::array<Index, 2>>();
  c.feature_hidden = j.at("feature_hidden").get<std::array<Index, 2>>();
  return c;
}

void AaeHyperParams::validate() const {
  if (gamma < 0.0 || delta < 0.0) throw ConfigError("gamma and delta must be non-negative");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (latent_dim < 1) throw ConfigError("latent dimension must be positive");
  if (supervised_weight < 0.0) throw ConfigError("supervised weight must be non-negative");
}

namespace {

Dense make_dense(Index in, Index out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / double(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::VectorXd w(in * out);
  for (Index i = 0; i < w.size(); ++i) w[i] = dist(rng);
  return {Tensor({in, out}, std::move(w), true), Tensor({out}, true)};
}

Tensor rows_tensor(const RowMatrix& m) {
  return Tensor({m.rows(), m.cols()}, Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()));
}

void append_params(std::vector<Tensor>& out, const std::vector<Tensor>& more) {
  out.insert(out.end(), more.begin(), more.end());
}

void zero_all(const std::vector<Tensor>& params) {
  for (auto p : params) p.zero_grad();
}

}  // namespace

Mlp::Mlp(const std::vector<Index>& widths, std::mt19937_64& rng) {
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers_.push_back(make_dense(widths[i], widths[i + 1], rng));
  }
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](h);
    if (i + 1 < layers_.size()) h = relu(h);
  }
  return h;
}

std::vector<Tensor> Mlp::parameters() const {
  std::vector<Tensor> out;
  for (const auto& l : layers_) out.insert(out.end(), {l.w, l.b});
  return out;
}

ScAaeModel::ScAaeModel(const ScAaeConfig& config, std::uint64_t seed)
    : config_(config),
      feature_mean_(Eigen::VectorXd::Zero(config.feature_dim)),
      feature_scale_(Eigen::VectorXd::Ones(config.feature_dim)) {
  if (config.feature_dim < 1 || config.semantic_dim < 1 || config.latent_dim < 1 ||
      config.hidden < 1) {
    throw ConfigError("SC-AAE dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  const Index h = config.hidden;
  // The trunk ends in a hidden activation, so its last layer is followed by
  // ReLU explicitly in encode().
  trunk_ = Mlp({config.feature_dim, h, h}, rng);
  z_head_ = make_dense(h, config.latent_dim, rng);
  y_head_ = make_dense(h, config.semantic_dim, rng);
  decoder_ = Mlp({config.latent_dim + config.semantic_dim, h, h, config.feature_dim}, rng);
  language_critic_ = Mlp({config.semantic_dim, config.language_hidden[0],
                          config.language_hidden[1], 1},
                         rng);
  feature_critic_ = Mlp({config.latent_dim, config.feature_hidden[0], config.feature_hidden[1], 1},
                        rng);
}

Tensor ScAaeModel::standardize(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != config_.feature_dim) {
    throw ShapeError("SC-AAE input must be [B x " + std::to_string(config_.feature_dim) +
                     "], got " + shape_string(x.shape()));
  }
  RowMatrix m = x.matrix();
  m.rowwise() -= feature_mean_.transpose();
  m.array().rowwise() /= feature_scale_.transpose().array();
  return rows_tensor(m);
}

Encoding ScAaeModel::encode(const Tensor& x) const {
  const Tensor h = relu(trunk_(standardize(x)));
  return {z_head_(h), y_head_(h)};
}

Tensor ScAaeModel::decode(const Tensor& z, const Tensor& y_hat) const {
  if (z.rank() != 2 || z.dim(1) != config_.latent_dim || y_hat.rank() != 2 ||
      y_hat.dim(1) != config_.semantic_dim) {
    throw ShapeError("decode: got z " + shape_string(z.shape()) + " and y_hat " +
                     shape_string(y_hat.shape()));
  }
  return decoder_(concat(z, y_hat));
}

Tensor ScAaeModel::language_critic(const Tensor& y) const { return sigmoid(language_critic_(y)); }

Tensor ScAaeModel::feature_critic(const Tensor& z) const { return sigmoid(feature_critic_(z)); }

std::pair<Eigen::VectorXd, Eigen::VectorXd> ScAaeModel::encode(const Eigen::VectorXd& x) const {
  if (x.size() != config_.feature_dim) {
    throw ShapeError("encode: input has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(config_.feature_dim));
  }
  const Encoding e = encode(Tensor({1, x.size()}, x));
  return {e.z.values(), e.y_hat.values()};
}

Eigen::VectorXd ScAaeModel::decode(const Eigen::VectorXd& z, const Eigen::VectorXd& y_hat) const {
  return decode(Tensor({1, z.size()}, z), Tensor({1, y_hat.size()}, y_hat)).values();
}

void ScAaeModel::set_feature_normalization(const Eigen::VectorXd& mean,
                                           const Eigen::VectorXd& scale) {
  if (mean.size() != config_.feature_dim || scale.size() != config_.feature_dim) {
    throw ShapeError("feature normalization has the wrong dimension");
  }
  if ((scale.array() <= 0.0).any()) throw ContractError("feature scale must be positive");
  feature_mean_ = mean;
  feature_scale_ = scale;
}

std::vector<Tensor> ScAaeModel::encoder_parameters() const {
  std::vector<Tensor> out = trunk_.parameters();
  out.insert(out.end(), {z_head_.w, z_head_.b, y_head_.w, y_head_.b});
  return out;
}

std::vector<Tensor> ScAaeModel::decoder_parameters() const { return decoder_.parameters(); }

std::vector<Tensor> ScAaeModel::language_critic_parameters() const {
  return language_critic_.parameters();
}

std::vector<Tensor> ScAaeModel::feature_critic_parameters() const {
  return feature_critic_.parameters();
}

std::vector<Tensor> ScAaeModel::parameters() const {
  std::vector<Tensor> out = encoder_parameters();
  append_params(out, decoder_parameters());
  append_params(out, language_critic_parameters());
  append_params(out, feature_critic_parameters());
  return out;
}

Checkpoint ScAaeModel::to_checkpoint(std::uint64_t seed) const {
  Checkpoint ck;
  ck.kind = "sc-aae";
  ck.config = config_.to_json();
  ck.seed = seed;
  const auto params = parameters();
  for (std::size_t i = 0; i < params.size(); ++i) ck.add("param" + std::to_string(i), params[i]);
  ck.add("feature_mean", feature_mean_);
  ck.add("feature_scale", feature_scale_);
  return ck;
}

ScAaeModel ScAaeModel::from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "sc-aae") throw SchemaError("checkpoint kind is '" + ck.kind + "', not sc-aae");
  ScAaeModel m(ScAaeConfig::from_json(ck.config), ck.seed);
  auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) ck.restore("param" + std::to_string(i), params[i]);
  ck.restore("feature_mean", m.feature_mean_);
  ck.restore("feature_scale", m.feature_scale_);
  return m;
}

std::string AaeTrainingLog::csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,recon_loss,d_lang_loss,d_feat_loss,gen_loss,sup_loss\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.recon_loss << ',' << e.d_lang_loss << ',' << e.d_feat_loss << ','
        << e.gen_loss << ',' << e.sup_loss << '\n';
  }
  return out.str();
}

void AaeTrainingLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << csv();
}

ScAaeTrainer::ScAaeTrainer(ScAaeModel& model, const EmotionLexicon& lexicon,
                           const AaeHyperParams& hp, std::uint64_t seed)
    : model_(model), lexicon_(lexicon), hp_(hp), rng_(seed) {
  hp.validate();
  if (lexicon.dim() != model.config().semantic_dim) {
    throw ShapeError("lexicon dimension " + std::to_string(lexicon.dim()) +
                     " does not match the model's semantic dimension " +
                     std::to_string(model.config().semantic_dim));
  }
  std::vector<Tensor> autoencoder = model.encoder_parameters();
  append_params(autoencoder, model.decoder_parameters());
  autoencoder_opt_ = Adam(autoencoder, {.learning_rate = hp.autoencoder_lr});
  generator_opt_ = Adam(model.encoder_parameters(), {.learning_rate = hp.generator_lr});
  language_opt_ = Adam(model.language_critic_parameters(), {.learning_rate = hp.discriminator_lr});
  feature_opt_ = Adam(model.feature_critic_parameters(), {.learning_rate = hp.discriminator_lr});
}

RowMatrix ScAaeTrainer::prior_samples(Index rows) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  RowMatrix m(rows, model_.config().latent_dim);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng_);
  return m;
}

RowMatrix ScAaeTrainer::lexicon_samples(Index rows) {
  std::uniform_int_distribution<std::size_t> pick(0, lexicon_.size() - 1);
  RowMatrix m(rows, lexicon_.dim());
  for (Index i = 0; i < rows; ++i) m.row(i) = lexicon_.embeddings().row(Index(pick(rng_)));
  return m;
}

namespace {

RowMatrix stack_rows(const RowMatrix& a, const RowMatrix& b) {
  RowMatrix out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  if (b.rows() > 0) out.bottomRows(b.rows()) = b;
  return out;
}

}  // namespace

std::pair<double, double> ScAaeTrainer::reconstruction_step(const Batch& batch) {
  const RowMatrix all = stack_rows(batch.seen, batch.unlabeled);
  const Tensor x = rows_tensor(all);
  const Index n_seen = batch.seen.rows();
  GradientTape tape;
  Tensor loss, recon, sup;
  {
    TapeScope scope(tape);
    const Encoding e = model_.encode(x);
    // The decoder reconstructs the standardized input.
    recon = mse_loss(model_.decode(e.z, e.y_hat), model_.standardize(x));
    loss = recon;
    if (hp_.supervised_weight > 0.0 && n_seen > 0) {
      // Slice of y_hat for labelled rows, kept on the tape via a selector.
      RowMatrix select = RowMatrix::Zero(n_seen, all.rows());
      select.leftCols(n_seen).setIdentity();
      const Tensor y_seen = matmul(rows_tensor(select), e.y_hat);
      sup = mse_loss(y_seen, rows_tensor(batch.targets));
      loss = add(loss, scale(sup, hp_.supervised_weight));
    }
  }
  zero_all(model_.parameters());
  tape.backward(loss);
  autoencoder_opt_.step();
  return {recon.item(), sup.defined() ? sup.item() : 0.0};
}

double ScAaeTrainer::feature_critic_step(const Batch& batch) {
  const RowMatrix all = stack_rows(batch.seen, batch.unlabeled);
  const Tensor fake = model_.encode(rows_tensor(all)).z.detach();
  const Tensor real = rows_tensor(prior_samples(all.rows()));
  GradientTape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = critic_loss(model_.feature_critic(real), model_.feature_critic(fake));
  }
  zero_all(model_.parameters());
  tape.backward(loss);
  feature_opt_.step();
  return loss.item();
}

double ScAaeTrainer::language_critic_step(const Batch& batch) {
  const Tensor fake = model_.encode(rows_tensor(batch.seen)).y_hat.detach();
  const Tensor real = rows_tensor(lexicon_samples(batch.seen.rows()));
  GradientTape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = critic_loss(model_.language_critic(real), model_.language_critic(fake));
  }
  zero_all(model_.parameters());
  tape.backward(loss);
  language_opt_.step();
  return loss.item();
}

Tensor generator_loss(const ScAaeModel& model, const Tensor& x, double gamma, double delta) {
  const Encoding e = model.encode(x);
  Tensor loss;
  if (gamma != 0.0) loss = scale(binary_cross_entropy(model.language_critic(e.y_hat), 1.0), gamma);
  if (delta != 0.0) {
    Tensor feat = scale(binary_cross_entropy(model.feature_critic(e.z), 1.0), delta);
    loss = loss.defined() ? add(loss, feat) : feat;
  }
  return loss;
}

Tensor critic_loss(const Tensor& real_scores, const Tensor& fake_scores) {
  return add(binary_cross_entropy(real_scores, 1.0), binary_cross_entropy(fake_scores, 0.0));
}

double ScAaeTrainer::generator_step(const Batch& batch) {
  if (hp_.gamma == 0.0 && hp_.delta == 0.0) return 0.0;
  GradientTape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = generator_loss(model_, rows_tensor(batch.seen), hp_.gamma, hp_.delta);
  }
  zero_all(model_.parameters());
  tape.backward(loss);
  generator_opt_.step();
  // Critic gradients from this pass are discarded.
  zero_all(model_.language_critic_parameters());
  zero_all(model_.feature_critic_parameters());
  return loss.item();
}

AaeTrainingLog train_sc_aae(ScAaeModel& model, std::span<const GestureFeature> seen,
                            std::span<const GestureFeature> unseen,
                            const EmotionLexicon& lexicon, const AaeHyperParams& hp,
                            std::uint64_t seed) {
  hp.validate();
  const Index dim = model.config().feature_dim;
  if (seen.empty()) throw ContractError("SC-AAE training needs labelled features");
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    const auto& f = seen[i];
    if (f.values.size() != dim) throw ShapeError("feature '" + f.id + "' has the wrong dimension");
    if (!lexicon.contains(f.label) || lexicon.is_unseen(f.label)) {
      throw ContractError("feature '" + f.id + "' has label '" + f.label +
                          "' outside the seen classes");
    }
    by_class[lexicon.index_of(f.label)].push_back(i);
  }
  for (const auto& f : unseen) {
    if (f.values.size() != dim) throw ShapeError("feature '" + f.id + "' has the wrong dimension");
  }

  // Standardize with statistics of every training feature.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& f : seen) mean += f.values;
  for (const auto& f : unseen) mean += f.values;
  const double total = double(seen.size() + unseen.size());
  mean /= total;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const auto& f : seen) var += (f.values - mean).cwiseAbs2();
  for (const auto& f : unseen) var += (f.values - mean).cwiseAbs2();
  Eigen::VectorXd scale_vec = (var / total).cwiseSqrt();
  for (Index k = 0; k < dim; ++k) {
    if (!(scale_vec[k] > 1e-12)) scale_vec[k] = 1.0;
  }
  model.set_feature_normalization(mean, scale_vec);

  ScAaeTrainer trainer(model, lexicon, hp, seed);
  auto& rng = trainer.rng();

  std::vector<std::size_t> class_keys;
  for (const auto& [k, v] : by_class) class_keys.push_back(k);
  std::vector<std::size_t> unseen_order(unseen.size());
  std::iota(unseen_order.begin(), unseen_order.end(), 0);
  std::size_t unseen_cursor = unseen_order.size();

  AaeTrainingLog log;
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    // Round-robin over classes so consecutive slots hold distinct classes.
    std::shuffle(class_keys.begin(), class_keys.end(), rng);
    for (auto& [k, items] : by_class) std::shuffle(items.begin(), items.end(), rng);
    std::size_t rounds = 0;
    for (const auto& [k, items] : by_class) rounds = std::max(rounds, items.size());
    std::vector<std::size_t> stream;
    for (std::size_t r = 0; r < rounds; ++r) {
      for (std::size_t k : class_keys) {
        const auto& items = by_class[k];
        if (r < items.size()) stream.push_back(items[r]);
      }
    }

    AaeEpoch stats;
    stats.epoch = epoch;
    int batches = 0;
    for (std::size_t s = 0; s < stream.size(); s += std::size_t(hp.batch_size)) {
      const std::size_t end = std::min(stream.size(), s + std::size_t(hp.batch_size));
      ScAaeTrainer::Batch batch;
      batch.seen.resize(Index(end - s), dim);
      batch.targets.resize(Index(end - s), lexicon.dim());
      for (std::size_t r = s; r < end; ++r) {
        const auto& f = seen[stream[r]];
        batch.seen.row(Index(r - s)) = f.values.transpose();
        batch.targets.row(Index(r - s)) = lexicon.embeddings().row(Index(lexicon.index_of(f.label)));
      }
      const std::size_t n_unlabeled = std::min(unseen.size(), std::size_t(hp.batch_size));
      batch.unlabeled.resize(Index(n_unlabeled), dim);
      for (std::size_t r = 0; r < n_unlabeled; ++r) {
        if (unseen_cursor == unseen_order.size()) {
          std::shuffle(unseen_order.begin(), unseen_order.end(), rng);
          unseen_cursor = 0;
        }
        batch.unlabeled.row(Index(r)) = unseen[unseen_order[unseen_cursor++]].values.transpose();
      }

      const auto [recon, sup] = trainer.reconstruction_step(batch);
      stats.recon_loss += recon;
      stats.sup_loss += sup;
      stats.d_feat_loss += trainer.feature_critic_step(batch);
      stats.d_lang_loss += trainer.language_critic_step(batch);
      stats.gen_loss += trainer.generator_step(batch);
      ++batches;
    }
    if (batches > 0) {
      stats.recon_loss /= batches;
      stats.sup_loss /= batches;
      stats.d_feat_loss /= batches;
      stats.d_lang_loss /= batches;
      stats.gen_loss /= batches;
    }
    log.epochs.push_back(stats);
  }
  return log;
}

std::string classify(const ScAaeModel& model, const Eigen::VectorXd& x,
                     const EmotionLexicon& lexicon, Restrict restrict) {
  return nearest_emotion(lexicon, model.encode(x).second, restrict);
}

}  // namespace gzsl
