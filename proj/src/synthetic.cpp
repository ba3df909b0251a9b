#include "gzsl/synthetic.hpp"

#include "gzsl/errors.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace gzsl {

namespace {

constexpr double kUpperArm = 0.28;
constexpr double kForearm = 0.26;

// Rotation of v about the x axis (sagittal swing).
Eigen::Vector3d swing(const Eigen::Vector3d& v, double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitX()) * v;
}

Frame rest_torso() {
  Frame f = Frame::Zero();
  f.col(joint_index(Joint::kPelvis)) << 0.0, 1.0, 0.0;
  f.col(joint_index(Joint::kBackbone)) << 0.0, 1.25, 0.0;
  f.col(joint_index(Joint::kNeck)) << 0.0, 1.5, 0.0;
  f.col(joint_index(Joint::kRightShoulder)) << -0.18, 1.46, 0.0;
  f.col(joint_index(Joint::kLeftShoulder)) << 0.18, 1.46, 0.0;
  return f;
}

}  // namespace

std::vector<std::string> default_emotion_words(int count) {
  static const std::array<const char*, 11> kWords = {
      "amusement", "anger", "disgust", "fear",  "joy",     "neutral",
      "pride",     "relief", "sadness", "shame", "surprise"};
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) {
    if (i < int(kWords.size())) {
      out.emplace_back(kWords[std::size_t(i)]);
    } else {
      out.push_back("class" + std::to_string(i));
    }
  }
  return out;
}

SynthConfig default_synth_config(int count, int sequences_per_class, int frames,
                                 std::uint64_t seed) {
  if (count < 2) throw ConfigError("synthetic data needs at least two classes");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Eigen::Vector3d> placed;
  for (int i = 0; i < count; ++i) {
    Eigen::Vector3d best = Eigen::Vector3d::Zero();
    double best_gap = -1.0;
    for (int c = 0; c < 64; ++c) {
      const Eigen::Vector3d cand(unit(rng), unit(rng), unit(rng));
      double gap = std::numeric_limits<double>::infinity();
      for (const auto& p : placed) gap = std::min(gap, (p - cand).norm());
      if (gap > best_gap) {
        best_gap = gap;
        best = cand;
      }
    }
    placed.push_back(best);
  }
  SynthConfig config;
  config.sequences_per_class = sequences_per_class;
  config.frames = frames;
  const auto words = default_emotion_words(count);
  for (int i = 0; i < count; ++i) {
    const Eigen::Vector3d& s = placed[std::size_t(i)];
    ClassMotion m;
    m.name = words[std::size_t(i)];
    m.amplitude = 0.1 + 0.8 * s[0];
    m.frequency = 0.4 + 1.6 * s[1];
    m.openness = 0.1 + 1.1 * s[2];
    m.style = s;
    config.classes.push_back(m);
  }
  return config;
}

Dataset generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  if (config.classes.size() < 2) throw ConfigError("synthetic data needs at least two classes");
  if (config.frames < 2) throw ConfigError("synthetic sequences need at least two frames");
  if (config.sequences_per_class < 1) throw ConfigError("sequences_per_class must be positive");
  bool varied = false;
  for (const auto& c : config.classes) {
    const auto& f = config.classes.front();
    varied |= c.amplitude != f.amplitude || c.frequency != f.frequency || c.openness != f.openness;
  }
  if (!varied) throw ConfigError("all synthetic classes share identical motion parameters");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<PoseSequence> sequences;
  std::vector<std::string> names;
  for (const auto& cls : config.classes) names.push_back(cls.name);

  const Frame torso = rest_torso();
  for (const auto& cls : config.classes) {
    for (int k = 0; k < config.sequences_per_class; ++k) {
      const double amplitude = cls.amplitude * (1.0 + config.style_jitter * gauss(rng));
      const double frequency = cls.frequency * (1.0 + config.style_jitter * gauss(rng));
      const double openness = cls.openness + config.openness_jitter * gauss(rng);
      const double phase = 2.0 * std::numbers::pi * unit(rng);
      const double yaw = config.yaw_range * (2.0 * unit(rng) - 1.0);
      const Eigen::Vector3d offset(config.translation_range * (2.0 * unit(rng) - 1.0), 0.0,
                                   config.translation_range * (2.0 * unit(rng) - 1.0));
      const Eigen::Matrix3d heading =
          Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();

      PoseSequence seq;
      char id[96];
      std::snprintf(id, sizeof id, "%s_%03d", cls.name.c_str(), k);
      seq.id = id;
      seq.label = cls.name;
      seq.frame_rate = config.frame_rate;
      for (int t = 0; t < config.frames; ++t) {
        const double time = double(t) / config.frame_rate;
        const double wave = 2.0 * std::numbers::pi * frequency * time + phase;
        Frame f = torso;
        for (int side : {-1, 1}) {
          const double beta = amplitude * std::sin(wave + (side > 0 ? std::numbers::pi : 0.0));
          const Eigen::Vector3d hang(side * std::sin(openness), -std::cos(openness), 0.0);
          const Joint shoulder = side < 0 ? Joint::kRightShoulder : Joint::kLeftShoulder;
          const Joint elbow = side < 0 ? Joint::kRightElbow : Joint::kLeftElbow;
          const Joint wrist = side < 0 ? Joint::kRightWrist : Joint::kLeftWrist;
          const Eigen::Vector3d s = f.col(joint_index(shoulder));
          const Eigen::Vector3d e = s + kUpperArm * swing(hang, beta);
          f.col(joint_index(elbow)) = e;
          f.col(joint_index(wrist)) = e + kForearm * swing(hang, 1.3 * beta - 0.25);
        }
        const double nod = 0.25 * amplitude * std::sin(2.0 * wave);
        f.col(joint_index(Joint::kHead)) =
            f.col(joint_index(Joint::kNeck)) + swing(Eigen::Vector3d(0.0, 0.18, 0.03), nod);
        f = (heading * f).colwise() + offset;
        if (config.joint_noise > 0.0) {
          for (int j = 0; j < kJointCount; ++j) {
            for (int a = 0; a < 3; ++a) f(a, j) += config.joint_noise * gauss(rng);
          }
        }
        seq.frames.push_back(f);
      }
      sequences.push_back(std::move(seq));
    }
  }
  return Dataset(std::move(sequences), std::move(names));
}

EmotionLexicon synthetic_lexicon(const SynthConfig& config, Eigen::Index dim, std::uint64_t seed,
                                 double scale, double noise) {
  if (dim < 1) throw ConfigError("embedding dimension must be positive");
  std::mt19937_64 rng(seed ^ 0x5eed1e55u);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd axes(dim, 3);
  for (Eigen::Index i = 0; i < axes.size(); ++i) axes.data()[i] = gauss(rng);
  if (dim >= 3) {
    axes = Eigen::HouseholderQR<Eigen::MatrixXd>(axes).householderQ() *
           Eigen::MatrixXd::Identity(dim, 3);
  } else {
    axes /= std::sqrt(double(dim));
  }
  std::vector<std::string> words;
  Eigen::MatrixXd table(Eigen::Index(config.classes.size()), dim);
  for (std::size_t i = 0; i < config.classes.size(); ++i) {
    const auto& c = config.classes[i];
    words.push_back(c.name);
    Eigen::VectorXd e = scale * axes * (c.style - Eigen::Vector3d::Constant(0.5));
    for (Eigen::Index k = 0; k < dim; ++k) e[k] += noise * gauss(rng);
    table.row(Eigen::Index(i)) = e.transpose();
  }
  return EmotionLexicon(std::move(words), std::move(table));
}

}  // namespace gzsl
