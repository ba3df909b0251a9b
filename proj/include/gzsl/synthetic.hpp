#pragma once

#include "gzsl/lexicon.hpp"
#include "gzsl/skeleton.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gzsl {

// Motion style of one synthetic emotion class.
struct ClassMotion {
  std::string name;
  // Peak arm-swing angle (radians). Zero freezes wrists and head.
  double amplitude = 0.4;
  // Swing frequency (Hz); with the amplitude it sets the mean wrist speed.
  double frequency = 1.0;
  // Arm abduction away from the torso (radians).
  double openness = 0.4;
  // Position of the class in the unit cube of style space. The synthetic
  // lexicon maps these coordinates linearly into embedding space, so classes
  // close in style are close semantically.
  Eigen::Vector3d style = Eigen::Vector3d::Zero();
};

struct SynthConfig {
  std::vector<ClassMotion> classes;
  int sequences_per_class = 40;
  int frames = 60;
  double frame_rate = 30.0;
  // Relative per-sequence jitter of amplitude and frequency.
  double style_jitter = 0.08;
  // Absolute per-sequence jitter of openness (radians).
  double openness_jitter = 0.05;
  // Per-frame Gaussian marker noise (meters).
  double joint_noise = 0.0;
  // Random global placement of each sequence.
  double translation_range = 1.0;
  double yaw_range = 0.3;
};

// Names for the first eleven classes follow the usual categorical emotion
// vocabulary; further classes are named class<N>.
std::vector<std::string> default_emotion_words(int count);

/// Spreads count classes over style space with a seeded maximin design and
/// maps style coordinates to motion parameters.
SynthConfig default_synth_config(int count, int sequences_per_class, int frames,
                                 std::uint64_t seed);

/// Deterministic dataset of sinusoidal upper-body gestures. Throws
/// ConfigError for fewer than two classes or when all classes share the same
/// motion parameters.
Dataset generate_synthetic(const SynthConfig& config, std::uint64_t seed);

/// Lexicon whose embeddings are a fixed random linear image of each class's
/// style coordinates plus a small isotropic perturbation.
EmotionLexicon synthetic_lexicon(const SynthConfig& config, Eigen::Index dim, std::uint64_t seed,
                                 double scale = 3.0, double noise = 0.05);

}  // namespace gzsl
