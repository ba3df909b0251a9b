#pragma once

#include "gzsl/skeleton.hpp"

#include <Eigen/Geometry>

#include <random>
#include <string>

namespace gzsl::testing {

inline PoseSequence random_sequence(std::mt19937_64& rng, int frames, const std::string& id,
                                    double frame_rate = 30.0) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  PoseSequence s;
  s.id = id;
  s.frame_rate = frame_rate;
  for (int t = 0; t < frames; ++t) {
    Frame f;
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = dist(rng);
    s.frames.push_back(f);
  }
  return s;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  return q.normalized().toRotationMatrix();
}

inline Eigen::Matrix3d random_yaw(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(-3.14159, 3.14159);
  return Eigen::AngleAxisd(a(rng), Eigen::Vector3d::UnitY()).toRotationMatrix();
}

inline PoseSequence transformed(const PoseSequence& s, const Eigen::Matrix3d& r,
                                const Eigen::Vector3d& offset) {
  PoseSequence out = s;
  for (auto& f : out.frames) f = ((r * f).colwise() + offset).eval();
  return out;
}

}  // namespace gzsl::testing
