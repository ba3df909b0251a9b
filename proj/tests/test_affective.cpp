#include "fixtures.hpp"

#include "gzsl/affective.hpp"
#include "gzsl/errors.hpp"
#include "gzsl/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace gzsl;
using gzsl::testing::random_rotation;
using gzsl::testing::random_sequence;
using gzsl::testing::random_yaw;
using gzsl::testing::transformed;

namespace {

// Oracles below are written from the feature definitions with plain loops and
// share no code with the library.

using V3 = Eigen::Vector3d;

double volume_oracle(const PoseSequence& s) {
  double total = 0.0;
  for (const auto& f : s.frames) {
    double prod = 1.0;
    for (int axis = 0; axis < 3; ++axis) {
      double lo = f(axis, 0), hi = f(axis, 0);
      for (int j = 1; j < 10; ++j) {
        lo = std::min(lo, f(axis, j));
        hi = std::max(hi, f(axis, j));
      }
      prod *= hi - lo;
    }
    total += prod;
  }
  return total / s.frames.size();
}

double dist(const V3& a, const V3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double heron(const V3& a, const V3& b, const V3& c) {
  const double x = dist(a, b), y = dist(b, c), z = dist(c, a);
  const double s = 0.5 * (x + y + z);
  return std::sqrt(std::max(0.0, s * (s - x) * (s - y) * (s - z)));
}

// Law of cosines at apex.
double angle_oracle(const V3& apex, const V3& a, const V3& b) {
  const double p = dist(apex, a), q = dist(apex, b), r = dist(a, b);
  const double c = (p * p + q * q - r * r) / (2 * p * q);
  return std::acos(std::max(-1.0, std::min(1.0, c)));
}

double derivative_oracle(const PoseSequence& s, Joint j, int order) {
  std::vector<V3> track;
  for (Eigen::Index t = 0; t < s.length(); ++t) track.push_back(s.joint(t, j));
  for (int k = 0; k < order; ++k) {
    std::vector<V3> next;
    for (std::size_t t = 0; t + 1 < track.size(); ++t) next.push_back(track[t + 1] - track[t]);
    track = next;
  }
  double total = 0.0;
  for (const auto& d : track) total += dist(d, V3::Zero());
  return total / track.size() * std::pow(s.frame_rate, order);
}

AffectiveVector extract_oracle(const PoseSequence& raw) {
  PoseSequence s = raw;
  for (auto& f : s.frames) {
    const V3 root = f.col(9);
    for (int j = 0; j < 10; ++j) f.col(j) -= root;
  }
  AffectiveVector v = AffectiveVector::Zero();
  v[0] = volume_oracle(s);
  const double T = s.frames.size();
  for (const auto& f : s.frames) {
    const V3 head = f.col(0), neck = f.col(1), rsh = f.col(2), lsh = f.col(3), rwr = f.col(6),
             lwr = f.col(7), back = f.col(8), root = f.col(9);
    v[1] += angle_oracle(neck, rsh, lsh) / T;
    v[2] += angle_oracle(rsh, neck, lsh) / T;
    v[3] += angle_oracle(lsh, neck, rsh) / T;
    // Back vector runs backbone -> neck; vertical is +y.
    v[4] += angle_oracle(V3::Zero(), V3::UnitY(), neck - back) / T;
    v[5] += angle_oracle(neck, head, back) / T;
    v[6] += dist(rwr, root) / T;
    v[7] += dist(lwr, root) / T;
    v[8] += heron(neck, rwr, lwr) / T;
  }
  const Joint order[3] = {Joint::kLeftWrist, Joint::kRightWrist, Joint::kHead};
  for (int o = 1; o <= 3; ++o)
    for (int k = 0; k < 3; ++k) v[9 + 3 * (o - 1) + k] = derivative_oracle(s, order[k], o);
  return v;
}

double max_diff(const AffectiveVector& a, const AffectiveVector& b, int skip = -1) {
  double worst = 0.0;
  for (int i = 0; i < kAffectiveDim; ++i)
    if (i != skip) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// Jerk entries reach 1e5 at 30 fps, so compare relative to magnitude.
double max_rel_diff(const AffectiveVector& a, const AffectiveVector& b) {
  return ((a - b).cwiseAbs().array() / a.cwiseAbs().array().max(1.0)).maxCoeff();
}

PoseSequence static_pose(int frames) {
  PoseSequence s;
  s.id = "tpose";
  Frame f;
  f << 0, 0, 0.2, -0.2, 0.5, -0.5, 0.8, -0.8, 0, 0,  //
      1.7, 1.5, 1.45, 1.45, 1.45, 1.45, 1.45, 1.45, 1.2, 1.0,  //
      0, 0, 0, 0, 0, 0, 0, 0, 0.02, 0;
  s.frames.assign(frames, f);
  return s;
}

}  // namespace

TEST(Geometry, JointAngleExamples) {
  EXPECT_NEAR(joint_angle<double>(V3::Zero(), V3::UnitX(), V3::UnitY()).radians,
              std::numbers::pi / 2, 1e-15);
  EXPECT_EQ(joint_angle<double>(V3::Zero(), V3(1, 0, 0), V3(2, 0, 0)).radians, 0.0);
  const auto near_pi = joint_angle<double>(V3::Zero(), V3(1, 0, 0), V3(-1, 1e-8, 0));
  EXPECT_FALSE(std::isnan(near_pi.radians));
  EXPECT_NEAR(near_pi.radians, std::numbers::pi, 1e-7);
  const auto degenerate = joint_angle<double>(V3::Ones(), V3::Ones(), V3::Zero());
  EXPECT_TRUE(degenerate.degenerate);
  EXPECT_EQ(degenerate.radians, 0.0);
  // Exactly antiparallel rays must not overshoot the arccos domain.
  const double flat = vector_angle<double>(V3(0.1, 0.7, 0.3), V3(-0.1, -0.7, -0.3)).radians;
  EXPECT_FALSE(std::isnan(flat));
  EXPECT_NEAR(flat, std::numbers::pi, 1e-7);
}

TEST(Geometry, TriangleAreaMatchesHeron) {
  EXPECT_EQ(triangle_area<double>(V3::Zero(), V3::UnitX(), V3::UnitY()), 0.5);
  EXPECT_EQ(triangle_area<double>(V3::Zero(), V3(1, 1, 1), V3(2, 2, 2)), 0.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 1000; ++i) {
    const V3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng)), c(u(rng), u(rng), u(rng));
    EXPECT_NEAR(triangle_area(a, b, c), heron(a, b, c), 1e-9);
  }
}

TEST(Volume, Examples) {
  PoseSequence s = static_pose(3);
  for (auto& f : s.frames) f.setConstant(0.3);
  EXPECT_EQ(bounding_volume(s), 0.0);
  Frame cube;
  for (int j = 0; j < 10; ++j) {
    const int k = j % 8;
    cube.col(j) = V3(k & 1, (k >> 1) & 1, (k >> 2) & 1);
  }
  s.frames.assign(2, cube);
  EXPECT_EQ(bounding_volume(s), 1.0);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const PoseSequence r = random_sequence(rng, 3, "r");
    EXPECT_NEAR(bounding_volume(r), volume_oracle(r), 1e-12);
  }
}

TEST(Derivatives, ConstantVelocityAndErrors) {
  PoseSequence s = static_pose(6);
  for (int t = 0; t < 6; ++t) s.frames[t](0, joint_index(Joint::kHead)) = t;
  EXPECT_NEAR(derivative_magnitude(s, Joint::kHead, 1), 30.0, 1e-12);
  EXPECT_EQ(derivative_magnitude(s, Joint::kHead, 2), 0.0);
  EXPECT_EQ(derivative_magnitude(s, Joint::kHead, 3), 0.0);
  for (int o = 1; o <= 3; ++o) EXPECT_EQ(derivative_magnitude(s, Joint::kLeftWrist, o), 0.0);

  const PoseSequence two = static_pose(3);
  try {
    derivative_magnitude(two, Joint::kHead, 3);
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("at least 4"), std::string::npos) << e.what();
  }
}

TEST(Derivatives, RandomWalkMatchesOracle) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> step(0.0, 0.01);
  PoseSequence s = static_pose(40);
  for (std::size_t t = 1; t < s.frames.size(); ++t) {
    s.frames[t] = s.frames[t - 1];
    for (Eigen::Index i = 0; i < s.frames[t].size(); ++i) s.frames[t].data()[i] += step(rng);
  }
  for (int j = 0; j < kJointCount; ++j)
    for (int o = 1; o <= 3; ++o) {
      const double got = derivative_magnitude(s, Joint(j), o);
      EXPECT_NEAR(got, derivative_oracle(s, Joint(j), o), 1e-12 * std::max(1.0, got));
    }
}

TEST(Extract, StaticPose) {
  const PoseSequence s = static_pose(5);
  const AffectiveVector v = extract_affective(s);
  const AffectiveVector one = extract_affective(static_pose(4));
  EXPECT_EQ(v.segment(affective_index::kSpeed, 9), Eigen::VectorXd::Zero(9));
  EXPECT_LT(max_diff(v, one), 1e-14);
  EXPECT_LT(max_diff(v, extract_oracle(s)), 1e-12);
}

TEST(Extract, MatchesOracleOn200RandomSequences) {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const PoseSequence s = random_sequence(rng, 20, "r" + std::to_string(i));
    AffectiveDiagnostics diag;
    const AffectiveVector v = extract_affective(s, &diag);
    EXPECT_EQ(diag.degenerate_angles, 0);
    for (int k = 1; k <= 5; ++k) {
      EXPECT_GE(v[k], 0.0);
      EXPECT_LE(v[k], std::numbers::pi);
    }
    EXPECT_TRUE((v.array() >= 0).all());
    worst = std::max(worst, max_diff(v, extract_oracle(s)));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Extract, TranslationInvariance) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> k(-64, 64);
  for (int i = 0; i < 50; ++i) {
    // Dyadic coordinates and offsets keep every subtraction exact.
    PoseSequence s = random_sequence(rng, 20, "t");
    for (auto& f : s.frames) f = (f * 1024).array().round() / 1024;
    const V3 offset(k(rng) / 8.0, k(rng) / 8.0, k(rng) / 8.0);
    EXPECT_EQ(extract_affective(transformed(s, Eigen::Matrix3d::Identity(), offset)),
              extract_affective(s));
  }
  for (int i = 0; i < 50; ++i) {
    const PoseSequence s = random_sequence(rng, 20, "t");
    const V3 offset = V3::Random() * 10;
    EXPECT_LT(max_rel_diff(extract_affective(s),
                           extract_affective(transformed(s, Eigen::Matrix3d::Identity(), offset))),
              1e-12);
  }
}

TEST(Extract, RotationInvariance) {
  std::mt19937_64 rng(6);
  double yaw_worst = 0.0, general_worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const PoseSequence s = random_sequence(rng, 20, "r");
    const AffectiveVector base = extract_affective(s);
    // Rotations about the vertical axis preserve all 17 non-volume entries.
    const AffectiveVector yawed = extract_affective(transformed(s, random_yaw(rng), V3::Zero()));
    yaw_worst = std::max(yaw_worst, max_diff(base, yawed, affective_index::kVolume));
    // General rotations also tilt the vertical reference of the back angle.
    AffectiveVector rotated = extract_affective(transformed(s, random_rotation(rng), V3::Zero()));
    rotated[affective_index::kAngles + 3] = base[affective_index::kAngles + 3];
    general_worst = std::max(general_worst, max_diff(base, rotated, affective_index::kVolume));
  }
  EXPECT_LT(yaw_worst, 1e-9);
  EXPECT_LT(general_worst, 1e-9);
}

TEST(Extract, TimeReversal) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const PoseSequence s = random_sequence(rng, 20, "r");
    PoseSequence rev = s;
    std::reverse(rev.frames.begin(), rev.frames.end());
    const AffectiveVector a = extract_affective(s), b = extract_affective(rev);
    for (int k = 0; k < affective_index::kSpeed; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
    for (int k = 0; k < kAffectiveDim - affective_index::kSpeed; ++k)
      EXPECT_NEAR(a[affective_index::kSpeed + k], b[affective_index::kSpeed + k], 1e-9);
  }
}

TEST(Extract, DegenerateAnglesAreFlagged) {
  PoseSequence s = static_pose(4);
  for (auto& f : s.frames) f.col(joint_index(Joint::kHead)) = f.col(joint_index(Joint::kNeck));
  AffectiveDiagnostics diag;
  const AffectiveVector v = extract_affective(s, &diag);
  EXPECT_EQ(diag.degenerate_angles, 4);
  EXPECT_EQ(v[affective_index::kAngles + 4], 0.0);
}

TEST(Synthetic, DeterministicAndValidated) {
  const auto cfg = default_synth_config(2, 5, 30, 1);
  EXPECT_EQ(generate_synthetic(cfg, 7), generate_synthetic(cfg, 7));
  EXPECT_NE(generate_synthetic(cfg, 7), generate_synthetic(cfg, 8));
  SynthConfig same = cfg;
  same.classes[1].amplitude = same.classes[0].amplitude;
  same.classes[1].frequency = same.classes[0].frequency;
  same.classes[1].openness = same.classes[0].openness;
  EXPECT_THROW(generate_synthetic(same, 7), ConfigError);
  SynthConfig single = cfg;
  single.classes.resize(1);
  EXPECT_THROW(generate_synthetic(single, 7), ConfigError);
}

TEST(Synthetic, ZeroAmplitudeFreezesWrists) {
  auto cfg = default_synth_config(2, 3, 30, 1);
  cfg.classes[0].amplitude = 0.0;
  const Dataset d = generate_synthetic(cfg, 3);
  for (const auto& s : d.sequences()) {
    if (s.label != cfg.classes[0].name) continue;
    const AffectiveVector v = extract_affective(s);
    EXPECT_LT(v[affective_index::kSpeed + 0], 1e-9);
    EXPECT_LT(v[affective_index::kSpeed + 1], 1e-9);
  }
}

// Independent softmax-regression oracle on standardized affective features.
TEST(Synthetic, SixClassesAreLinearlySeparable) {
  const auto cfg = default_synth_config(6, 40, 60, 11);
  const Dataset d = generate_synthetic(cfg, 12);
  const int n = static_cast<int>(d.size()), k = 6;
  Eigen::MatrixXd x(n, kAffectiveDim + 1);
  Eigen::VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    x.row(i).head(kAffectiveDim) = extract_affective(d[i]).transpose();
    y[i] = d.class_index(*d[i].label);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::RowVectorXd sd = ((x.rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (int j = 0; j < kAffectiveDim; ++j) {
    x.col(j) = (x.col(j).array() - mean[j]) / std::max(sd[j], 1e-12);
  }
  x.col(kAffectiveDim).setOnes();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(kAffectiveDim + 1, k);
  for (int it = 0; it < 500; ++it) {
    Eigen::MatrixXd logits = x * w;
    Eigen::MatrixXd p = (logits.colwise() - logits.rowwise().maxCoeff()).array().exp();
    p.array().colwise() /= p.rowwise().sum().array();
    for (int i = 0; i < n; ++i) p(i, y[i]) -= 1.0;
    w -= 0.5 * x.transpose() * p / n;
  }
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    Eigen::Index best;
    (x.row(i) * w).maxCoeff(&best);
    correct += best == y[i];
  }
  EXPECT_GT(double(correct) / n, 0.8);
}
