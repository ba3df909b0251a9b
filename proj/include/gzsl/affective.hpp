#pragma once

#include "gzsl/skeleton.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

namespace gzsl {

inline constexpr int kAffectiveDim = 18;

// Posture and motion descriptor of a gesture, in the order of kAffectiveNames.
using AffectiveVector = Eigen::Matrix<double, kAffectiveDim, 1>;

inline constexpr std::array<std::string_view, kAffectiveDim> kAffectiveNames = {
    "volume",
    "angle_shoulders_at_neck",
    "angle_neck_lshoulder_at_rshoulder",
    "angle_neck_rshoulder_at_lshoulder",
    "angle_vertical_back_at_neck",
    "angle_head_back_at_neck",
    "dist_rwrist_root",
    "dist_lwrist_root",
    "area_neck_wrists",
    "speed_lwrist",
    "speed_rwrist",
    "speed_head",
    "accel_lwrist",
    "accel_rwrist",
    "accel_head",
    "jerk_lwrist",
    "jerk_rwrist",
    "jerk_head",
};

// Offsets of the feature groups inside an AffectiveVector.
namespace affective_index {
inline constexpr int kVolume = 0;
inline constexpr int kAngles = 1;
inline constexpr int kDistances = 6;
inline constexpr int kArea = 8;
inline constexpr int kSpeed = 9;
inline constexpr int kAcceleration = 12;
inline constexpr int kJerk = 15;
}  // namespace affective_index

template <typename Scalar>
struct AngleResult {
  Scalar radians = Scalar(0);
  // Set when one of the rays has zero length; radians is then 0.
  bool degenerate = false;
};

/// Angle between two direction vectors, via the clamped arccos of their
/// normalized dot product.
template <typename Scalar>
AngleResult<Scalar> vector_angle(const Eigen::Matrix<Scalar, 3, 1>& u,
                                 const Eigen::Matrix<Scalar, 3, 1>& v) {
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) return {Scalar(0), true};
  const Scalar c = std::clamp(u.dot(v) / (nu * nv), Scalar(-1), Scalar(1));
  return {std::acos(c), false};
}

// Angle at apex between the rays apex->a and apex->b.
template <typename Scalar>
AngleResult<Scalar> joint_angle(const Eigen::Matrix<Scalar, 3, 1>& apex,
                                const Eigen::Matrix<Scalar, 3, 1>& a,
                                const Eigen::Matrix<Scalar, 3, 1>& b) {
  return vector_angle<Scalar>(a - apex, b - apex);
}

template <typename Scalar>
Scalar triangle_area(const Eigen::Matrix<Scalar, 3, 1>& p1, const Eigen::Matrix<Scalar, 3, 1>& p2,
                     const Eigen::Matrix<Scalar, 3, 1>& p3) {
  return Scalar(0.5) * (p2 - p1).cross(p3 - p1).norm();
}

// Mean over frames of the axis-aligned bounding-box volume of all joints.
double bounding_volume(const PoseSequence& seq);

/// Mean over the T - order available frames of the Euclidean norm of the
/// order-th forward difference of a joint's trajectory, scaled by
/// frame_rate^order (speed, acceleration and jerk for orders 1, 2, 3).
double derivative_magnitude(const PoseSequence& seq, Joint joint, int order);

struct AffectiveDiagnostics {
  // Frame-level angle evaluations that hit a zero-length ray.
  int degenerate_angles = 0;
};

/// The 18 affective features of a sequence. The sequence is root-centered
/// first, so the result does not depend on global translation. Per-frame
/// posture features are averaged over frames.
AffectiveVector extract_affective(const PoseSequence& seq,
                                  AffectiveDiagnostics* diagnostics = nullptr);

}  // namespace gzsl
