#include "gzsl/affective.hpp"

#include "gzsl/errors.hpp"

namespace gzsl {

double bounding_volume(const PoseSequence& seq) {
  if (seq.frames.empty()) throw ContractError("bounding_volume: empty sequence");
  double total = 0.0;
  for (const auto& f : seq.frames) {
    const Eigen::Vector3d extent = f.rowwise().maxCoeff() - f.rowwise().minCoeff();
    total += extent.prod();
  }
  return total / double(seq.frames.size());
}

double derivative_magnitude(const PoseSequence& seq, Joint joint, int order) {
  if (order < 1 || order > 3) {
    throw ContractError("derivative_magnitude: order must be 1, 2 or 3, got " +
                        std::to_string(order));
  }
  const Eigen::Index length = seq.length();
  if (length < order + 1) {
    throw ContractError("derivative_magnitude: order " + std::to_string(order) + " needs at least " +
                        std::to_string(order + 1) + " frames, sequence '" + seq.id + "' has " +
                        std::to_string(length));
  }
  Eigen::Matrix3Xd track(3, length);
  for (Eigen::Index t = 0; t < length; ++t) track.col(t) = seq.joint(t, joint);
  for (int k = 0; k < order; ++k) {
    const Eigen::Index n = track.cols() - 1;
    track = (track.rightCols(n) - track.leftCols(n)).eval();
  }
  const double scale = std::pow(seq.frame_rate, order);
  return track.colwise().norm().mean() * scale;
}

AffectiveVector extract_affective(const PoseSequence& input, AffectiveDiagnostics* diagnostics) {
  input.validate();
  const PoseSequence seq = root_center(input);
  namespace ai = affective_index;

  AffectiveVector out = AffectiveVector::Zero();
  out[ai::kVolume] = bounding_volume(seq);

  int degenerate = 0;
  const Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  const auto angle = [&](const AngleResult<double>& r) {
    degenerate += r.degenerate ? 1 : 0;
    return r.radians;
  };
  for (Eigen::Index t = 0; t < seq.length(); ++t) {
    const auto p = [&](Joint j) { return seq.joint(t, j); };
    const Eigen::Vector3d neck = p(Joint::kNeck);
    const Eigen::Vector3d rsh = p(Joint::kRightShoulder);
    const Eigen::Vector3d lsh = p(Joint::kLeftShoulder);
    const Eigen::Vector3d back = p(Joint::kBackbone);
    const Eigen::Vector3d root = p(Joint::kPelvis);
    const Eigen::Vector3d rwr = p(Joint::kRightWrist);
    const Eigen::Vector3d lwr = p(Joint::kLeftWrist);

    out[ai::kAngles + 0] += angle(joint_angle(neck, rsh, lsh));
    out[ai::kAngles + 1] += angle(joint_angle(rsh, neck, lsh));
    out[ai::kAngles + 2] += angle(joint_angle(lsh, neck, rsh));
    out[ai::kAngles + 3] += angle(vector_angle<double>(up, neck - back));
    out[ai::kAngles + 4] += angle(joint_angle(neck, p(Joint::kHead), back));
    out[ai::kDistances + 0] += (rwr - root).norm();
    out[ai::kDistances + 1] += (lwr - root).norm();
    out[ai::kArea] += triangle_area(neck, rwr, lwr);
  }
  out.segment(ai::kAngles, ai::kSpeed - ai::kAngles) /= double(seq.length());

  const std::array<Joint, 3> moving = {Joint::kLeftWrist, Joint::kRightWrist, Joint::kHead};
  for (int order = 1; order <= 3; ++order) {
    const int base = ai::kSpeed + 3 * (order - 1);
    for (int k = 0; k < 3; ++k) {
      out[base + k] = derivative_magnitude(seq, moving[static_cast<std::size_t>(k)], order);
    }
  }
  if (diagnostics) diagnostics->degenerate_angles = degenerate;
  return out;
}

}  // namespace gzsl
