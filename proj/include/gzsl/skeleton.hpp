#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gzsl {

// The ten upper-body joints, in storage order.
enum class Joint : int {
  kHead = 0,
  kNeck,
  kRightShoulder,
  kLeftShoulder,
  kRightElbow,
  kLeftElbow,
  kRightWrist,
  kLeftWrist,
  kBackbone,
  kPelvis,
};

inline constexpr int kJointCount = 10;

inline constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "head",   "neck",   "rshoulder", "lshoulder", "relbow",
    "lelbow", "rwrist", "lwrist",    "backbone",  "pelvis"};

constexpr int joint_index(Joint j) { return static_cast<int>(j); }

// Joint positions of one frame, one column per joint (meters, y up).
using Frame = Eigen::Matrix<double, 3, kJointCount>;
using Frames = std::vector<Frame>;

struct PoseSequence {
  std::string id;
  Frames frames;
  double frame_rate = 30.0;
  std::optional<std::string> label;
  std::optional<std::string> actor_id;

  Eigen::Index length() const { return static_cast<Eigen::Index>(frames.size()); }
  Eigen::Vector3d joint(Eigen::Index t, Joint j) const {
    return frames[static_cast<std::size_t>(t)].col(joint_index(j));
  }

  // Throws ContractError unless T >= 2, the frame rate is positive and every
  // coordinate is finite.
  void validate() const;

  friend bool operator==(const PoseSequence&, const PoseSequence&) = default;
};

/// Bone graph over the joints. The adjacency is binary, symmetric and has a
/// zero diagonal; self-loops are added only when normalizing.
class SkeletonTopology {
 public:
  SkeletonTopology(int joint_count, std::vector<std::pair<int, int>> edges);

  // head-neck, neck-shoulders, shoulder-elbow-wrist chains, neck-backbone-pelvis.
  static SkeletonTopology upper_body();

  int joint_count() const { return joint_count_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const Eigen::MatrixXd& adjacency() const { return adjacency_; }
  bool connected() const;

 private:
  int joint_count_;
  std::vector<std::pair<int, int>> edges_;
  Eigen::MatrixXd adjacency_;
};

/// Labelled sequences sharing one frame rate. Construction validates every
/// sequence and that every label is one of class_names.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<PoseSequence> sequences, std::vector<std::string> class_names);

  const std::vector<PoseSequence>& sequences() const { return sequences_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  std::size_t size() const { return sequences_.size(); }
  bool empty() const { return sequences_.empty(); }
  const PoseSequence& operator[](std::size_t i) const { return sequences_[i]; }

  // Position of a label in class_names; throws LookupError if absent.
  int class_index(std::string_view label) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<PoseSequence> sequences_;
  std::vector<std::string> class_names_;
};

// Motion text format:
//   #joints <name> ...            (must include the ten joint names)
//   #classes <word> ...           (optional; otherwise labels in order of appearance)
//   #seq <id> <label|-> <frame_rate> [actor]
//   <x y z per header joint>      (one line per frame)
// Sequences are separated by blank lines. Unknown joints are dropped.
Dataset read_motion(std::istream& in, const std::string& source = "<stream>");
Dataset load_motion_file(const std::filesystem::path& path);
void write_motion(std::ostream& out, const Dataset& dataset);
void write_motion_file(const std::filesystem::path& path, const Dataset& dataset);

// Uniform decimation; frame_rate must be an integer multiple of target_rate.
PoseSequence resample(const PoseSequence& seq, double target_rate);

struct PaddedSequence {
  PoseSequence sequence;
  // 1 for real frames, 0 for padding.
  Eigen::VectorXd valid;
};

// Center-crops longer sequences, zero-pads shorter ones at the tail.
PaddedSequence pad_or_crop(const PoseSequence& seq, Eigen::Index target_frames);

// Translates every frame so the pelvis sits at the origin.
PoseSequence root_center(const PoseSequence& seq);

}  // namespace gzsl
