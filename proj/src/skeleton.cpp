#include "gzsl/skeleton.hpp"

#include "gzsl/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <sstream>

namespace gzsl {

void PoseSequence::validate() const {
  if (frames.size() < 2) {
    throw ContractError("sequence '" + id + "' has " + std::to_string(frames.size()) +
                        " frames; at least 2 are required");
  }
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
    throw ContractError("sequence '" + id + "' has non-positive frame rate");
  }
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (!frames[t].allFinite()) {
      throw ContractError("sequence '" + id + "' has a non-finite coordinate in frame " +
                          std::to_string(t));
    }
  }
}

SkeletonTopology::SkeletonTopology(int joint_count, std::vector<std::pair<int, int>> edges)
    : joint_count_(joint_count),
      edges_(std::move(edges)),
      adjacency_(Eigen::MatrixXd::Zero(joint_count, joint_count)) {
  if (joint_count < 1) throw ConfigError("topology needs at least one joint");
  for (const auto& [a, b] : edges_) {
    if (a < 0 || b < 0 || a >= joint_count || b >= joint_count || a == b) {
      throw ConfigError("invalid skeleton edge (" + std::to_string(a) + ", " + std::to_string(b) +
                        ")");
    }
    adjacency_(a, b) = 1.0;
    adjacency_(b, a) = 1.0;
  }
}

SkeletonTopology SkeletonTopology::upper_body() {
  const auto e = [](Joint a, Joint b) { return std::pair{joint_index(a), joint_index(b)}; };
  return SkeletonTopology(kJointCount, {
                                           e(Joint::kHead, Joint::kNeck),
                                           e(Joint::kNeck, Joint::kRightShoulder),
                                           e(Joint::kNeck, Joint::kLeftShoulder),
                                           e(Joint::kRightShoulder, Joint::kRightElbow),
                                           e(Joint::kRightElbow, Joint::kRightWrist),
                                           e(Joint::kLeftShoulder, Joint::kLeftElbow),
                                           e(Joint::kLeftElbow, Joint::kLeftWrist),
                                           e(Joint::kNeck, Joint::kBackbone),
                                           e(Joint::kBackbone, Joint::kPelvis),
                                       });
}

bool SkeletonTopology::connected() const {
  std::vector<bool> seen(static_cast<std::size_t>(joint_count_), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int j = frontier.front();
    frontier.pop();
    for (int k = 0; k < joint_count_; ++k) {
      if (adjacency_(j, k) != 0.0 && !seen[static_cast<std::size_t>(k)]) {
        seen[static_cast<std::size_t>(k)] = true;
        ++reached;
        frontier.push(k);
      }
    }
  }
  return reached == joint_count_;
}

Dataset::Dataset(std::vector<PoseSequence> sequences, std::vector<std::string> class_names)
    : sequences_(std::move(sequences)), class_names_(std::move(class_names)) {
  for (std::size_t i = 0; i < class_names_.size(); ++i) {
    for (std::size_t j = i + 1; j < class_names_.size(); ++j) {
      if (class_names_[i] == class_names_[j]) {
        throw SchemaError("duplicate class name '" + class_names_[i] + "'");
      }
    }
  }
  for (const auto& s : sequences_) {
    s.validate();
    if (s.label && std::find(class_names_.begin(), class_names_.end(), *s.label) ==
                       class_names_.end()) {
      throw SchemaError("sequence '" + s.id + "' has label '" + *s.label +
                        "' not listed in the class names");
    }
    if (s.frame_rate != sequences_.front().frame_rate) {
      throw SchemaError("sequence '" + s.id + "' has frame rate " + std::to_string(s.frame_rate) +
                        ", expected " + std::to_string(sequences_.front().frame_rate));
    }
  }
}

int Dataset::class_index(std::string_view label) const {
  const auto it = std::find(class_names_.begin(), class_names_.end(), label);
  if (it == class_names_.end()) throw LookupError("unknown class '" + std::string(label) + "'");
  return static_cast<int>(it - class_names_.begin());
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_double(std::string_view token, const std::string& where) {
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(where + ": malformed number '" + std::string(token) + "'");
  }
  return value;
}

bool blank(std::string_view line) { return split_ws(line).empty(); }

}  // namespace

Dataset read_motion(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  const auto where = [&] { return source + ":" + std::to_string(line_no); };

  // Column of each retained joint within a data row, by joint index.
  std::array<int, kJointCount> column{};
  column.fill(-1);
  std::size_t header_joints = 0;
  bool have_header = false;
  std::vector<std::string> class_names;
  bool explicit_classes = false;

  std::vector<PoseSequence> sequences;
  PoseSequence* current = nullptr;

  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) {
      current = nullptr;
      continue;
    }
    const auto tokens = split_ws(line);
    if (tokens[0] == "#joints") {
      if (have_header) throw ParseError(where() + ": repeated #joints header");
      have_header = true;
      header_joints = tokens.size() - 1;
      for (std::size_t c = 1; c < tokens.size(); ++c) {
        for (int j = 0; j < kJointCount; ++j) {
          if (tokens[c] == kJointNames[static_cast<std::size_t>(j)]) {
            if (column[static_cast<std::size_t>(j)] >= 0) {
              throw SchemaError(where() + ": joint '" + std::string(tokens[c]) + "' listed twice");
            }
            column[static_cast<std::size_t>(j)] = static_cast<int>(c - 1);
          }
        }
      }
      std::string missing;
      for (int j = 0; j < kJointCount; ++j) {
        if (column[static_cast<std::size_t>(j)] < 0) {
          missing += (missing.empty() ? "" : ", ") + std::string(kJointNames[static_cast<std::size_t>(j)]);
        }
      }
      if (!missing.empty()) {
        throw SchemaError(where() + ": motion file lacks required joints: " + missing);
      }
      continue;
    }
    if (tokens[0] == "#classes") {
      explicit_classes = true;
      for (std::size_t c = 1; c < tokens.size(); ++c) class_names.emplace_back(tokens[c]);
      continue;
    }
    if (tokens[0] == "#seq") {
      if (!have_header) throw ParseError(where() + ": #seq before #joints header");
      if (tokens.size() < 4 || tokens.size() > 5) {
        throw ParseError(where() + ": expected '#seq <id> <label|-> <frame_rate> [actor]'");
      }
      PoseSequence seq;
      seq.id = std::string(tokens[1]);
      if (tokens[2] != "-") {
        seq.label = std::string(tokens[2]);
        if (!explicit_classes &&
            std::find(class_names.begin(), class_names.end(), *seq.label) == class_names.end()) {
          class_names.push_back(*seq.label);
        }
      }
      seq.frame_rate = parse_double(tokens[3], where());
      if (tokens.size() == 5) seq.actor_id = std::string(tokens[4]);
      sequences.push_back(std::move(seq));
      current = &sequences.back();
      continue;
    }
    if (tokens[0].front() == '#') throw ParseError(where() + ": unknown directive '" + std::string(tokens[0]) + "'");
    if (current == nullptr) throw ParseError(where() + ": data row outside a sequence block");
    if (tokens.size() != 3 * header_joints) {
      throw ParseError(where() + ": expected " + std::to_string(3 * header_joints) +
                       " values, found " + std::to_string(tokens.size()));
    }
    Frame f;
    for (int j = 0; j < kJointCount; ++j) {
      const auto c = static_cast<std::size_t>(column[static_cast<std::size_t>(j)]);
      for (int axis = 0; axis < 3; ++axis) {
        f(axis, j) = parse_double(tokens[3 * c + static_cast<std::size_t>(axis)], where());
      }
    }
    current->frames.push_back(f);
  }
  if (!have_header) throw SchemaError(source + ": missing #joints header");
  try {
    return Dataset(std::move(sequences), std::move(class_names));
  } catch (const ContractError& e) {
    throw SchemaError(source + ": " + e.what());
  }
}

Dataset load_motion_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open motion file " + path.string());
  return read_motion(in, path.string());
}

void write_motion(std::ostream& out, const Dataset& dataset) {
  out << "#joints";
  for (auto name : kJointNames) out << ' ' << name;
  out << '\n';
  if (!dataset.class_names().empty()) {
    out << "#classes";
    for (const auto& c : dataset.class_names()) out << ' ' << c;
    out << '\n';
  }
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (const auto& s : dataset.sequences()) {
    out << '\n' << "#seq " << s.id << ' ' << (s.label ? *s.label : "-") << ' ' << num(s.frame_rate);
    if (s.actor_id) out << ' ' << *s.actor_id;
    out << '\n';
    for (const auto& f : s.frames) {
      for (int j = 0; j < kJointCount; ++j) {
        for (int axis = 0; axis < 3; ++axis) {
          if (j || axis) out << ' ';
          out << num(f(axis, j));
        }
      }
      out << '\n';
    }
  }
}

void write_motion_file(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write motion file " + path.string());
  write_motion(out, dataset);
  if (!out) throw IoError("failed writing motion file " + path.string());
}

PoseSequence resample(const PoseSequence& seq, double target_rate) {
  if (!(target_rate > 0.0)) throw ConfigError("resample: target rate must be positive");
  const double ratio = seq.frame_rate / target_rate;
  const double step = std::round(ratio);
  if (step < 1.0 || std::abs(ratio - step) > 1e-9 * ratio) {
    throw ConfigError("resample: " + std::to_string(seq.frame_rate) + " fps is not an integer " +
                      "multiple of " + std::to_string(target_rate) + " fps");
  }
  PoseSequence out = seq;
  out.frames.clear();
  const auto stride = static_cast<std::size_t>(step);
  for (std::size_t t = 0; t < seq.frames.size(); t += stride) out.frames.push_back(seq.frames[t]);
  out.frame_rate = target_rate;
  return out;
}

PaddedSequence pad_or_crop(const PoseSequence& seq, Eigen::Index target_frames) {
  if (target_frames < 2) throw ConfigError("pad_or_crop: target length must be at least 2");
  PaddedSequence out{seq, Eigen::VectorXd::Ones(target_frames)};
  const Eigen::Index length = seq.length();
  if (length > target_frames) {
    const Eigen::Index start = (length - target_frames) / 2;
    out.sequence.frames.assign(seq.frames.begin() + start,
                               seq.frames.begin() + start + target_frames);
  } else if (length < target_frames) {
    out.sequence.frames.resize(static_cast<std::size_t>(target_frames), Frame::Zero());
    out.valid.tail(target_frames - length).setZero();
  }
  return out;
}

PoseSequence root_center(const PoseSequence& seq) {
  PoseSequence out = seq;
  for (auto& f : out.frames) {
    const Eigen::Vector3d root = f.col(joint_index(Joint::kPelvis));
    f.colwise() -= root;
  }
  return out;
}

}  // namespace gzsl
