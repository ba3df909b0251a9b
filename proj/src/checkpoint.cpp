#include "gzsl/checkpoint.hpp"

#include "gzsl/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace gzsl {

namespace {

constexpr const char* kMagic = "GZSLCKPT 1";

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written in native order, which must be little-endian");

}  // namespace

const NamedArray& Checkpoint::get(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw LookupError("checkpoint has no array '" + name + "'");
}

void Checkpoint::restore(const std::string& name, Tensor& target) const {
  const auto& a = get(name);
  if (a.shape != target.shape()) {
    throw ShapeError("checkpoint array '" + name + "' has shape " + shape_string(a.shape) +
                     ", model expects " + shape_string(target.shape()));
  }
  target.mutable_values() = a.values;
}

void Checkpoint::restore(const std::string& name, Eigen::VectorXd& target) const {
  const auto& a = get(name);
  if (a.shape != Shape{target.size()}) {
    throw ShapeError("checkpoint array '" + name + "' has shape " + shape_string(a.shape) +
                     ", model expects [" + std::to_string(target.size()) + "]");
  }
  target = a.values;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  nlohmann::json header;
  header["kind"] = checkpoint.kind;
  header["config"] = checkpoint.config;
  header["seed"] = checkpoint.seed;
  std::size_t total = 0;
  nlohmann::json arrays = nlohmann::json::array();
  for (const auto& a : checkpoint.arrays) {
    if (shape_numel(a.shape) != a.values.size()) {
      throw ShapeError("checkpoint array '" + a.name + "' does not match its shape");
    }
    arrays.push_back({{"name", a.name}, {"shape", a.shape}});
    total += std::size_t(a.values.size());
  }
  header["arrays"] = arrays;
  header["payload_values"] = total;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << kMagic << '\n' << header.dump() << '\n';
  for (const auto& a : checkpoint.arrays) {
    out.write(reinterpret_cast<const char*>(a.values.data()),
              std::streamsize(a.values.size() * sizeof(double)));
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != kMagic) throw ParseError(path.string() + ": not a checkpoint file");
  std::getline(in, header_line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad checkpoint header: " + e.what());
  }
  Checkpoint ck;
  try {
    ck.kind = header.at("kind").get<std::string>();
    ck.config = header.at("config");
    ck.seed = header.at("seed").get<std::uint64_t>();
    for (const auto& a : header.at("arrays")) {
      NamedArray arr;
      arr.name = a.at("name").get<std::string>();
      arr.shape = a.at("shape").get<Shape>();
      arr.values.resize(shape_numel(arr.shape));
      ck.arrays.push_back(std::move(arr));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": incomplete checkpoint header: " + e.what());
  }
  for (auto& a : ck.arrays) {
    in.read(reinterpret_cast<char*>(a.values.data()),
            std::streamsize(a.values.size() * sizeof(double)));
    if (!in) throw ParseError(path.string() + ": truncated payload in array '" + a.name + "'");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError(path.string() + ": trailing bytes after checkpoint payload");
  }
  return ck;
}

}  // namespace gzsl
