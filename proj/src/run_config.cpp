#include "gzsl/run_config.hpp"

#include "gzsl/errors.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace gzsl {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("invalid value '" + text + "' for " + key);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("invalid value '" + text + "' for " + key + " (expected true or false)");
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <std::size_t N>
std::array<Index, N> parse_list(const std::string& key, const std::string& text) {
  std::array<Index, N> out{};
  std::stringstream ss(text);
  std::string item;
  std::size_t n = 0;
  while (std::getline(ss, item, ',')) {
    if (n == N) throw ConfigError(key + " takes " + std::to_string(N) + " values");
    out[n++] = parse_number<Index>(key, trim(item));
  }
  if (n != N) throw ConfigError(key + " takes " + std::to_string(N) + " values");
  return out;
}

template <std::size_t N>
std::string format_list(const std::array<Index, N>& a) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) s += (i ? "," : "") + std::to_string(a[i]);
  return s;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T, typename Access>
Field number(std::string key, Access access) {
  return {key,
          [access](const RunConfig& c) {
            const T v = access(const_cast<RunConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(v);
            } else {
              return std::to_string(v);
            }
          },
          [access, key](RunConfig& c, const std::string& text) {
            access(c) = parse_number<T>(key, text);
          }};
}

template <typename Access>
Field text(std::string key, Access access) {
  return {key, [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)); },
          [access](RunConfig& c, const std::string& v) { access(c) = v; }};
}

template <std::size_t N, typename Access>
Field list(std::string key, Access access) {
  return {key, [access](const RunConfig& c) { return format_list(access(const_cast<RunConfig&>(c))); },
          [access, key](RunConfig& c, const std::string& v) { access(c) = parse_list<N>(key, v); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(text("motion_file", [](RunConfig& c) -> std::string& { return c.motion_file; }));
    f.push_back(
        text("embedding_file", [](RunConfig& c) -> std::string& { return c.embedding_file; }));
    f.push_back(text("output_dir", [](RunConfig& c) -> std::string& { return c.output_dir; }));
    f.push_back(number<std::uint64_t>(
        "seed", [](RunConfig& c) -> std::uint64_t& { return c.experiment.seed; }));
    f.push_back(number<Index>("frames", [](RunConfig& c) -> Index& { return c.experiment.frames; }));

    f.push_back(list<3>("fs.channels", [](RunConfig& c) -> std::array<Index, 3>& {
      return c.experiment.fs_ger.channels;
    }));
    f.push_back(list<3>("fs.strides", [](RunConfig& c) -> std::array<Index, 3>& {
      return c.experiment.fs_ger.strides;
    }));
    f.push_back(
        number<Index>("fs.kernel", [](RunConfig& c) -> Index& { return c.experiment.fs_ger.kernel; }));
    f.push_back(number<Index>("fs.projection",
                              [](RunConfig& c) -> Index& { return c.experiment.fs_ger.projection; }));
    f.push_back(
        number<Index>("fs.hidden", [](RunConfig& c) -> Index& { return c.experiment.fs_ger.hidden; }));
    f.push_back(number<Index>("fs.feature_dim",
                              [](RunConfig& c) -> Index& { return c.experiment.fs_ger.feature_dim; }));
    f.push_back(number<double>("fs.learning_rate", [](RunConfig& c) -> double& {
      return c.experiment.fs_train.adam.learning_rate;
    }));
    f.push_back(number<int>("fs.batch_size",
                            [](RunConfig& c) -> int& { return c.experiment.fs_train.batch_size; }));
    f.push_back(number<int>("fs.max_epochs",
                            [](RunConfig& c) -> int& { return c.experiment.fs_train.max_epochs; }));
    f.push_back({"fs.stop_at_perfect",
                 [](const RunConfig& c) {
                   return std::string(c.experiment.fs_train.stop_at_perfect ? "true" : "false");
                 },
                 [](RunConfig& c, const std::string& v) {
                   c.experiment.fs_train.stop_at_perfect = parse_bool("fs.stop_at_perfect", v);
                 }});

    f.push_back(
        number<double>("aae.gamma", [](RunConfig& c) -> double& { return c.experiment.aae.gamma; }));
    f.push_back(
        number<double>("aae.delta", [](RunConfig& c) -> double& { return c.experiment.aae.delta; }));
    f.push_back(number<int>("aae.epochs", [](RunConfig& c) -> int& { return c.experiment.aae.epochs; }));
    f.push_back(
        number<int>("aae.batch_size", [](RunConfig& c) -> int& { return c.experiment.aae.batch_size; }));
    f.push_back(number<Index>("aae.latent_dim",
                              [](RunConfig& c) -> Index& { return c.experiment.aae.latent_dim; }));
    f.push_back(number<Index>("aae.hidden",
                              [](RunConfig& c) -> Index& { return c.experiment.sc_aae.hidden; }));
    f.push_back(number<double>("aae.supervised_weight", [](RunConfig& c) -> double& {
      return c.experiment.aae.supervised_weight;
    }));
    f.push_back(number<double>("aae.autoencoder_lr", [](RunConfig& c) -> double& {
      return c.experiment.aae.autoencoder_lr;
    }));
    f.push_back(number<double>("aae.generator_lr", [](RunConfig& c) -> double& {
      return c.experiment.aae.generator_lr;
    }));
    f.push_back(number<double>("aae.discriminator_lr", [](RunConfig& c) -> double& {
      return c.experiment.aae.discriminator_lr;
    }));

    f.push_back(
        number<int>("split.count", [](RunConfig& c) -> int& { return c.experiment.n_splits; }));
    f.push_back(
        number<int>("split.seen", [](RunConfig& c) -> int& { return c.experiment.sizes.seen; }));
    f.push_back(
        number<int>("split.unseen", [](RunConfig& c) -> int& { return c.experiment.sizes.unseen; }));
    f.push_back(number<double>("split.train_fraction",
                               [](RunConfig& c) -> double& { return c.experiment.train_fraction; }));

    f.push_back(number<int>("synth.classes", [](RunConfig& c) -> int& { return c.synth.classes; }));
    f.push_back(
        number<int>("synth.per_class", [](RunConfig& c) -> int& { return c.synth.per_class; }));
    f.push_back(number<int>("synth.frames", [](RunConfig& c) -> int& { return c.synth.frames; }));
    f.push_back(
        number<double>("synth.frame_rate", [](RunConfig& c) -> double& { return c.synth.frame_rate; }));
    f.push_back(number<double>("synth.style_jitter",
                               [](RunConfig& c) -> double& { return c.synth.style_jitter; }));
    f.push_back(number<double>("synth.joint_noise",
                               [](RunConfig& c) -> double& { return c.synth.joint_noise; }));
    f.push_back(number<Index>("synth.embedding_dim",
                              [](RunConfig& c) -> Index& { return c.synth.embedding_dim; }));
    return f;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, value);
}

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return names;
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

std::string RunConfig::hash() const { return hash_text(serialize()); }

void merge_run_config(RunConfig& config, std::istream& in, const std::string& source) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      config.set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

RunConfig parse_run_config(std::istream& in, const std::string& source) {
  RunConfig c;
  merge_run_config(c, in, source);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_run_config(in, path.string());
}

SynthConfig synth_config(const RunConfig& config) {
  SynthConfig sc = default_synth_config(config.synth.classes, config.synth.per_class,
                                        config.synth.frames, config.experiment.seed);
  sc.frame_rate = config.synth.frame_rate;
  sc.style_jitter = config.synth.style_jitter;
  sc.joint_noise = config.synth.joint_noise;
  return sc;
}

}  // namespace gzsl
