#include "gzsl/commands.hpp"

#include "gzsl/errors.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace gzsl {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError(where + ": bad number '" + text + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

void require_file(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw IoError("missing prerequisite " + path.string() + " (produced by " + producer + ")");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

fs::path motion_path(const RunConfig& config, const fs::path& run_dir) {
  if (!config.motion_file.empty()) {
    require_file(config.motion_file, "the user");
    return config.motion_file;
  }
  const fs::path p = run_dir / "synthetic.motion";
  require_file(p, "synth, or set motion_file");
  return p;
}

fs::path embedding_path(const RunConfig& config, const fs::path& run_dir) {
  if (!config.embedding_file.empty()) {
    require_file(config.embedding_file, "the user");
    return config.embedding_file;
  }
  const fs::path p = run_dir / "synthetic.emb";
  require_file(p, "synth, or set embedding_file");
  return p;
}

std::string split_tag(std::size_t i) { return "split" + std::to_string(i); }

struct StoredSplit {
  SplitSpec spec;
  Partition part;
};

struct SplitManifest {
  std::vector<std::string> classes;
  std::vector<StoredSplit> splits;
};

std::vector<std::string> ids_of(const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<std::string> ids;
  for (std::size_t i : idx) ids.push_back(ds[i].id);
  return ids;
}

void write_split_manifest(const fs::path& run_dir, const Dataset& dataset,
                          const std::vector<StoredSplit>& splits, const RunConfig& config) {
  nlohmann::json j;
  j["config_hash"] = config.hash();
  j["seed"] = config.experiment.seed;
  j["classes"] = dataset.class_names();
  j["splits"] = nlohmann::json::array();
  for (const auto& s : splits) {
    nlohmann::json e = s.spec.to_json();
    e["train_ids"] = ids_of(dataset, s.part.train);
    e["test_ids"] = ids_of(dataset, s.part.test);
    j["splits"].push_back(e);
  }
  write_text(run_dir / "splits.json", j.dump(2) + "\n");
}

SplitManifest read_split_manifest(const fs::path& run_dir) {
  const fs::path path = run_dir / "splits.json";
  require_file(path, "train-fs");
  std::ifstream in(path);
  SplitManifest m;
  try {
    const auto j = nlohmann::json::parse(in);
    m.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& e : j.at("splits")) {
      StoredSplit s;
      s.spec = SplitSpec::from_json(e);
      m.splits.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return m;
}

// Recomputes each split's partition and checks it against the stored ids.
void attach_partitions(SplitManifest& m, const Dataset& dataset, const fs::path& run_dir) {
  std::ifstream in(run_dir / "splits.json");
  const auto j = nlohmann::json::parse(in);
  for (std::size_t i = 0; i < m.splits.size(); ++i) {
    m.splits[i].part = partition(dataset, m.splits[i].spec);
    const auto& e = j["splits"][i];
    if (ids_of(dataset, m.splits[i].part.train) != e.at("train_ids").get<std::vector<std::string>>() ||
        ids_of(dataset, m.splits[i].part.test) != e.at("test_ids").get<std::vector<std::string>>()) {
      throw ContractError("motion data does not reproduce the partition stored in " +
                          (run_dir / "splits.json").string());
    }
  }
}

void write_feature_csv(const fs::path& path, const FeatureSets& sets) {
  std::ostringstream out;
  Index dim = 0;
  if (!sets.seen_train.empty()) dim = sets.seen_train.front().values.size();
  out << "id,label,role,dummy";
  for (Index k = 0; k < dim; ++k) out << ",f" << k;
  out << '\n';
  auto rows = [&](const std::vector<GestureFeature>& items, const char* role) {
    for (const auto& f : items) {
      out << f.id << ',' << f.label << ',' << role << ',' << (f.dummy ? 1 : 0);
      for (Index k = 0; k < f.values.size(); ++k) out << ',' << format_double(f.values[k]);
      out << '\n';
    }
  };
  rows(sets.seen_train, "train");
  rows(sets.unseen_train, "train");
  rows(sets.test, "test");
  write_text(path, out.str());
}

FeatureSets read_feature_csv(const fs::path& path) {
  require_file(path, "extract");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  const auto header = split_csv(line);
  if (header.size() < 5 || header[0] != "id" || header[2] != "role") {
    throw SchemaError(path.string() + ": unexpected feature header");
  }
  const std::size_t dim = header.size() - 4;
  FeatureSets sets;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (cells.size() != header.size()) throw ParseError(where + ": wrong number of columns");
    GestureFeature f;
    f.id = cells[0];
    f.label = cells[1];
    f.dummy = cells[3] == "1";
    f.values.resize(Index(dim));
    for (std::size_t k = 0; k < dim; ++k) f.values[Index(k)] = parse_double(cells[4 + k], where);
    if (cells[2] == "test") {
      sets.test.push_back(std::move(f));
    } else if (cells[2] == "train") {
      (f.dummy ? sets.unseen_train : sets.seen_train).push_back(std::move(f));
    } else {
      throw ParseError(where + ": unknown role '" + cells[2] + "'");
    }
  }
  return sets;
}

template <typename Fn>
void for_each_split(std::size_t n, int jobs, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, int(std::max<std::size_t>(n, 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string utc_stamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

}  // namespace

fs::path output_root(const RunConfig& config, const std::optional<fs::path>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("GZSL_GESTURE_OUT"); env && *env) return env;
  if (!config.output_dir.empty()) return config.output_dir;
  return "runs";
}

fs::path create_run_dir(const RunConfig& config, const fs::path& root, const std::string& command) {
  fs::create_directories(root);
  const std::string stamp = utc_stamp();
  fs::path dir = root / (stamp + "-" + config.hash());
  for (int n = 2; fs::exists(dir); ++n) {
    dir = root / (stamp + "." + std::to_string(n) + "-" + config.hash());
  }
  fs::create_directories(dir);
  write_text(dir / "config.txt", config.serialize());
  const nlohmann::json run = {{"created", stamp},
                              {"command", command},
                              {"config_hash", config.hash()},
                              {"seed", config.experiment.seed}};
  write_text(dir / "run.json", run.dump(2) + "\n");
  return dir;
}

std::optional<fs::path> find_run_dir(const RunConfig& config, const fs::path& root) {
  if (!fs::is_directory(root)) return std::nullopt;
  const std::string suffix = "-" + config.hash();
  std::optional<fs::path> best;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() <= suffix.size() || !name.ends_with(suffix)) continue;
    if (!best || name > best->filename().string()) best = entry.path();
  }
  return best;
}

fs::path cmd_synth(const RunConfig& config, const fs::path& run_dir) {
  const SynthConfig sc = synth_config(config);
  const Dataset ds = generate_synthetic(sc, config.experiment.seed);
  const fs::path motion = run_dir / "synthetic.motion";
  write_motion_file(motion, ds);
  write_embeddings_file(run_dir / "synthetic.emb",
                        synthetic_lexicon(sc, config.synth.embedding_dim, config.experiment.seed));
  return motion;
}

fs::path cmd_features(const RunConfig& config, const fs::path& run_dir) {
  const Dataset ds = load_motion_file(motion_path(config, run_dir));
  std::ostringstream out;
  out << "id";
  for (const auto name : kAffectiveNames) out << ',' << name;
  out << '\n';
  for (const auto& seq : ds.sequences()) {
    const AffectiveVector a = extract_affective(seq);
    out << seq.id;
    for (int k = 0; k < kAffectiveDim; ++k) out << ',' << format_double(a[k]);
    out << '\n';
  }
  const fs::path path = run_dir / "affective.csv";
  write_text(path, out.str());
  return path;
}

void cmd_train_fs(const RunConfig& config, const fs::path& run_dir, int jobs) {
  const Dataset ds = load_motion_file(motion_path(config, run_dir));
  const auto& ec = config.experiment;
  const auto specs =
      make_splits(ds.class_names(), ec.n_splits, ec.seed, ec.sizes, ec.train_fraction);
  std::vector<StoredSplit> splits;
  for (const auto& s : specs) splits.push_back({s, partition(ds, s)});
  write_split_manifest(run_dir, ds, splits, config);
  for_each_split(splits.size(), jobs, [&](std::size_t i) {
    FsGerStage stage = train_split_fs_ger(ds, splits[i].spec, splits[i].part, ec);
    save_checkpoint(run_dir / (split_tag(i) + "_fsger.ckpt"), stage.model.to_checkpoint(stage.seed));
    stage.log.write_csv(run_dir / (split_tag(i) + "_fsger_log.csv"));
  });
}

void cmd_extract(const RunConfig& config, const fs::path& run_dir) {
  SplitManifest m = read_split_manifest(run_dir);
  for (std::size_t i = 0; i < m.splits.size(); ++i) {
    require_file(run_dir / (split_tag(i) + "_fsger.ckpt"), "train-fs");
  }
  const Dataset ds = load_motion_file(motion_path(config, run_dir));
  attach_partitions(m, ds, run_dir);
  for (std::size_t i = 0; i < m.splits.size(); ++i) {
    FsGerModel model =
        FsGerModel::from_checkpoint(load_checkpoint(run_dir / (split_tag(i) + "_fsger.ckpt")));
    const FeatureSets sets = extract_split_features(model, ds, m.splits[i].spec, m.splits[i].part,
                                                    config.experiment.frames);
    write_feature_csv(run_dir / (split_tag(i) + "_features.csv"), sets);
  }
}

void cmd_train_zsl(const RunConfig& config, const fs::path& run_dir, int jobs) {
  const SplitManifest m = read_split_manifest(run_dir);
  std::vector<FeatureSets> features;
  for (std::size_t i = 0; i < m.splits.size(); ++i) {
    features.push_back(read_feature_csv(run_dir / (split_tag(i) + "_features.csv")));
  }
  const EmotionLexicon lexicon = load_embeddings(embedding_path(config, run_dir), m.classes);
  for_each_split(m.splits.size(), jobs, [&](std::size_t i) {
    const auto& spec = m.splits[i].spec;
    const ScAaeStage stage =
        train_split_sc_aae(features[i], split_lexicon(lexicon, spec), spec, config.experiment);
    save_checkpoint(run_dir / (split_tag(i) + "_scaae.ckpt"), stage.model.to_checkpoint(stage.seed));
    stage.log.write_csv(run_dir / (split_tag(i) + "_scaae_log.csv"));
  });
}

GzslReport cmd_eval(const RunConfig& config, const fs::path& run_dir) {
  SplitManifest m = read_split_manifest(run_dir);
  for (std::size_t i = 0; i < m.splits.size(); ++i) {
    require_file(run_dir / (split_tag(i) + "_fsger.ckpt"), "train-fs");
    require_file(run_dir / (split_tag(i) + "_scaae.ckpt"), "train-zsl");
  }
  const Dataset ds = load_motion_file(motion_path(config, run_dir));
  const EmotionLexicon lexicon = load_embeddings(embedding_path(config, run_dir), m.classes);
  attach_partitions(m, ds, run_dir);
  GzslReport report;
  for (std::size_t i = 0; i < m.splits.size(); ++i) {
    const auto& spec = m.splits[i].spec;
    FsGerModel fs_model =
        FsGerModel::from_checkpoint(load_checkpoint(run_dir / (split_tag(i) + "_fsger.ckpt")));
    const ScAaeModel aae =
        ScAaeModel::from_checkpoint(load_checkpoint(run_dir / (split_tag(i) + "_scaae.ckpt")));
    const auto test = extract_features(
        fs_model, prepare_inputs(ds, m.splits[i].part.test, config.experiment.frames));
    const FeatureSets sets = split_features(ds, {{}, m.splits[i].part.test}, spec, {}, test);
    SplitResult r = evaluate(aae, sets.test, split_lexicon(lexicon, spec));
    r.split = spec;
    report.splits.push_back(std::move(r));
  }
  report.aggregate();
  report.config_hash = config.hash();
  write_report(run_dir, report, config.experiment);
  return report;
}

std::string cmd_report(const fs::path& report_json) {
  require_file(report_json, "eval or run");
  std::ifstream in(report_json);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(report_json.string() + ": " + e.what());
  }
  check_report_manifest(j);
  std::ostringstream out;
  char buf[160];
  out << "config " << j["config_hash"].get<std::string>() << '\n';
  out << "split  seen    unseen  H\n";
  for (std::size_t i = 0; i < j["splits"].size(); ++i) {
    const auto& s = j["splits"][i];
    std::snprintf(buf, sizeof buf, "%-6zu %.4f  %.4f  %.4f\n", i, s["seen_accuracy"].get<double>(),
                  s["unseen_accuracy"].get<double>(), s["harmonic_mean"].get<double>());
    out << buf;
  }
  const auto& a = j["aggregate"];
  std::snprintf(buf, sizeof buf, "mean   %.4f  %.4f  %.4f\n", a["seen_accuracy"].get<double>(),
                a["unseen_accuracy"].get<double>(), a["harmonic_mean"].get<double>());
  out << buf;
  return out.str();
}

GzslReport cmd_run(const RunConfig& config, const fs::path& run_dir, int jobs) {
  if (config.motion_file.empty() && !fs::exists(run_dir / "synthetic.motion")) {
    cmd_synth(config, run_dir);
  }
  const Dataset ds = load_motion_file(motion_path(config, run_dir));
  const EmotionLexicon lexicon = load_embeddings(embedding_path(config, run_dir), ds.class_names());
  return run_experiment(ds, lexicon, config.experiment, jobs, run_dir, config.hash());
}

namespace {

struct CliOptions {
  std::optional<std::string> config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> run;
  std::optional<std::string> report;
  int jobs = 1;
  std::vector<std::string> sets;
  std::map<std::string, std::string> overrides;
};

struct Override {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr Override kOverrides[] = {
    {"--motion", "motion_file", "motion file to read"},
    {"--embeddings", "embedding_file", "word-embedding file to read"},
    {"--classes", "synth.classes", "synthetic class count"},
    {"--per-class", "synth.per_class", "synthetic sequences per class"},
    {"--synth-frames", "synth.frames", "synthetic sequence length"},
    {"--embedding-dim", "synth.embedding_dim", "synthetic lexicon dimension"},
    {"--frames", "frames", "network input length in frames"},
    {"--channels", "fs.channels", "FS-GER block widths, e.g. 64,128,256"},
    {"--fs-epochs", "fs.max_epochs", "FS-GER epoch cap"},
    {"--fs-batch-size", "fs.batch_size", "FS-GER batch size"},
    {"--fs-lr", "fs.learning_rate", "FS-GER Adam learning rate"},
    {"--gamma", "aae.gamma", "language-adversarial weight"},
    {"--delta", "aae.delta", "feature-adversarial weight"},
    {"--epochs", "aae.epochs", "SC-AAE epochs"},
    {"--batch-size", "aae.batch_size", "SC-AAE batch size"},
    {"--latent-dim", "aae.latent_dim", "SC-AAE latent dimension"},
    {"--supervised-weight", "aae.supervised_weight", "weight of the semantic anchor term"},
    {"--splits", "split.count", "number of seen/unseen splits"},
    {"--seen", "split.seen", "seen classes per split"},
    {"--unseen", "split.unseen", "unseen classes per split"},
};

void add_common(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--config", o.config_file, "key = value config file");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--out", o.out, "output root (default $GZSL_GESTURE_OUT, else ./runs)");
  cmd->add_option("--run", o.run, "use this run directory instead of locating one by config hash");
  cmd->add_option("--jobs", o.jobs, "splits processed in parallel")->check(CLI::PositiveNumber);
  cmd->add_option("--set", o.sets, "extra key=value config entry (repeatable)");
  for (const auto& ov : kOverrides) {
    cmd->add_option_function<std::string>(
        ov.flag, [&o, key = std::string(ov.key)](const std::string& v) { o.overrides[key] = v; },
        ov.help);
  }
}

RunConfig build_config(const CliOptions& o) {
  RunConfig config;
  if (o.run && fs::exists(fs::path(*o.run) / "config.txt")) {
    config = load_run_config(fs::path(*o.run) / "config.txt");
  }
  if (o.config_file) {
    std::ifstream in(*o.config_file);
    if (!in) throw IoError("cannot open config " + *o.config_file);
    merge_run_config(config, in, *o.config_file);
  }
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    config.set(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [key, value] : o.overrides) config.set(key, value);
  if (o.seed) config.experiment.seed = *o.seed;
  return config;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized zero-shot emotion recognition from body gestures"};
  app.require_subcommand(1);
  CliOptions o;
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"synth", "generate a synthetic motion file and lexicon"},
      {"features", "write the affective features of every sequence as CSV"},
      {"train-fs", "train one FS-GER per split"},
      {"extract", "extract gesture features with the trained FS-GER models"},
      {"train-zsl", "train one SC-AAE per split"},
      {"eval", "evaluate the trained models and write the report"},
      {"report", "validate and summarize a report"},
      {"run", "every stage in one go"},
  };
  std::map<std::string, CLI::App*> cmds;
  for (const auto& s : subs) {
    cmds[s.name] = app.add_subcommand(s.name, s.help);
    add_common(cmds[s.name], o);
  }
  cmds["report"]->add_option("--report", o.report, "report.json to read");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const RunConfig config = build_config(o);
    const std::string name = app.get_subcommands().front()->get_name();
    const fs::path root = output_root(config, o.out ? std::optional<fs::path>(*o.out) : std::nullopt);

    if (o.run) {
      const fs::path dir = *o.run;
      if (fs::exists(dir / "config.txt")) {
        const RunConfig stored = load_run_config(dir / "config.txt");
        if (stored.hash() != config.hash()) {
          throw ConfigError("run directory " + dir.string() + " was created with config " +
                            stored.hash() + ", current config is " + config.hash());
        }
      }
    }
    enum class Dir { kCreate, kReuseOrCreate, kReuse };
    auto locate = [&](Dir mode) -> fs::path {
      if (o.run) {
        const fs::path dir = *o.run;
        if (!fs::exists(dir / "config.txt")) {
          if (mode == Dir::kReuse) require_file(dir / "config.txt", "an earlier stage");
          fs::create_directories(dir);
          write_text(dir / "config.txt", config.serialize());
        }
        return dir;
      }
      if (mode != Dir::kCreate) {
        if (auto found = find_run_dir(config, root)) return *found;
        if (mode == Dir::kReuse) {
          throw IoError("missing prerequisite: no run directory for config " + config.hash() +
                        " under " + root.string() + " (run train-fs first)");
        }
      }
      return create_run_dir(config, root, name);
    };

    if (name == "synth") {
      out << cmd_synth(config, locate(Dir::kCreate)).string() << '\n';
    } else if (name == "features") {
      out << cmd_features(config, locate(Dir::kReuseOrCreate)).string() << '\n';
    } else if (name == "train-fs") {
      const fs::path dir = locate(Dir::kReuseOrCreate);
      cmd_train_fs(config, dir, o.jobs);
      out << dir.string() << '\n';
    } else if (name == "extract") {
      const fs::path dir = locate(Dir::kReuse);
      cmd_extract(config, dir);
      out << dir.string() << '\n';
    } else if (name == "train-zsl") {
      const fs::path dir = locate(Dir::kReuse);
      cmd_train_zsl(config, dir, o.jobs);
      out << dir.string() << '\n';
    } else if (name == "eval") {
      const fs::path dir = locate(Dir::kReuse);
      const GzslReport r = cmd_eval(config, dir);
      out << (dir / "report.json").string() << '\n';
      out << "harmonic mean " << format_double(r.mean_harmonic) << '\n';
    } else if (name == "report") {
      out << cmd_report(o.report ? fs::path(*o.report) : locate(Dir::kReuse) / "report.json");
    } else if (name == "run") {
      const fs::path dir = locate(Dir::kCreate);
      cmd_run(config, dir, o.jobs);
      out << dir.string() << '\n' << cmd_report(dir / "report.json");
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gzsl
