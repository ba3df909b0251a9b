#include "gzsl/affective.hpp"
#include "gzsl/gzsl_eval.hpp"
#include "gzsl/lexicon.hpp"
#include "gzsl/skeleton.hpp"

#include <gtest/gtest.h>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace gzsl;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result cli(const std::string& args) {
  const char* exe = std::getenv("GZSL_GESTURE_CLI");
  if (!exe) throw std::runtime_error("GZSL_GESTURE_CLI is not set");
  const std::string cmd = std::string("env -u GZSL_GESTURE_OUT ") + exe + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  Result r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// The only run directory under root.
std::optional<fs::path> find_run_dir_for(const fs::path& root) {
  std::optional<fs::path> found;
  for (const auto& e : fs::directory_iterator(root)) {
    if (!e.is_directory()) continue;
    if (found) return std::nullopt;
    found = e.path();
  }
  return found;
}

// First output line of a command is the path it produced.
fs::path first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

class Scratch : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("gzsl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path write_config(const std::string& name, const std::string& text) const {
    const fs::path p = root_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path root_;
};

const char* kTinyConfig =
    "# small enough for a unit test\n"
    "seed = 5\n"
    "frames = 16\n"
    "fs.channels = 4,8,8\n"
    "fs.kernel = 3\n"
    "fs.projection = 8\n"
    "fs.hidden = 8\n"
    "fs.feature_dim = 6\n"
    "fs.max_epochs = 2\n"
    "aae.epochs = 3\n"
    "aae.latent_dim = 3\n"
    "aae.hidden = 8\n"
    "split.count = 2\n"
    "split.seen = 3\n"
    "split.unseen = 2\n"
    "synth.classes = 5\n"
    "synth.per_class = 6\n"
    "synth.frames = 16\n"
    "synth.embedding_dim = 6\n";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream s(line);
  std::string cell;
  while (std::getline(s, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST_F(Scratch, SynthCountsAndDeterminism) {
  const Result a = cli("synth --classes 11 --per-class 40 --synth-frames 20 --seed 3 --out " + (root_ / "a").string());
  ASSERT_EQ(a.code, 0) << a.output;
  const Result b = cli("synth --classes 11 --per-class 40 --synth-frames 20 --seed 3 --out " + (root_ / "b").string());
  ASSERT_EQ(b.code, 0) << b.output;
  const fs::path pa = first_line(a.output), pb = first_line(b.output);
  const Dataset d = load_motion_file(pa);
  EXPECT_EQ(d.size(), 440u);
  EXPECT_EQ(d.class_names().size(), 11u);
  EXPECT_EQ(slurp(pa), slurp(pb));
  EXPECT_EQ(slurp(pa.parent_path() / "synthetic.emb"), slurp(pb.parent_path() / "synthetic.emb"));
  // The run directory echoes its config and is named after the config hash.
  const std::string config = slurp(pa.parent_path() / "config.txt");
  EXPECT_NE(config.find("synth.classes = 11"), std::string::npos);
  EXPECT_TRUE(fs::exists(pa.parent_path() / "run.json"));
  const EmotionLexicon lex = load_embeddings(pa.parent_path() / "synthetic.emb", d.class_names());
  EXPECT_EQ(lex.dim(), 16);
}

TEST_F(Scratch, FeaturesMatchLibrary) {
  const Result s = cli("synth --classes 3 --per-class 4 --synth-frames 12 --out " + root_.string());
  ASSERT_EQ(s.code, 0) << s.output;
  const fs::path motion = first_line(s.output);
  const Result f = cli("features --motion " + motion.string() + " --out " + (root_ / "f").string());
  ASSERT_EQ(f.code, 0) << f.output;
  std::ifstream in(first_line(f.output));
  std::string line;
  std::getline(in, line);
  const auto header = split_csv(line);
  ASSERT_EQ(header.size(), 19u);
  EXPECT_EQ(header[0], "id");
  for (int k = 0; k < kAffectiveDim; ++k) EXPECT_EQ(header[std::size_t(k) + 1], kAffectiveNames[std::size_t(k)]);
  const Dataset d = load_motion_file(motion);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto cells = split_csv(line);
    ASSERT_LT(row, d.size());
    EXPECT_EQ(cells[0], d[row].id);
    const AffectiveVector expect = extract_affective(d[row]);
    for (int k = 0; k < kAffectiveDim; ++k) {
      double v = 0.0;
      const auto& c = cells[std::size_t(k) + 1];
      std::from_chars(c.data(), c.data() + c.size(), v);
      EXPECT_EQ(v, expect[k]) << "row " << row << " column " << k;
    }
    ++row;
  }
  EXPECT_EQ(row, d.size());
}

TEST_F(Scratch, FeaturesOfStaticAndEmptyFiles) {
  const fs::path empty = root_ / "empty.motion";
  std::ofstream(empty) << "#joints head neck rshoulder lshoulder relbow lelbow rwrist lwrist backbone pelvis\n";
  const Result e = cli("features --motion " + empty.string() + " --out " + (root_ / "e").string());
  ASSERT_EQ(e.code, 0) << e.output;
  const std::string csv = slurp(first_line(e.output));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);

  const fs::path still = root_ / "static.motion";
  {
    std::ofstream out(still);
    out << "#joints head neck rshoulder lshoulder relbow lelbow rwrist lwrist backbone pelvis\n";
    out << "#seq s0 - 30\n";
    for (int t = 0; t < 5; ++t) {
      for (int i = 0; i < 30; ++i) out << (i ? " " : "") << 0.1 * i;
      out << '\n';
    }
  }
  const Result r = cli("features --motion " + still.string() + " --out " + (root_ / "s").string());
  ASSERT_EQ(r.code, 0) << r.output;
  std::ifstream in(first_line(r.output));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  const auto cells = split_csv(line);
  ASSERT_EQ(cells.size(), 19u);
  for (int k = affective_index::kSpeed; k < kAffectiveDim; ++k) EXPECT_EQ(cells[std::size_t(k) + 1], "0");

  const fs::path bad = root_ / "bad.motion";
  std::ofstream(bad) << "#joints head neck rshoulder lshoulder relbow lelbow rwrist lwrist backbone pelvis\n"
                     << "#seq s0 - 30\n1 2 3\n";
  const Result b = cli("features --motion " + bad.string() + " --out " + (root_ / "b").string());
  EXPECT_NE(b.code, 0);
  EXPECT_NE(b.output.find("bad.motion:3"), std::string::npos) << b.output;
}

TEST_F(Scratch, RejectsUnknownConfigKeys) {
  const fs::path cfg = write_config("typo.cfg", "aae.gama = 2\n");
  const Result r = cli("synth --config " + cfg.string() + " --out " + root_.string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.output.find("aae.gama"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("typo.cfg:1"), std::string::npos) << r.output;
  const Result s = cli("synth --set nonsense=1 --out " + root_.string());
  EXPECT_NE(s.code, 0);
  const Result bad_value = cli("synth --set aae.gamma=abc --out " + root_.string());
  EXPECT_NE(bad_value.code, 0);
  const Result bad_flag = cli("synth --no-such-flag");
  EXPECT_NE(bad_flag.code, 0);
}

TEST_F(Scratch, EvalWithoutCheckpointsFails) {
  const fs::path cfg = write_config("tiny.cfg", kTinyConfig);
  const std::string common = " --config " + cfg.string() + " --out " + root_.string();
  const Result none = cli("eval" + common);
  EXPECT_NE(none.code, 0);
  EXPECT_NE(none.output.find("missing prerequisite"), std::string::npos) << none.output;

  ASSERT_EQ(cli("synth" + common).code, 0);
  const Result fs_train = cli("train-fs" + common);
  ASSERT_EQ(fs_train.code, 0) << fs_train.output;
  const Result e = cli("eval" + common);
  EXPECT_NE(e.code, 0);
  EXPECT_NE(e.output.find("split0_scaae.ckpt"), std::string::npos) << e.output;
  EXPECT_FALSE(fs::exists(first_line(fs_train.output) / "report.json"));
}

TEST_F(Scratch, StagedPipelineIsDeterministicAndMatchesRun) {
  const fs::path cfg = write_config("tiny.cfg", kTinyConfig);
  std::vector<fs::path> dirs;
  for (const char* name : {"one", "two"}) {
    const std::string common = " --config " + cfg.string() + " --out " + (root_ / name).string();
    for (const char* stage : {"synth", "train-fs", "extract", "train-zsl", "eval"}) {
      const Result r = cli(std::string(stage) + common);
      ASSERT_EQ(r.code, 0) << stage << ": " << r.output;
    }
    const Result rep = cli("report" + common);
    ASSERT_EQ(rep.code, 0) << rep.output;
    EXPECT_NE(rep.output.find("mean"), std::string::npos);
    dirs.push_back(*find_run_dir_for(root_ / name));
  }
  for (const char* f : {"report.json", "report.csv", "splits.json", "split0_fsger_log.csv",
                        "split1_scaae_log.csv", "split0_features.csv", "split1_fsger.ckpt",
                        "split0_scaae.ckpt", "config.txt"}) {
    ASSERT_TRUE(fs::exists(dirs[0] / f)) << f;
    EXPECT_EQ(slurp(dirs[0] / f), slurp(dirs[1] / f)) << f;
  }
  std::ifstream in(dirs[0] / "report.json");
  EXPECT_NO_THROW(check_report_manifest(nlohmann::json::parse(in)));

  // The one-shot command reaches the same report as the staged commands.
  const Result run = cli("run --jobs 2 --config " + cfg.string() + " --out " + (root_ / "run").string());
  ASSERT_EQ(run.code, 0) << run.output;
  const fs::path run_dir = first_line(run.output);
  EXPECT_EQ(slurp(run_dir / "report.csv"), slurp(dirs[0] / "report.csv"));
  EXPECT_EQ(slurp(run_dir / "report.json"), slurp(dirs[0] / "report.json"));
  EXPECT_EQ(slurp(run_dir / "split1_scaae_log.csv"), slurp(dirs[0] / "split1_scaae_log.csv"));
}
