#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "imm/cli/commands.hpp"
#include "imm/error.hpp"
#include "imm/model/checkpoint.hpp"

using namespace imm;
using namespace imm::cli;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(std::vector<std::string> args, const std::map<std::string, std::string>& env = {}) {
  args.insert(args.begin(), "imm");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const EnvLookup lookup = [&env](const char* name) -> const char* {
    const auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err, lookup);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("imm_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

// Small model and data so every command runs in well under a second.
std::vector<std::string> small_flags() {
  return {"--d-model", "8",  "--heads",     "2", "--d-k",    "4", "--d-v",        "4",
          "--ff-width", "16", "--enc-len",  "4", "--pred-len", "3", "--k-eval",    "3",
          "--k-train", "2",  "--batch-size", "16", "--n-train", "6", "--n-val",     "2",
          "--n-test",  "3",  "--seed",      "5", "--log-wall-time", "false"};
}



}  // namespace

TEST(RunConfig, DefaultsValidateAndKeysRoundTrip) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  const auto map = c.to_map();
  EXPECT_EQ(map.size(), config_keys().size());
  RunConfig d;
  apply_overrides(d, map);
  EXPECT_EQ(d.to_map(), map);
  EXPECT_EQ(map.at("k_train"), "5");
  EXPECT_EQ(map.at("loss"), "imm");
}

TEST(RunConfig, UnknownKeyAndBadValueAreConfigErrors) {
  RunConfig c;
  EXPECT_THROW(apply_overrides(c, {{"d_modle", "8"}}), ConfigError);
  EXPECT_THROW(apply_overrides(c, {{"epochs", "ten"}}), ConfigError);
  EXPECT_THROW(apply_overrides(c, {{"base", "cauchy"}}), ConfigError);
  apply_overrides(c, {{"dropout", "1.5"}});
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfig, ConfigFileParsing) {
  const auto dir = fresh_dir("cfgfile");
  fs::create_directories(dir);
  std::ofstream(dir / "run.cfg") << "# comment\nseed = 9  # trailing\n\nloss=mse\n";
  const auto kv = read_config_file(dir / "run.cfg");
  EXPECT_EQ(kv, (std::map<std::string, std::string>{{"seed", "9"}, {"loss", "mse"}}));
  std::ofstream(dir / "bad.cfg") << "seed 9\n";
  EXPECT_THROW(read_config_file(dir / "bad.cfg"), ConfigError);
  EXPECT_THROW(read_config_file(dir / "missing.cfg"), ConfigError);
}

TEST(Cli, PrecedenceFileThenEnvThenFlags) {
  const auto dir = fresh_dir("precedence");
  fs::create_directories(dir);
  std::ofstream(dir / "run.cfg") << "n_train = 4\nn_val = 1\nn_test = 1\nseed = 1\n";
  const std::string out = (dir / "a").string();
  // File alone.
  ASSERT_EQ(run({"synth", "--config", (dir / "run.cfg").string(), "--out", out}).code, 0);
  auto cfg = lines_of(dir / "a" / "resolved_config.txt");
  EXPECT_NE(std::find(cfg.begin(), cfg.end(), "n_train=4"), cfg.end());
  EXPECT_NE(std::find(cfg.begin(), cfg.end(), "seed=1"), cfg.end());
  // Env beats file, flag beats env.
  ASSERT_EQ(run({"synth", "--config", (dir / "run.cfg").string(), "--out", out, "--seed", "3"},
                {{"IMM_SEED", "2"}, {"IMM_N_TRAIN", "5"}})
                .code,
            0);
  cfg = lines_of(dir / "a" / "resolved_config.txt");
  EXPECT_NE(std::find(cfg.begin(), cfg.end(), "n_train=5"), cfg.end());
  EXPECT_NE(std::find(cfg.begin(), cfg.end(), "seed=3"), cfg.end());
  EXPECT_EQ(lines_of(dir / "a" / "train.csv").size(), 1u + 5u * 15u);
}

TEST(Cli, ConfigErrorsExitTwoWithoutOutputs) {
  const auto dir = fresh_dir("invalid");
  EXPECT_EQ(run({"synth", "--out", dir.string(), "--bogus", "1"}).code, kExitConfig);
  EXPECT_EQ(run({"synth", "--out", dir.string(), "--n-test", "0"}).code, kExitConfig);
  EXPECT_EQ(run({"train", "--out", dir.string(), "--k-train", "1"}).code, kExitConfig);
  EXPECT_EQ(run({"train", "--out", dir.string(), "--loss", "l1"}).code, kExitConfig);
  EXPECT_EQ(run({"synth", "--out", dir.string()}, {{"IMM_DROPOUT", "2"}}).code, kExitConfig);
  EXPECT_EQ(run({}).code, kExitConfig);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Cli, MissingDataExitsThree) {
  const auto dir = fresh_dir("nodata");
  const auto r = run({"train", "--data", (dir / "absent").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_FALSE(r.err.empty());
  EXPECT_FALSE(fs::exists(dir / "o"));
}

TEST(Cli, SynthCountsAndByteIdenticalReruns) {
  const auto dir = fresh_dir("synth");
  ASSERT_EQ(run({"synth", "--out", (dir / "a").string(), "--n-train", "10", "--n-val", "2",
                 "--n-test", "3", "--seed", "4"})
                .code,
            0);
  ASSERT_EQ(run({"synth", "--out", (dir / "b").string(), "--n-train", "10", "--n-val", "2",
                 "--n-test", "3", "--seed", "4"})
                .code,
            0);
  EXPECT_EQ(lines_of(dir / "a" / "train.csv").size(), 1u + 10u * 15u);
  EXPECT_EQ(lines_of(dir / "a" / "test.csv").size(), 1u + 3u * 15u);
  for (const char* f : {"train.csv", "val.csv", "test.csv", "dataset_manifest.txt"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
}

TEST(Cli, FullPipeline) {
  const auto dir = fresh_dir("full");
  const auto flags = small_flags();
  const std::string data = (dir / "data").string();
  auto args = [&](std::initializer_list<std::string> head, std::initializer_list<std::string> tail) {
    std::vector<std::string> v(head);
    v.insert(v.end(), flags.begin(), flags.end());
    v.insert(v.end(), tail);
    v.push_back("--data");
    v.push_back(data);
    return v;
  };
  ASSERT_EQ(run(args({"synth"}, {"--out", data})).code, 0);

  // --epochs 0 stores the initial parameters.
  ASSERT_EQ(run(args({"train"}, {"--epochs", "0", "--out", (dir / "init").string()})).code, 0);
  const auto init = model::load_checkpoint(dir / "init" / "checkpoint.bin");
  EXPECT_EQ(init.meta.at("epochs_run"), "0");
  EXPECT_EQ(lines_of(dir / "init" / "train_log.csv").size(), 1u);

  // IMM and MSE arms, each trained twice.
  for (const std::string loss : {"imm", "mse"}) {
    for (const std::string rep : {"1", "2"}) {
      const auto r = run(args({"train"}, {"--epochs", "4", "--lr", "0.003", "--loss", loss, "--out",
                                          (dir / (loss + rep)).string()}));
      ASSERT_EQ(r.code, 0) << r.err;
    }
    for (const char* f : {"checkpoint.bin", "train_log.csv", "dataset_manifest.txt"}) {
      EXPECT_EQ(slurp(dir / (loss + "1") / f), slurp(dir / (loss + "2") / f)) << loss << ' ' << f;
    }
  }

  // The MSE arm leaves the log-variance column of the head untouched.
  const auto mse = model::load_checkpoint(dir / "mse1" / "checkpoint.bin");
  EXPECT_EQ(mse.meta.at("loss"), "mse");
  ASSERT_NE(mse.meta.at("best_epoch"), "0");
  const auto& w0 = init.params.get("head.w");
  const auto& w1 = mse.params.get("head.w");
  for (std::size_t r = 0; r < w0.rows(); ++r) EXPECT_EQ(w0(r, 1), w1(r, 1));
  EXPECT_EQ(init.params.get("head.b")[1], mse.params.get("head.b")[1]);
  EXPECT_NE(init.params.get("head.w")[0], mse.params.get("head.w")[0]);

  // predict: forecast rows, draw rows and determinism.
  const std::string imm_ckpt = (dir / "imm1" / "checkpoint.bin").string();
  ASSERT_EQ(run(args({"predict"}, {"--checkpoint", imm_ckpt, "--k-eval", "5", "--emit-draws",
                                   "--out", (dir / "p1").string()}))
                .code,
            0);
  ASSERT_EQ(run(args({"predict"}, {"--checkpoint", imm_ckpt, "--k-eval", "5", "--emit-draws",
                                   "--out", (dir / "p2").string()}))
                .code,
            0);
  const auto pred = lines_of(dir / "p1" / "predictions.csv");
  EXPECT_EQ(pred.front(), "window,source,offset,horizon,row,draw,mean,sd,target");
  // 3 test series x (15 - 4 - 3 + 1) windows x 3 horizons x (1 + 5) rows.
  EXPECT_EQ(pred.size(), 1u + 3u * 9u * 3u * 6u);
  std::size_t draws = 0;
  for (std::size_t i = 1; i < pred.size(); ++i) draws += pred[i].find(",draw,") != std::string::npos;
  EXPECT_EQ(draws, 3u * 9u * 3u * 5u);
  EXPECT_EQ(slurp(dir / "p1" / "predictions.csv"), slurp(dir / "p2" / "predictions.csv"));

  ASSERT_EQ(run(args({"predict"}, {"--checkpoint", imm_ckpt, "--deterministic", "--out",
                                   (dir / "d1").string()}))
                .code,
            0);
  ASSERT_EQ(run(args({"predict"}, {"--checkpoint", imm_ckpt, "--deterministic", "--seed", "99",
                                   "--out", (dir / "d2").string()}))
                .code,
            0);
  EXPECT_EQ(lines_of(dir / "d1" / "predictions.csv").size(), 1u + 3u * 9u * 3u);
  EXPECT_EQ(slurp(dir / "d1" / "predictions.csv"), slurp(dir / "d2" / "predictions.csv"));

  // eval: report files, horizon count and the comparison row.
  const std::string mse_ckpt = (dir / "mse1" / "checkpoint.bin").string();
  for (const std::string rep : {"e1", "e2"}) {
    const auto r = run(args({"eval"}, {"--checkpoint", imm_ckpt, "--compare", mse_ckpt, "--out",
                                       (dir / rep).string()}));
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const auto cal = lines_of(dir / "e1" / "calibration.csv");
  std::set<std::string> horizons;
  for (std::size_t i = 1; i < cal.size(); ++i) horizons.insert(cal[i].substr(0, cal[i].find(',')));
  EXPECT_EQ(horizons.size(), 3u);
  EXPECT_EQ(cal.size(), 1u + 3u * 12u);
  const auto ll = lines_of(dir / "e1" / "loglik.csv");
  ASSERT_EQ(ll.size(), 3u);
  EXPECT_EQ(ll[1].rfind("imm,", 0), 0u);
  EXPECT_EQ(ll[2].rfind("gaussian_baseline,", 0), 0u);
  EXPECT_EQ(lines_of(dir / "e1" / "sharpness.csv").size(), 4u);
  EXPECT_TRUE(fs::exists(dir / "e1" / "calibration.svg"));
  for (const char* f : {"metrics.csv", "calibration.csv", "sharpness.csv", "loglik.csv", "calibration.svg"}) {
    EXPECT_EQ(slurp(dir / "e1" / f), slurp(dir / "e2" / f)) << f;
  }

  // Shape mismatch between checkpoint and run is reported, not ignored.
  const auto bad = run(args({"eval"}, {"--checkpoint", imm_ckpt, "--pred-len", "2", "--out",
                                       (dir / "bad").string()}));
  EXPECT_NE(bad.code, 0);
  EXPECT_FALSE(fs::exists(dir / "bad"));
}

TEST(Cli, EmptyTestSetGivesHeaderOnlyReports) {
  const auto dir = fresh_dir("empty");
  const std::string data = (dir / "data").string();
  auto flags = small_flags();
  auto args = [&](std::initializer_list<std::string> head, std::initializer_list<std::string> tail) {
    std::vector<std::string> v(head);
    v.insert(v.end(), flags.begin(), flags.end());
    v.insert(v.end(), tail);
    v.push_back("--data");
    v.push_back(data);
    return v;
  };
  ASSERT_EQ(run(args({"synth"}, {"--out", data})).code, 0);
  ASSERT_EQ(run(args({"train"}, {"--epochs", "0", "--out", (dir / "m").string()})).code, 0);
  // Keep only the header of test.csv.
  const auto test_lines = lines_of(dir / "data" / "test.csv");
  std::ofstream(dir / "data" / "test.csv", std::ios::trunc) << test_lines.front() << '\n';
  const auto r = run(args({"eval"}, {"--checkpoint", (dir / "m" / "checkpoint.bin").string(),
                                     "--out", (dir / "e").string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("warning"), std::string::npos);
  EXPECT_EQ(lines_of(dir / "e" / "metrics.csv").size(), 1u);
  EXPECT_EQ(lines_of(dir / "e" / "calibration.csv").size(), 1u);
  EXPECT_EQ(lines_of(dir / "e" / "loglik.csv").size(), 1u);
}
