#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "uavswarm/cli.hpp"

using namespace uavswarm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "uavswarm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "uavswarm_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// small networks keep these runs quick; the scenario stays at its defaults
const std::vector<std::string> kSmall{"--set", "train.actor_trunk=32,16", "--set", "train.head_hidden=16",
                                      "--set", "train.critic_hidden=32,16", "--set", "train.buffer_size=120",
                                      "--set", "train.batch_size=32",       "--set", "train.reuse=2",
                                      "--quiet"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

}  // namespace

TEST(Verify, PristineVectorsPass) {
  const Outcome o = invoke({"verify", "--vectors", UAVSWARM_VECTORS});
  EXPECT_EQ(o.code, 0) << o.out << o.err;
  for (const char* suite : {"channel", "energy", "gae"}) EXPECT_NE(o.out.find(suite), std::string::npos);
}

TEST(Verify, PerturbedValueNamesSuite) {
  const fs::path dir = fresh_dir("vectors_perturbed");
  fs::create_directories(dir);
  fs::copy_file(fs::path(UAVSWARM_VECTORS) / "energy.csv", dir / "energy.csv");
  // nudge the last digits of one expected value
  std::string text = slurp(dir / "energy.csv");
  std::istringstream lines(text);
  std::string schema, header, row;
  std::getline(lines, schema);
  std::getline(lines, header);
  std::getline(lines, row);
  std::string changed = row;
  const auto last = changed.rfind(',');
  const double v = std::stod(changed.substr(last + 1));
  changed = changed.substr(0, last + 1) + num(v * (1.0 + 1e-6));
  text.replace(text.find(row), row.size(), changed);
  std::ofstream(dir / "energy.csv") << text;
  const Outcome o = invoke({"verify", "--vectors", dir.string()});
  EXPECT_EQ(o.code, 5);
  EXPECT_NE(o.out.find("energy"), std::string::npos);
  EXPECT_NE(o.out.find("MISMATCH"), std::string::npos);
}

TEST(Verify, EmptyOrMissingDirectory) {
  const fs::path dir = fresh_dir("vectors_empty");
  fs::create_directories(dir);
  EXPECT_EQ(invoke({"verify", "--vectors", dir.string()}).code, 2);
  EXPECT_EQ(invoke({"verify", "--vectors", (dir / "nope").string()}).code, 2);
}

TEST(Cli, UsageAndConfigErrors) {
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(invoke({"baseline"}).code, 1);
  EXPECT_EQ(invoke({"--help"}).code, 0);
  const Outcome unknown = invoke({"baseline", "greedy", "--out", fresh_dir("greedy").string()});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("greedy"), std::string::npos);
  const Outcome bad = invoke({"train", "--set", "train.lr=fast", "--out", fresh_dir("bad").string()});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("train.lr"), std::string::npos);
  EXPECT_EQ(invoke({"train", "--config", "/nonexistent.ini", "--out", fresh_dir("bad2").string()}).code, 2);
}

TEST(Cli, BadCheckpoint) {
  const fs::path dir = fresh_dir("badckpt");
  EXPECT_EQ(invoke({"eval", "--checkpoint", (dir / "missing.bin").string(), "--out", dir.string()}).code, 4);
  fs::create_directories(dir);
  std::ofstream(dir / "junk.bin") << "not a checkpoint";
  EXPECT_EQ(invoke({"eval", "--checkpoint", (dir / "junk.bin").string(), "--out", dir.string()}).code, 4);
}

TEST(Cli, TrainThenEvaluate) {
  const fs::path run = fresh_dir("train");
  const Outcome t = invoke(with_small({"train", "--episodes", "5", "--seed", "3", "--out", run.string()}));
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(read_episode_csv(run / "metrics.csv").size(), 5u);
  EXPECT_TRUE(fs::exists(run / "updates.csv"));
  EXPECT_TRUE(fs::exists(run / "config.json"));
  const fs::path ckpt = run / "checkpoints" / "ckpt_final.bin";
  ASSERT_TRUE(fs::exists(ckpt));

  const fs::path ev = fresh_dir("eval");
  const Outcome e = invoke({"eval", "--checkpoint", ckpt.string(), "--seed", "3", "--out", ev.string()});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(read_csv(ev / "eval_metrics.csv").rows.size(), 100u);
  EXPECT_EQ(summary_from_json(read_json(ev / "summary.json")).episodes, 100);
  for (const char* q : {"fairness", "energy", "efficiency", "return"}) {
    EXPECT_TRUE(fs::exists(ev / fmt::format("cdf_{}.csv", q))) << q;
  }
  const Trajectory tr = trajectory_from_json(read_json(ev / "trajectory.json"));
  ASSERT_EQ(tr.uavs.size(), 3u);
  EXPECT_EQ(tr.uavs[0].size(), 61u);
  EXPECT_TRUE(fs::exists(ev / "trace.jsonl"));

  // greedy evaluation is deterministic under a fixed seed
  const fs::path ev2 = fresh_dir("eval2");
  ASSERT_EQ(invoke({"eval", "--checkpoint", ckpt.string(), "--seed", "3", "--episodes", "7", "--out", ev2.string()}).code, 0);
  const fs::path ev3 = fresh_dir("eval3");
  ASSERT_EQ(invoke({"eval", "--checkpoint", ckpt.string(), "--seed", "3", "--episodes", "7", "--out", ev3.string()}).code, 0);
  EXPECT_EQ(slurp(ev2 / "eval_metrics.csv"), slurp(ev3 / "eval_metrics.csv"));

  // a checkpoint does not fit a scenario with different dimensions
  const fs::path ev4 = fresh_dir("eval4");
  EXPECT_EQ(invoke({"eval", "--checkpoint", ckpt.string(), "--set", "scenario.num_users=5", "--out", ev4.string()}).code,
            4);
}

TEST(Cli, SeedReproducibility) {
  const fs::path a = fresh_dir("seed_a"), b = fresh_dir("seed_b"), c = fresh_dir("seed_c");
  ASSERT_EQ(invoke(with_small({"train", "--episodes", "4", "--seed", "11", "--out", a.string()})).code, 0);
  ASSERT_EQ(invoke(with_small({"train", "--episodes", "4", "--seed", "11", "--out", b.string()})).code, 0);
  ASSERT_EQ(invoke(with_small({"train", "--episodes", "4", "--seed", "12", "--out", c.string()})).code, 0);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  EXPECT_EQ(slurp(a / "checkpoints" / "ckpt_final.bin"), slurp(b / "checkpoints" / "ckpt_final.bin"));
  EXPECT_NE(slurp(a / "metrics.csv"), slurp(c / "metrics.csv"));
}

TEST(Cli, Baselines) {
  const fs::path h = fresh_dir("hppo"), x = fresh_dir("exploration");
  ASSERT_EQ(invoke(with_small({"baseline", "hppo", "--episodes", "3", "--out", h.string()})).code, 0);
  EXPECT_TRUE(fs::exists(h / "checkpoints" / "ckpt_final.bin"));
  EXPECT_EQ(load_checkpoint(h / "checkpoints" / "ckpt_final.bin").sharing(), ActorSharing::Shared);
  ASSERT_EQ(invoke(with_small({"baseline", "exploration", "--episodes", "3", "--out", x.string()})).code, 0);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(x / "checkpoints")) names.push_back(e.path().filename().string());
  EXPECT_EQ(names, std::vector<std::string>{"ckpt_initial.bin"});
  EXPECT_EQ(read_episode_csv(x / "metrics.csv").size(), 3u);
}

TEST(Cli, SweepHorizons) {
  const fs::path s = fresh_dir("sweep");
  const Outcome o = invoke(with_small(
      {"sweep-t", "--values", "40,50", "--episodes", "2", "--eval-episodes", "2", "--out", s.string()}));
  ASSERT_EQ(o.code, 0) << o.err;
  const auto rows = read_sweep_csv(s / "sweep.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].horizon, 40);
  EXPECT_EQ(rows[1].horizon, 50);
  EXPECT_TRUE(fs::exists(s / "T40" / "metrics.csv"));
  EXPECT_TRUE(fs::exists(s / "T50" / "metrics.csv"));
  EXPECT_EQ(read_episode_csv(s / "T40" / "metrics.csv").front().steps, 40);
}

TEST(Cli, OutRootFromEnvironment) {
  const fs::path root = fresh_dir("env_root");
  ::setenv(cli::kOutEnv, root.c_str(), 1);
  const Outcome o = invoke(with_small({"train", "--episodes", "1"}));
  ::unsetenv(cli::kOutEnv);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(fs::exists(root / "train" / "metrics.csv"));
}

TEST(Cli, NumericalFaultWritesDiagnostics) {
  const fs::path run = fresh_dir("fault");
  const Outcome o = invoke(with_small({"train", "--episodes", "20", "--set", "train.lr=1e300", "--out", run.string()}));
  EXPECT_EQ(o.code, 3) << o.err;
  EXPECT_NE(o.err.find("fault.json"), std::string::npos);
  EXPECT_TRUE(fs::exists(run / "fault.json"));
}
