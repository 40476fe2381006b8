#ifndef UAVSWARM_CLI_HPP
#define UAVSWARM_CLI_HPP

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "uavswarm/channel.hpp"
#include "uavswarm/config.hpp"
#include "uavswarm/energy.hpp"
#include "uavswarm/metrics_io.hpp"
#include "uavswarm/policy.hpp"
#include "uavswarm/trainer.hpp"

namespace uavswarm::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,
  kNumericalFault = 3,
  kBadCheckpoint = 4,
  kVerifyMismatch = 5,
};

/// Environment variable naming the default output root.
inline constexpr const char* kOutEnv = "UAVSWARM_OUT";

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// verify

struct SuiteReport {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // worst relative error seen
  std::string first_failure;
};

inline double rel_err(double got, double want, double floor = 1e-12) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

inline void check_value(SuiteReport& r, double got, double want, double tol, const std::string& what) {
  const double e = rel_err(got, want);
  r.worst = std::max(r.worst, e);
  if (!(e <= tol)) {
    if (r.failures == 0) r.first_failure = fmt::format("{}: got {} want {}", what, num(got), num(want));
    ++r.failures;
  }
}

inline SuiteReport verify_channel(const CsvTable& t, double tol = 1e-9) {
  SuiteReport r;
  r.name = "channel";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double h = t.number(i, "h"), d = t.number(i, "d"), fc = t.number(i, "fc");
    const std::string at = fmt::format("row {}", i);
    check_value(r, pathloss(h, d, fc, LinkState::LoS), t.number(i, "L_LoS"), tol, at + " L_LoS");
    check_value(r, pathloss(h, d, fc, LinkState::NLoS), t.number(i, "L_NLoS"), tol, at + " L_NLoS");
    check_value(r, los_probability(h, d), t.number(i, "P_LoS"), tol, at + " P_LoS");
    check_value(r, mean_pathloss(h, d, fc), t.number(i, "L_mean"), tol, at + " L_mean");
    ++r.cases;
  }
  return r;
}

inline SuiteReport verify_energy(const CsvTable& t, double tol = 1e-9) {
  SuiteReport r;
  r.name = "energy";
  const AeroParams aero;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const Eigen::Vector3d v(t.number(i, "vx"), t.number(i, "vy"), t.number(i, "vz"));
    const Eigen::Vector3d a(t.number(i, "ax"), t.number(i, "ay"), t.number(i, "az"));
    const double ts = t.number(i, "Ts");
    const std::string at = fmt::format("row {}", i);
    check_value(r, thrust(v, a, aero), t.number(i, "thrust"), tol, at + " thrust");
    check_value(r, propulsion_energy(v, a, aero, ts), t.number(i, "energy"), tol, at + " energy");
    ++r.cases;
  }
  return r;
}

inline SuiteReport verify_gae(const CsvTable& t, double tol = 1e-10) {
  SuiteReport r;
  r.name = "gae";
  std::map<int, std::vector<std::size_t>> instances;
  for (std::size_t i = 0; i < t.rows.size(); ++i) instances[static_cast<int>(t.number(i, "instance"))].push_back(i);
  for (const auto& [id, rows] : instances) {
    std::vector<double> rew, val, adv_want, ret_want;
    std::vector<std::uint8_t> done;
    for (std::size_t i : rows) {
      rew.push_back(t.number(i, "reward"));
      val.push_back(t.number(i, "value"));
      done.push_back(t.number(i, "done") != 0.0 ? 1 : 0);
      adv_want.push_back(t.number(i, "advantage"));
      ret_want.push_back(t.number(i, "return"));
    }
    const std::size_t r0 = rows.front();
    const double gamma = t.number(r0, "gamma"), lambda = t.number(r0, "lambda"), boot = t.number(r0, "bootstrap");
    const auto adv = compute_gae(rew, val, done, gamma, lambda, boot);
    const auto ret = compute_returns(rew, done, gamma, boot);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      // absolute floor of 1: advantages can legitimately be ~0
      const double ea = std::abs(adv[k] - adv_want[k]) / std::max(std::abs(adv_want[k]), 1.0);
      const double er = std::abs(ret[k] - ret_want[k]) / std::max(std::abs(ret_want[k]), 1.0);
      r.worst = std::max({r.worst, ea, er});
      if (!(ea <= tol) || !(er <= tol)) {
        if (r.failures == 0) r.first_failure = fmt::format("instance {} t {}", id, k);
        ++r.failures;
      }
    }
    ++r.cases;
  }
  return r;
}

// ---------------------------------------------------------------------------
// run directory helpers

inline void write_config_snapshot(const fs::path& dir, const RunConfig& cfg, const std::string& command) {
  nlohmann::json j = to_json(cfg);
  j["schema"] = "run_config v1";
  j["command"] = command;
  write_json(dir / "config.json", j);
}

struct RunOutputs {
  CsvWriter episodes;
  CsvWriter updates;
};

inline TrainHooks file_hooks(const fs::path& dir, RunOutputs& outs, std::ostream& log, bool quiet) {
  TrainHooks h;
  h.on_episode = [&outs, &log, quiet](const EpisodeMetrics& m) {
    outs.episodes.write_row(episode_row(m));
    if (!quiet) {
      fmt::print(log, "episode {:5d}  return {:8.4f}  fairness {:.4f}  energy {:9.1f} J  eta {:.4f} kbit/J\n",
                 m.episode, m.discounted_return, m.fairness, m.energy, m.efficiency);
    }
  };
  h.on_update = [&outs](const UpdateStats& u) { outs.updates.write_row(update_row(u)); };
  h.on_checkpoint = [dir](const PolicySet& p, int episodes) {
    save_checkpoint(p, dir / "checkpoints" / fmt::format("ckpt_ep{:06d}.bin", episodes));
  };
  h.on_fault = [dir](const PolicySet& p, const std::string& what) {
    save_checkpoint(p, dir / "fault.ckpt");
    write_json(dir / "fault.json", {{"schema", "fault v1"}, {"error", what}, {"checkpoint", "fault.ckpt"}});
  };
  return h;
}

/// Trains one pipeline into `dir`. Returns the final policy.
inline PolicySet run_training(const RunConfig& cfg, Method method, const fs::path& dir, std::ostream& log,
                              bool quiet, const std::string& command) {
  fs::create_directories(dir / "checkpoints");
  write_config_snapshot(dir, cfg, command);
  RunOutputs outs{CsvWriter(dir / "metrics.csv", "episode_metrics v1", episode_header()),
                  CsvWriter(dir / "updates.csv", "update_stats v1", update_header())};
  if (method == Method::Exploration) {
    PolicySet initial(method_sharing(method), cfg.scenario, cfg.train);
    initial.init(cfg.train.seed, cfg.train.init_log_std);
    save_checkpoint(initial, dir / "checkpoints" / "ckpt_initial.bin");
  }
  TrainResult r = train(cfg, method, file_hooks(dir, outs, log, quiet));
  if (method != Method::Exploration) save_checkpoint(r.policy, dir / "checkpoints" / "ckpt_final.bin");
  return std::move(r.policy);
}

/// Evaluates into `dir`: per-episode CSV, summary, CDF data, one trajectory and step trace.
inline RunSummary run_evaluation(const PolicySet& policy, const RunConfig& cfg, int episodes, bool stochastic,
                                 const fs::path& dir) {
  fs::create_directories(dir);
  Trajectory traj;
  std::ofstream trace(dir / "trace.jsonl", std::ios::trunc);
  if (!trace) throw IoError("cannot write " + (dir / "trace.jsonl").string());
  const StepObserver observer = [&](int e, int slot, const Environment& env, const StepOutcome& o) {
    if (e != 0) return;
    if (traj.uavs.empty()) traj.uavs.resize(env.world().uavs.size());
    for (std::size_t m = 0; m < env.world().uavs.size(); ++m) traj.uavs[m].push_back(env.world().uavs[m].position);
    trace << step_trace_json(slot, env.world(), env.last_assignment(), env.last_power(), o).dump() << "\n";
  };
  const auto metrics = evaluate(policy, cfg.scenario, episodes, cfg.scenario.seed, stochastic, cfg.train.gamma, observer);
  // prepend the start formation to each polyline
  const auto start = initial_uav_positions(cfg.scenario);
  for (std::size_t m = 0; m < traj.uavs.size(); ++m) traj.uavs[m].insert(traj.uavs[m].begin(), start[m]);
  {
    Environment probe(cfg.scenario, cfg.scenario.seed, kEvalSalt);
    probe.reset();
    for (const auto& u : probe.world().users) traj.users_start.push_back(u.position);
    traj.regions = probe.world().regions;
  }
  write_json(dir / "trajectory.json", to_json(traj));
  write_episode_csv(dir / "eval_metrics.csv", metrics, "eval_metrics v1");
  const RunSummary s = run_summary(metrics);
  nlohmann::json sj = to_json(s);
  sj["stochastic"] = stochastic;
  write_json(dir / "summary.json", sj);
  std::vector<double> f, e, eta, g;
  for (const auto& m : metrics) {
    f.push_back(m.fairness);
    e.push_back(m.energy);
    eta.push_back(m.efficiency);
    g.push_back(m.discounted_return);
  }
  if (!metrics.empty()) {
    write_cdf_csv(dir / "cdf_fairness.csv", cdf_points(f), "fairness");
    write_cdf_csv(dir / "cdf_energy.csv", cdf_points(e), "energy_j");
    write_cdf_csv(dir / "cdf_efficiency.csv", cdf_points(eta), "efficiency_kbit_per_j");
    write_cdf_csv(dir / "cdf_return.csv", cdf_points(g), "return");
  }
  return s;
}

inline void check_compatible(const PolicySet& p, const ScenarioConfig& s) {
  const ActorShape& a = p.actor_shape();
  if (p.agents() != s.num_uavs || a.users != s.num_users || a.subcarriers != s.num_subcarriers ||
      p.state_dim() != state_dim(s)) {
    throw CheckpointError(fmt::format(
        "checkpoint was built for M={} K={} N={}, configuration has M={} K={} N={}", p.agents(), a.users,
        a.subcarriers, s.num_uavs, s.num_users, s.num_subcarriers));
  }
}

// ---------------------------------------------------------------------------
// entry point

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> episodes;
  std::optional<int> workers;
  bool gae_paper_form = false;
  bool quiet = false;
};

inline void add_common(CLI::App* cmd, CommonOptions& o, bool training) {
  cmd->add_option("--config", o.config, "INI or JSON configuration file");
  cmd->add_option("--set", o.sets, "override, section.key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "seed for environments and networks");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--episodes", o.episodes, training ? "training episodes" : "evaluation episodes");
  cmd->add_flag("--quiet", o.quiet, "no per-episode log lines");
  if (training) {
    cmd->add_option("--workers", o.workers, "parallel rollout workers");
    cmd->add_flag("--gae-paper-form", o.gae_paper_form, "TD error against the empirical return");
  }
}

inline RunConfig build_config(const CommonOptions& o, bool training) {
  RunConfig cfg;
  if (!o.config.empty()) apply_settings(cfg, read_config_file(o.config));
  apply_settings(cfg, parse_overrides(o.sets));
  if (o.seed) {
    cfg.scenario.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  if (training) {
    if (o.episodes) cfg.train.episodes = *o.episodes;
    if (o.workers) cfg.train.workers = *o.workers;
    if (o.gae_paper_form) cfg.train.gae_paper_form = true;
  }
  cfg.validate();
  return cfg;
}

inline fs::path resolve_out(const CommonOptions& o, const std::string& command) {
  if (!o.out.empty()) return o.out;
  if (const char* root = std::getenv(kOutEnv); root != nullptr && *root != '\0') return fs::path(root) / command;
  return fs::path("runs") / command;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"UAV swarm resource allocation and trajectory training"};
  app.require_subcommand(1);

  CommonOptions train_o, base_o, sweep_o, eval_o;
  std::string baseline_name;
  std::string checkpoint;
  bool stochastic = false;
  std::string vectors;
  std::vector<int> horizons{40, 50, 60, 70, 80};
  int sweep_eval = 100;

  auto* train_cmd = app.add_subcommand("train", "train the per-agent actors with a shared critic");
  add_common(train_cmd, train_o, true);

  auto* base_cmd = app.add_subcommand("baseline", "run a comparison pipeline (hppo | exploration)");
  base_cmd->add_option("name", baseline_name, "hppo or exploration")->required();
  add_common(base_cmd, base_o, true);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  add_common(eval_cmd, eval_o, false);
  eval_cmd->add_flag("--stochastic-eval", stochastic, "sample actions instead of taking means/argmax");

  auto* sweep_cmd = app.add_subcommand("sweep-t", "train and evaluate for several horizons T");
  add_common(sweep_cmd, sweep_o, true);
  sweep_cmd->add_option("--values", horizons, "horizons")->delimiter(',');
  sweep_cmd->add_option("--eval-episodes", sweep_eval, "evaluation episodes per horizon");

  auto* verify_cmd = app.add_subcommand("verify", "compare against stored test vectors");
  verify_cmd->add_option("--vectors", vectors, "directory with channel.csv, energy.csv, gae.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  fs::path out_dir;
  try {
    if (*train_cmd || *base_cmd) {
      const bool is_train = static_cast<bool>(*train_cmd);
      const CommonOptions& o = is_train ? train_o : base_o;
      Method method = Method::MahppoAm;
      if (!is_train) {
        if (baseline_name == "hppo") {
          method = Method::Hppo;
        } else if (baseline_name == "exploration") {
          method = Method::Exploration;
        } else {
          fmt::print(err, "error: unknown baseline '{}' (expected hppo or exploration)\n", baseline_name);
          return kConfigError;
        }
      }
      const RunConfig cfg = build_config(o, true);
      for (const auto& w : cfg.scenario.warnings()) fmt::print(err, "warning: {}\n", w);
      out_dir = resolve_out(o, is_train ? "train" : "baseline_" + baseline_name);
      run_training(cfg, method, out_dir, out, o.quiet, method_name(method));
      fmt::print(out, "wrote {}\n", out_dir.string());
      return kOk;
    }

    if (*eval_cmd) {
      const RunConfig cfg = build_config(eval_o, false);
      out_dir = resolve_out(eval_o, "eval");
      PolicySet policy = load_checkpoint(checkpoint);
      check_compatible(policy, cfg.scenario);
      const int n = eval_o.episodes.value_or(100);
      if (n < 1) throw ConfigError("--episodes must be >= 1");
      fs::create_directories(out_dir);
      write_config_snapshot(out_dir, cfg, "eval");
      const RunSummary s = run_evaluation(policy, cfg, n, stochastic, out_dir);
      fmt::print(out, "episodes {}  return {:.4f} +- {:.4f}  fairness {:.4f}  energy {:.1f} J  eta {:.4f} kbit/J\n",
                 s.episodes, s.discounted_return.mean, s.discounted_return.std, s.fairness.mean, s.energy.mean,
                 s.efficiency.mean);
      return kOk;
    }

    if (*sweep_cmd) {
      RunConfig base = build_config(sweep_o, true);
      if (horizons.empty()) throw ConfigError("--values must list at least one horizon");
      if (sweep_eval < 1) throw ConfigError("--eval-episodes must be >= 1");
      out_dir = resolve_out(sweep_o, "sweep_t");
      fs::create_directories(out_dir);
      std::vector<SweepRow> rows;
      for (int t : horizons) {
        RunConfig cfg = base;
        cfg.scenario.horizon = t;
        cfg.validate();
        const fs::path dir = out_dir / fmt::format("T{}", t);
        const PolicySet policy = run_training(cfg, Method::MahppoAm, dir, out, true, "sweep-t");
        const RunSummary s = run_evaluation(policy, cfg, sweep_eval, false, dir / "eval");
        rows.push_back({t, s.efficiency.mean, s.efficiency.std, s.fairness.mean, s.energy.mean});
        fmt::print(out, "T {:3d}  eta {:.5f} kbit/J\n", t, s.efficiency.mean);
      }
      write_sweep_csv(out_dir / "sweep.csv", rows);
      fmt::print(out, "\n{:>6} | {:>14}\n", "T", "eta (kbit/J)");
      for (const auto& r : rows) fmt::print(out, "{:>6} | {:>14.5f}\n", r.horizon, r.efficiency);
      return kOk;
    }

    if (*verify_cmd) {
      const fs::path dir(vectors);
      if (!fs::is_directory(dir)) {
        fmt::print(err, "error: {} is not a directory\n", vectors);
        return kConfigError;
      }
      struct Suite {
        const char* file;
        SuiteReport (*fn)(const CsvTable&, double);
        double tol;
      };
      const Suite suites[] = {{"channel.csv", verify_channel, 1e-9},
                              {"energy.csv", verify_energy, 1e-9},
                              {"gae.csv", verify_gae, 1e-10}};
      int found = 0;
      bool ok = true;
      for (const auto& s : suites) {
        if (!fs::exists(dir / s.file)) continue;
        ++found;
        const SuiteReport r = s.fn(read_csv(dir / s.file), s.tol);
        const bool pass = r.failures == 0 && r.cases > 0;
        ok = ok && pass;
        fmt::print(out, "{:<8} {:>5} cases  worst rel err {:.3e}  {}\n", r.name, r.cases, r.worst,
                   pass ? "ok" : "MISMATCH");
        if (!pass) fmt::print(out, "  {} failing, first: {}\n", r.failures, r.first_failure);
      }
      if (found == 0) {
        fmt::print(err, "error: no vector files in {}\n", vectors);
        return kConfigError;
      }
      return ok ? kOk : kVerifyMismatch;
    }
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const CheckpointError& e) {
    fmt::print(err, "bad checkpoint: {}\n", e.what());
    return kBadCheckpoint;
  } catch (const NumericalFault& e) {
    fmt::print(err, "numerical fault: {}\n", e.what());
    if (!out_dir.empty()) fmt::print(err, "diagnostics: {}\n", (out_dir / "fault.json").string());
    return kNumericalFault;
  } catch (const IoError& e) {
    fmt::print(err, "i/o error: {}\n", e.what());
    return kConfigError;
  }
  return kUsage;
}

}  // namespace uavswarm::cli

#endif  // UAVSWARM_CLI_HPP
