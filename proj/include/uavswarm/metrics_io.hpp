#ifndef UAVSWARM_METRICS_IO_HPP
#define UAVSWARM_METRICS_IO_HPP

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "uavswarm/trainer.hpp"

namespace uavswarm {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Centered moving average; near the ends the window shrinks symmetrically.
inline std::vector<double> smooth(const std::vector<double>& series, int window = 5) {
  if (series.empty()) throw std::invalid_argument("smooth: empty series");
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("smooth: window must be odd and >= 1");
  const auto n = static_cast<long>(series.size());
  const long half = window / 2;
  std::vector<double> out(series.size());
  for (long i = 0; i < n; ++i) {
    const long h = std::min({half, i, n - 1 - i});
    double s = 0.0;
    for (long j = i - h; j <= i + h; ++j) s += series[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = s / static_cast<double>(2 * h + 1);
  }
  return out;
}

/// Empirical CDF as (value, fraction of samples <= value), one point per distinct value.
inline std::vector<std::pair<double, double>> cdf_points(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("cdf_points: no samples");
  std::sort(samples.begin(), samples.end());
  std::vector<std::pair<double, double>> out;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
    out.emplace_back(samples[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population
};

inline Stat stat_of(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(v.size()));
  return s;
}

struct RunSummary {
  int episodes = 0;
  Stat discounted_return;
  Stat fairness;
  Stat energy;      // J
  Stat efficiency;  // kbit/J
};

inline RunSummary run_summary(const std::vector<EpisodeMetrics>& metrics) {
  RunSummary s;
  s.episodes = static_cast<int>(metrics.size());
  std::vector<double> g, f, e, eta;
  for (const auto& m : metrics) {
    g.push_back(m.discounted_return);
    f.push_back(m.fairness);
    e.push_back(m.energy);
    eta.push_back(m.efficiency);
  }
  s.discounted_return = stat_of(g);
  s.fairness = stat_of(f);
  s.energy = stat_of(e);
  s.efficiency = stat_of(eta);
  return s;
}

inline nlohmann::json to_json(const RunSummary& s) {
  auto st = [](const Stat& x) { return nlohmann::json{{"mean", x.mean}, {"std", x.std}}; };
  return {{"schema", "run_summary v1"},
          {"episodes", s.episodes},
          {"return", st(s.discounted_return)},
          {"fairness", st(s.fairness)},
          {"energy_j", st(s.energy)},
          {"efficiency_kbit_per_j", st(s.efficiency)}};
}

inline RunSummary summary_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "run_summary v1") throw IoError("summary: unexpected schema");
  auto st = [](const nlohmann::json& x) { return Stat{x.at("mean").get<double>(), x.at("std").get<double>()}; };
  RunSummary s;
  s.episodes = j.at("episodes").get<int>();
  s.discounted_return = st(j.at("return"));
  s.fairness = st(j.at("fairness"));
  s.energy = st(j.at("energy_j"));
  s.efficiency = st(j.at("efficiency_kbit_per_j"));
  return s;
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest text that parses back to the same double.
inline std::string num(double x) { return fmt::format("{}", x); }

struct CsvTable {
  std::string schema;  // e.g. "episode_metrics v1"
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError(schema + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }

  double number(std::size_t row, const std::string& name) const {
    const std::string& cell = rows.at(row).at(column(name));
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
      return v;
    } catch (const std::exception&) {
      throw IoError(schema + ": row " + std::to_string(row) + " column " + name + " is not a number: '" + cell + "'");
    }
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# schema:", 0) == 0) {
      t.schema = line.substr(9);
      t.schema.erase(0, t.schema.find_first_not_of(' '));
      continue;
    }
    if (line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
    } else {
      if (cells.size() != t.header.size()) {
        throw IoError("csv: row " + std::to_string(t.rows.size()) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(t.header.size()));
      }
      t.rows.push_back(std::move(cells));
    }
  }
  if (!have_header) throw IoError("csv: no header row");
  return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_csv(in);
}

/// Append-only CSV file: schema line and header are written on open.
class CsvWriter {
 public:
  CsvWriter() = default;
  CsvWriter(const std::filesystem::path& path, const std::string& schema, const std::vector<std::string>& header)
      : out_(std::make_unique<std::ofstream>(path, std::ios::trunc)) {
    if (!*out_) throw IoError("cannot write " + path.string());
    *out_ << "# schema: " << schema << "\n";
    write_row(header);
  }

  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) *out_ << (i ? "," : "") << cells[i];
    *out_ << "\n";
    out_->flush();
    if (!*out_) throw IoError("csv write failed");
  }

  bool is_open() const { return out_ != nullptr; }

 private:
  std::unique_ptr<std::ofstream> out_;
};

inline const std::vector<std::string>& episode_header() {
  static const std::vector<std::string> h{"episode", "return", "reward_sum", "fairness", "energy_j",
                                          "efficiency_kbit_per_j", "collisions", "steps"};
  return h;
}

inline std::vector<std::string> episode_row(const EpisodeMetrics& m) {
  return {std::to_string(m.episode), num(m.discounted_return), num(m.reward_sum), num(m.fairness), num(m.energy),
          num(m.efficiency), std::to_string(m.collisions), std::to_string(m.steps)};
}

inline const std::vector<std::string>& update_header() {
  static const std::vector<std::string> h{"update", "minibatches", "first_mean_ratio", "first_clip_fraction",
                                          "mean_ratio", "clip_fraction", "actor_loss", "critic_loss",
                                          "entropy", "actor_grad_norm", "critic_grad_norm"};
  return h;
}

inline std::vector<std::string> update_row(const UpdateStats& u) {
  return {std::to_string(u.update), std::to_string(u.minibatches), num(u.first_mean_ratio),
          num(u.first_clip_fraction), num(u.mean_ratio), num(u.clip_fraction), num(u.actor_loss),
          num(u.critic_loss), num(u.entropy), num(u.actor_grad_norm), num(u.critic_grad_norm)};
}

inline void write_episode_csv(const std::filesystem::path& path, const std::vector<EpisodeMetrics>& rows,
                              const std::string& schema = "episode_metrics v1") {
  CsvWriter w(path, schema, episode_header());
  for (const auto& m : rows) w.write_row(episode_row(m));
}

inline std::vector<EpisodeMetrics> read_episode_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  std::vector<EpisodeMetrics> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EpisodeMetrics m;
    m.episode = static_cast<int>(t.number(i, "episode"));
    m.discounted_return = t.number(i, "return");
    m.reward_sum = t.number(i, "reward_sum");
    m.fairness = t.number(i, "fairness");
    m.energy = t.number(i, "energy_j");
    m.efficiency = t.number(i, "efficiency_kbit_per_j");
    m.collisions = static_cast<int>(t.number(i, "collisions"));
    m.steps = static_cast<int>(t.number(i, "steps"));
    out.push_back(m);
  }
  return out;
}

inline void write_cdf_csv(const std::filesystem::path& path, const std::vector<std::pair<double, double>>& pts,
                          const std::string& quantity) {
  CsvWriter w(path, "cdf v1", {quantity, "fraction"});
  for (const auto& [x, f] : pts) w.write_row({num(x), num(f)});
}

// ---------------------------------------------------------------------------
// JSON

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

/// 3D polyline per UAV for one episode.
struct Trajectory {
  std::vector<std::vector<Eigen::Vector3d>> uavs;
  std::vector<Eigen::Vector2d> users_start;
  std::vector<ObstructedRegion> regions;
};

inline nlohmann::json to_json(const Trajectory& t) {
  nlohmann::json j;
  j["schema"] = "trajectory v1";
  nlohmann::json uavs = nlohmann::json::array();
  for (const auto& line : t.uavs) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : line) pts.push_back({p.x(), p.y(), p.z()});
    uavs.push_back(pts);
  }
  j["uavs"] = uavs;
  nlohmann::json users = nlohmann::json::array();
  for (const auto& u : t.users_start) users.push_back({u.x(), u.y()});
  j["users_start"] = users;
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& r : t.regions) regions.push_back({{"center", {r.center.x(), r.center.y()}}, {"half_extent", r.half_extent}});
  j["regions"] = regions;
  return j;
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "trajectory v1") throw IoError("trajectory: unexpected schema");
  Trajectory t;
  for (const auto& line : j.at("uavs")) {
    std::vector<Eigen::Vector3d> pts;
    for (const auto& p : line) pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    t.uavs.push_back(std::move(pts));
  }
  for (const auto& u : j.at("users_start")) t.users_start.emplace_back(u.at(0).get<double>(), u.at(1).get<double>());
  for (const auto& r : j.at("regions")) {
    ObstructedRegion reg;
    reg.center = {r.at("center").at(0).get<double>(), r.at("center").at(1).get<double>()};
    reg.half_extent = r.at("half_extent").get<double>();
    t.regions.push_back(reg);
  }
  return t;
}

/// Rows of a T sweep: horizon and mean energy efficiency over evaluation episodes.
struct SweepRow {
  int horizon = 0;
  double efficiency = 0.0;  // kbit/J
  double efficiency_std = 0.0;
  double fairness = 0.0;
  double energy = 0.0;
};

inline void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  CsvWriter w(path, "sweep_t v1", {"horizon", "efficiency_kbit_per_j", "efficiency_std", "fairness", "energy_j"});
  for (const auto& r : rows) {
    w.write_row({std::to_string(r.horizon), num(r.efficiency), num(r.efficiency_std), num(r.fairness), num(r.energy)});
  }
}

inline std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  std::vector<SweepRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out.push_back({static_cast<int>(t.number(i, "horizon")), t.number(i, "efficiency_kbit_per_j"),
                   t.number(i, "efficiency_std"), t.number(i, "fairness"), t.number(i, "energy_j")});
  }
  return out;
}

}  // namespace uavswarm

#endif  // UAVSWARM_METRICS_IO_HPP
