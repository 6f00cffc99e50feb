#include "tschsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "tschsim/simulation.hpp"

#ifndef TSCHSIM_VERSION_STRING
#define TSCHSIM_VERSION_STRING "0.0.0"
#endif

namespace tschsim {

namespace {

using Getter = std::optional<double> (*)(const MetricsReport&);

struct MetricColumn {
  std::string_view name;
  Getter get;
  bool integral;
};

std::optional<double> d(std::uint64_t v) { return static_cast<double>(v); }

const std::vector<MetricColumn>& metric_table() {
  static const std::vector<MetricColumn> table = {
      {"generated", [](const MetricsReport& r) { return d(r.generated); }, true},
      {"delivered", [](const MetricsReport& r) { return d(r.delivered); }, true},
      {"dropped_queue_full", [](const MetricsReport& r) { return d(r.droppedQueueFull); }, true},
      {"dropped_max_retries", [](const MetricsReport& r) { return d(r.droppedMaxRetries); }, true},
      {"dropped_no_route", [](const MetricsReport& r) { return d(r.droppedNoRoute); }, true},
      {"in_flight_at_end", [](const MetricsReport& r) { return d(r.inFlightAtEnd); }, true},
      {"per_total", [](const MetricsReport& r) { return r.perTotal; }, false},
      {"per_queue_full", [](const MetricsReport& r) { return r.perQueueFull; }, false},
      {"per_max_retries", [](const MetricsReport& r) { return r.perMaxRetries; }, false},
      {"per_no_route", [](const MetricsReport& r) { return r.perNoRoute; }, false},
      {"latency_mean_s", [](const MetricsReport& r) { return r.latencyMeanS; }, false},
      {"latency_p50_s", [](const MetricsReport& r) { return r.latencyP50S; }, false},
      {"latency_p99_s", [](const MetricsReport& r) { return r.latencyP99S; }, false},
      {"latency_max_s", [](const MetricsReport& r) { return r.latencyMaxS; }, false},
      {"max_tree_depth", [](const MetricsReport& r) { return d(r.maxTreeDepth); }, true},
      {"warmup_end_asn", [](const MetricsReport& r) { return d(r.warmupEndAsn.value); }, true},
      {"latency_floor_violations",
       [](const MetricsReport& r) { return d(r.latencyFloorViolations); }, true},
      {"cell_saturation_events",
       [](const MetricsReport& r) { return d(r.cellSaturationEvents); }, true},
  };
  return table;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string format_metric(const std::optional<double>& v, bool integral) {
  if (!v) return "NA";
  if (integral) return std::to_string(static_cast<std::uint64_t>(*v));
  return format_double(*v);
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error("runs.csv: bad integer '" + s + "'");
  }
  return v;
}

std::optional<double> parse_metric(const std::string& s) {
  if (s == "NA") return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error("runs.csv: bad number '" + s + "'");
  }
  return v;
}

void set_metric(MetricsReport& r, std::string_view column, const std::optional<double>& v) {
  const auto u = [&] { return v ? static_cast<std::uint64_t>(*v) : 0; };
  if (column == "generated") r.generated = u();
  else if (column == "delivered") r.delivered = u();
  else if (column == "dropped_queue_full") r.droppedQueueFull = u();
  else if (column == "dropped_max_retries") r.droppedMaxRetries = u();
  else if (column == "dropped_no_route") r.droppedNoRoute = u();
  else if (column == "in_flight_at_end") r.inFlightAtEnd = u();
  else if (column == "per_total") r.perTotal = v;
  else if (column == "per_queue_full") r.perQueueFull = v;
  else if (column == "per_max_retries") r.perMaxRetries = v;
  else if (column == "per_no_route") r.perNoRoute = v;
  else if (column == "latency_mean_s") r.latencyMeanS = v;
  else if (column == "latency_p50_s") r.latencyP50S = v;
  else if (column == "latency_p99_s") r.latencyP99S = v;
  else if (column == "latency_max_s") r.latencyMaxS = v;
  else if (column == "max_tree_depth") r.maxTreeDepth = static_cast<std::uint32_t>(u());
  else if (column == "warmup_end_asn") r.warmupEndAsn = Asn{u()};
  else if (column == "latency_floor_violations") r.latencyFloorViolations = u();
  else if (column == "cell_saturation_events") r.cellSaturationEvents = u();
}

nlohmann::ordered_json config_json(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::string_view key : config_keys()) j[std::string(key)] = get_setting(cfg, key);
  return j;
}

}  // namespace

bool SweepResult::all_ok() const {
  return std::all_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.ok; });
}

std::vector<ScenarioConfig> expand_grid(const SweepSpec& spec) {
  std::vector<ScenarioConfig> points{spec.base};
  for (const SweepAxis& axis : spec.axes) {
    if (axis.values.empty()) {
      throw ConfigError({{axis.key, 0, "sweep axis has no values"}});
    }
    std::vector<ScenarioConfig> next;
    next.reserve(points.size() * axis.values.size());
    for (const ScenarioConfig& p : points) {
      for (const std::string& v : axis.values) {
        ScenarioConfig c = p;
        apply_setting(c, axis.key, v);
        next.push_back(std::move(c));
      }
    }
    points = std::move(next);
  }
  for (const ScenarioConfig& p : points) {
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError({{"", 0, e.what()}});
    }
  }
  return points;
}

ScenarioConfig repetition_config(const ScenarioConfig& point, std::uint32_t repetition) {
  ScenarioConfig c = point;
  c.masterSeed = point.masterSeed + repetition;
  return c;
}

RunRecord execute_run(const ScenarioConfig& cfg, std::size_t point, std::uint32_t repetition) {
  RunRecord rec;
  rec.point = point;
  rec.repetition = repetition;
  rec.config = cfg;
  try {
    rec.report = run_scenario(cfg);
    rec.ok = true;
  } catch (const DisconnectedError& e) {
    rec.error = std::string("disconnected: ") + e.what();
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  if (!rec.ok) {
    rec.report = MetricsReport{};
    rec.report.configHash = config_hash(cfg);
    rec.report.masterSeed = cfg.masterSeed;
  }
  return rec;
}

SweepResult run_sweep(const SweepSpec& spec, const RunCallback& onRunDone) {
  SweepResult result;
  result.points = expand_grid(spec);

  std::vector<std::pair<std::size_t, std::uint32_t>> jobs;
  for (std::size_t p = 0; p < result.points.size(); ++p) {
    for (std::uint32_t r = 0; r < result.points[p].repetitions; ++r) jobs.emplace_back(p, r);
  }
  result.runs.resize(jobs.size());

  unsigned workers = spec.parallelism == 0 ? std::thread::hardware_concurrency() : spec.parallelism;
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(std::max<std::size_t>(jobs.size(), 1)));

  std::atomic<std::size_t> next{0};
  std::mutex callbackMutex;
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto [p, r] = jobs[i];
      result.runs[i] = execute_run(repetition_config(result.points[p], r), p, r);
      if (onRunDone) {
        std::lock_guard lock(callbackMutex);
        onRunDone(result.runs[i]);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return result;
}

std::string_view library_version() { return TSCHSIM_VERSION_STRING; }

const std::vector<std::string_view>& metric_columns() {
  static const std::vector<std::string_view> names = [] {
    std::vector<std::string_view> out;
    for (const auto& m : metric_table()) out.push_back(m.name);
    return out;
  }();
  return names;
}

std::optional<double> metric_value(const MetricsReport& r, std::string_view column) {
  for (const auto& m : metric_table()) {
    if (m.name == column) return m.get(r);
  }
  throw std::invalid_argument("unknown metric column: " + std::string(column));
}

void write_runs_csv(std::ostream& os, const SweepResult& result) {
  os << "run,point,repetition";
  for (std::string_view key : config_keys()) os << ',' << key;
  os << ",status,error,config_hash";
  for (const auto& m : metric_table()) os << ',' << m.name;
  os << '\n';
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    const RunRecord& run = result.runs[i];
    os << i << ',' << run.point << ',' << run.repetition;
    for (std::string_view key : config_keys()) os << ',' << csv_field(get_setting(run.config, key));
    os << ',' << (run.ok ? "ok" : "failed") << ',' << csv_field(run.error) << ','
       << run.report.configHash;
    for (const auto& m : metric_table()) {
      os << ',' << (run.ok ? format_metric(m.get(run.report), m.integral) : "NA");
    }
    os << '\n';
  }
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.mean = mean;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

void write_aggregate_csv(std::ostream& os, const SweepResult& result) {
  os << "point";
  for (std::string_view key : config_keys()) {
    if (key != "seed") os << ',' << key;
  }
  os << ",runs,ok_runs";
  for (const auto& m : metric_table()) os << ',' << m.name << "_mean," << m.name << "_std";
  os << '\n';

  std::vector<std::vector<const RunRecord*>> byPoint(result.points.size());
  for (const RunRecord& run : result.runs) byPoint.at(run.point).push_back(&run);

  for (std::size_t p = 0; p < result.points.size(); ++p) {
    os << p;
    for (std::string_view key : config_keys()) {
      if (key != "seed") os << ',' << csv_field(get_setting(result.points[p], key));
    }
    const auto okRuns = std::count_if(byPoint[p].begin(), byPoint[p].end(),
                                      [](const RunRecord* r) { return r->ok; });
    os << ',' << byPoint[p].size() << ',' << okRuns;
    for (const auto& m : metric_table()) {
      std::vector<double> values;
      for (const RunRecord* r : byPoint[p]) {
        if (!r->ok) continue;
        if (auto v = m.get(r->report)) values.push_back(*v);
      }
      const Summary s = summarize(values);
      os << ',' << format_metric(s.mean, false) << ',' << format_metric(s.stddev, false);
    }
    os << '\n';
  }
}

void write_manifest(std::ostream& os, const SweepSpec& spec, const SweepResult& result) {
  nlohmann::ordered_json j;
  j["tool"] = "tschsim";
  j["version"] = std::string(library_version());
  j["base_config"] = config_json(spec.base);
  nlohmann::ordered_json axes = nlohmann::ordered_json::array();
  for (const SweepAxis& a : spec.axes) axes.push_back({{"key", a.key}, {"values", a.values}});
  j["axes"] = axes;
  j["grid_points"] = result.points.size();
  j["artifacts"] = {"runs.csv", "aggregate.csv"};
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    const RunRecord& r = result.runs[i];
    nlohmann::ordered_json row;
    row["run"] = i;
    row["point"] = r.point;
    row["repetition"] = r.repetition;
    row["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) row["error"] = r.error;
    row["config_hash"] = r.report.configHash;
    row["config"] = config_json(r.config);
    runs.push_back(std::move(row));
  }
  j["runs"] = std::move(runs);
  os << j.dump(2) << '\n';
}

void write_sweep_outputs(const SweepSpec& spec, const SweepResult& result) {
  std::filesystem::create_directories(spec.outputDir);
  const auto open = [&](const char* name) {
    std::ofstream f(spec.outputDir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (spec.outputDir / name).string());
    return f;
  };
  {
    auto f = open("runs.csv");
    write_runs_csv(f, result);
  }
  {
    auto f = open("aggregate.csv");
    write_aggregate_csv(f, result);
  }
  {
    auto f = open("manifest.json");
    write_manifest(f, spec, result);
  }
}

SweepResult read_runs_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("runs.csv: empty file");
  const std::vector<std::string> header = parse_csv_line(line);
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* required : {"point", "repetition", "status", "error"}) {
    if (!col.contains(required)) {
      throw std::runtime_error(std::string("runs.csv: missing column ") + required);
    }
  }

  SweepResult result;
  std::map<std::size_t, ScenarioConfig> points;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = parse_csv_line(line);
    if (f.size() != header.size()) throw std::runtime_error("runs.csv: ragged row");
    RunRecord r;
    r.point = parse_u64(f[col.at("point")]);
    r.repetition = static_cast<std::uint32_t>(parse_u64(f[col.at("repetition")]));
    for (std::string_view key : config_keys()) {
      auto it = col.find(key);
      if (it != col.end()) apply_setting(r.config, key, f[it->second]);
    }
    r.ok = f[col.at("status")] == "ok";
    r.error = f[col.at("error")];
    for (const auto& m : metric_table()) {
      auto it = col.find(m.name);
      if (it != col.end()) set_metric(r.report, m.name, parse_metric(f[it->second]));
    }
    if (auto it = col.find("config_hash"); it != col.end()) {
      r.report.configHash = parse_u64(f[it->second]);
    }
    r.report.masterSeed = r.config.masterSeed;
    if (!points.contains(r.point)) {
      ScenarioConfig p = r.config;
      p.masterSeed -= r.repetition;
      points.emplace(r.point, p);
    }
    result.runs.push_back(std::move(r));
  }
  for (auto& [index, cfg] : points) {
    if (index != result.points.size()) throw std::runtime_error("runs.csv: grid points not contiguous");
    result.points.push_back(cfg);
  }
  return result;
}

}  // namespace tschsim
