#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tschsim/config.hpp"
#include "tschsim/metrics.hpp"

namespace tschsim {

/// One swept key and the values it takes, in config-file syntax.
struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

struct SweepSpec {
  ScenarioConfig base;
  std::vector<SweepAxis> axes;  // the first axis varies slowest
  std::filesystem::path outputDir;
  unsigned parallelism = 1;  // 0 means one worker per hardware thread
};

struct RunRecord {
  std::size_t point = 0;        // grid point index
  std::uint32_t repetition = 0;  // seed index within the point
  ScenarioConfig config;         // exact config of this run, seed included
  bool ok = false;
  std::string error;
  MetricsReport report;
};

struct SweepResult {
  std::vector<ScenarioConfig> points;  // grid points with the base seed
  std::vector<RunRecord> runs;         // point-major, repetition-minor
  bool all_ok() const;
};

/// Cross product of the axes applied to the base config. Throws ConfigError
/// when a value is invalid for its key.
std::vector<ScenarioConfig> expand_grid(const SweepSpec& spec);

/// Seed of repetition i at a grid point: masterSeed + i.
ScenarioConfig repetition_config(const ScenarioConfig& point, std::uint32_t repetition);

/// Runs every (point, repetition). A failed run is recorded and the sweep goes
/// on. Records are returned in index order whatever the parallelism.
using RunCallback = std::function<void(const RunRecord&)>;
SweepResult run_sweep(const SweepSpec& spec, const RunCallback& onRunDone = {});

/// Runs one config and captures any error into the record.
RunRecord execute_run(const ScenarioConfig& cfg, std::size_t point, std::uint32_t repetition);

// --- persistence ---

/// Version string recorded in manifests.
std::string_view library_version();

/// Report columns in CSV order.
const std::vector<std::string_view>& metric_columns();
std::optional<double> metric_value(const MetricsReport& r, std::string_view column);

void write_runs_csv(std::ostream& os, const SweepResult& result);
void write_aggregate_csv(std::ostream& os, const SweepResult& result);
void write_manifest(std::ostream& os, const SweepSpec& spec, const SweepResult& result);

/// Writes runs.csv, aggregate.csv and manifest.json into spec.outputDir.
void write_sweep_outputs(const SweepSpec& spec, const SweepResult& result);

/// Reads a runs.csv back into records. Configs are rebuilt from the config
/// columns, so every run can be replayed.
SweepResult read_runs_csv(std::istream& is);

/// Sample mean and standard deviation (n - 1); std is empty for n < 2.
struct Summary {
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<double> stddev;
};
Summary summarize(const std::vector<double>& values);

}  // namespace tschsim
