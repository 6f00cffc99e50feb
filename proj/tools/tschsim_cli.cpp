// tschsim: run one scenario, sweep a grid, or emit figure data.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tschsim/config.hpp"
#include "tschsim/figures.hpp"
#include "tschsim/simulation.hpp"
#include "tschsim/sweep.hpp"

namespace fs = std::filesystem;
using namespace tschsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitConfigError = 2;

struct ConfigOptions {
  std::string file;
  std::map<std::string, std::string> overrides;
};

void add_config_options(CLI::App& cmd, ConfigOptions& opts) {
  cmd.add_option("-c,--config", opts.file, "Config file (key = value)")->check(CLI::ExistingFile);
  for (std::string_view key : config_keys()) {
    const std::string name(key);
    cmd.add_option_function<std::string>(
           "--" + name, [&opts, name](const std::string& v) { opts.overrides[name] = v; },
           "Override config key " + name)
        ->type_name("VALUE");
  }
}

ScenarioConfig load_config(const ConfigOptions& opts) {
  ScenarioConfig cfg;
  if (!opts.file.empty()) {
    std::ifstream in(opts.file);
    if (!in) throw ConfigError({{"", 0, "cannot read " + opts.file}});
    std::stringstream text;
    text << in.rdbuf();
    cfg = parse_config(text.str());
  }
  for (std::string_view key : config_keys()) {
    auto it = opts.overrides.find(std::string(key));
    if (it != opts.overrides.end()) apply_setting(cfg, key, it->second);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError({{"", 0, e.what()}});
  }
  return cfg;
}

void print_diagnostics(const ConfigError& e, const std::string& file) {
  for (const ConfigDiagnostic& d : e.diagnostics()) {
    std::cerr << "config error";
    if (d.line > 0) std::cerr << " at " << (file.empty() ? "<input>" : file) << ':' << d.line;
    if (!d.key.empty()) std::cerr << " [" << d.key << ']';
    std::cerr << ": " << d.message << '\n';
  }
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

void log_config(std::ostream& os, const ScenarioConfig& cfg) {
  os << "nodes " << cfg.nodeCount << ", area " << format_double(cfg.areaSideKm) << " km, "
     << "channels " << cfg.mac.channel_count() << ", Q " << cfg.mac.queueCapacity << ", R "
     << cfg.mac.maxRetries << ", seed " << cfg.masterSeed << '\n';
  os << "slotframe " << cfg.mac.slotframeLength << " slots x "
     << format_double(slots_to_seconds(1, cfg.mac.slotDuration)) << " s = "
     << format_double(cfg.mac.slotframe_seconds()) << " s\n";
}

void log_report(std::ostream& os, const MetricsReport& r, SlotDuration slot) {
  os << "warm-up ended at asn " << r.warmupEndAsn.value << " ("
     << format_double(asn_to_seconds(r.warmupEndAsn, slot)) << " s)\n";
  os << "generated " << r.generated << ", delivered " << r.delivered << ", queue full "
     << r.droppedQueueFull << ", max retries " << r.droppedMaxRetries << ", no route "
     << r.droppedNoRoute << ", in flight " << r.inFlightAtEnd << '\n';
  os << "per " << opt(r.perTotal) << " (queue full " << opt(r.perQueueFull) << ", max retries "
     << opt(r.perMaxRetries) << ", no route " << opt(r.perNoRoute) << ")\n";
  os << "latency mean " << opt(r.latencyMeanS) << " s, p50 " << opt(r.latencyP50S) << " s, p99 "
     << opt(r.latencyP99S) << " s, max " << opt(r.latencyMaxS) << " s\n";
  os << "max tree depth " << r.maxTreeDepth << ", cell saturation events "
     << r.cellSaturationEvents << ", config hash " << r.configHash << '\n';
}

std::vector<SweepAxis> parse_grid(const std::vector<std::string>& items) {
  std::vector<SweepAxis> axes;
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError({{item, 0, "grid axis must look like key=v1,v2,..."}});
    }
    SweepAxis axis{item.substr(0, eq), {}};
    if (!is_config_key(axis.key)) throw ConfigError({{axis.key, 0, "unknown key"}});
    std::stringstream values(item.substr(eq + 1));
    for (std::string v; std::getline(values, v, ',');) {
      if (!v.empty()) axis.values.push_back(v);
    }
    axes.push_back(std::move(axis));
  }
  return axes;
}

int finish_sweep(const SweepSpec& spec, const SweepResult& result) {
  write_sweep_outputs(spec, result);
  std::size_t failed = 0;
  for (const RunRecord& r : result.runs) failed += r.ok ? 0 : 1;
  std::cout << result.runs.size() << " runs over " << result.points.size() << " grid points, "
            << failed << " failed; outputs in " << spec.outputDir.string() << '\n';
  return failed == 0 ? kExitOk : kExitRunFailure;
}

void report_progress(const RunRecord& r) {
  std::cerr << "  point " << r.point << " rep " << r.repetition << " seed "
            << r.config.masterSeed << ": " << (r.ok ? "ok" : r.error) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event 6TiSCH network simulator"};
  app.require_subcommand(1);

  ConfigOptions runOpts, sweepOpts, figOpts;
  std::string runOut;
  auto* run = app.add_subcommand("run", "Simulate one scenario");
  add_config_options(*run, runOpts);
  run->add_option("-o,--out", runOut, "Write runs.csv, aggregate.csv and manifest.json here");

  std::vector<std::string> grid;
  std::string sweepOut = "results";
  unsigned sweepJobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run a grid of scenarios over repetition seeds");
  add_config_options(*sweep, sweepOpts);
  sweep->add_option("-g,--grid", grid, "Swept key, e.g. nodes=10,30,50 (repeatable)");
  sweep->add_option("-o,--out", sweepOut, "Output directory");
  sweep->add_option("-j,--jobs", sweepJobs, "Parallel runs (0 = hardware threads)");

  std::vector<std::string> figureIds;
  std::vector<std::uint32_t> figureNodes;
  std::string figureFrom, figureOut = "figures";
  unsigned figureJobs = 1;
  auto* figure = app.add_subcommand("figure", "Emit plot-ready CSV for a figure");
  add_config_options(*figure, figOpts);
  std::string idHelp = "Figure id:";
  for (const FigureSpec& f : figure_specs()) idHelp += " " + std::string(f.id);
  figure->add_option("-i,--id", figureIds, idHelp)->required();
  figure->add_option("-n,--node-counts", figureNodes, "Node counts on the x axis")->delimiter(',');
  figure->add_option("--from", figureFrom, "Reuse runs.csv from an earlier sweep directory");
  figure->add_option("-o,--out", figureOut, "Output directory");
  figure->add_option("-j,--jobs", figureJobs, "Parallel runs (0 = hardware threads)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  const ConfigOptions& opts = run->parsed() ? runOpts : sweep->parsed() ? sweepOpts : figOpts;
  ScenarioConfig cfg;
  std::vector<SweepAxis> axes;
  std::vector<const FigureSpec*> figs;
  try {
    cfg = load_config(opts);
    if (sweep->parsed()) axes = parse_grid(grid);
    for (const std::string& id : figureIds) {
      const FigureSpec* f = find_figure(id);
      if (!f) throw ConfigError({{"id", 0, "unknown figure '" + id + "'"}});
      figs.push_back(f);
    }
  } catch (const ConfigError& e) {
    print_diagnostics(e, opts.file);
    return kExitConfigError;
  }

  try {
    if (run->parsed()) {
      log_config(std::cout, cfg);
      RunRecord rec = execute_run(cfg, 0, 0);
      if (rec.ok) log_report(std::cout, rec.report, cfg.mac.slotDuration);
      if (!runOut.empty()) {
        SweepSpec spec{cfg, {}, runOut, 1};
        SweepResult result{{cfg}, {rec}};
        write_sweep_outputs(spec, result);
      }
      if (!rec.ok) {
        std::cerr << "run failed: " << rec.error << '\n';
        return kExitRunFailure;
      }
      return kExitOk;
    }

    if (sweep->parsed()) {
      SweepSpec spec{cfg, axes, sweepOut, sweepJobs};
      log_config(std::cout, cfg);
      SweepResult result = run_sweep(spec, report_progress);
      return finish_sweep(spec, result);
    }

    // figure
    const std::vector<std::uint32_t> nodes =
        figureNodes.empty() ? default_node_counts() : figureNodes;
    int status = kExitOk;
    SweepResult fromDisk;
    if (!figureFrom.empty()) {
      std::ifstream in(fs::path(figureFrom) / "runs.csv");
      if (!in) {
        std::cerr << "cannot read " << (fs::path(figureFrom) / "runs.csv").string() << '\n';
        return kExitRunFailure;
      }
      fromDisk = read_runs_csv(in);
    }
    for (const FigureSpec* f : figs) {
      SweepResult result;
      if (!figureFrom.empty()) {
        result = fromDisk;
      } else {
        SweepSpec spec = figure_sweep(*f, cfg, nodes);
        spec.outputDir = fs::path(figureOut) / std::string(f->id);
        spec.parallelism = figureJobs;
        result = run_sweep(spec, report_progress);
        if (finish_sweep(spec, result) != kExitOk) status = kExitRunFailure;
      }
      std::vector<FigurePoint> points;
      try {
        points = figure_series(*f, result, figureFrom.empty() ? nodes : std::vector<std::uint32_t>{});
      } catch (const std::runtime_error& e) {
        std::cerr << e.what() << '\n';
        status = kExitRunFailure;
        continue;
      }
      fs::create_directories(figureOut);
      const fs::path path = fs::path(figureOut) / (std::string(f->id) + ".csv");
      std::ofstream out(path, std::ios::binary);
      write_figure_csv(out, *f, points);
      std::cout << "wrote " << path.string() << '\n';
    }
    return status;
  } catch (const ConfigError& e) {
    print_diagnostics(e, opts.file);
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunFailure;
  }
}
