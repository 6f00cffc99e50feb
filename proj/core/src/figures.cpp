#include "tschsim/figures.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

namespace tschsim {

namespace {

std::string_view symbol(std::string_view key) {
  if (key == "queue_size") return "Q";
  if (key == "max_retries") return "R";
  if (key == "slotframe_len") return "T";
  return key;
}

std::string na(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

std::span<const FigureSpec> figure_specs() {
  static const std::vector<FigureSpec> specs = {
      {"per_vs_n_r2", "per_total", "max_retries", "2",
       "queue_size", {"10", "2000"}, "slotframe_len", {"101", "606"}},
      {"per_vs_n_r200", "per_total", "max_retries", "200",
       "queue_size", {"10", "2000"}, "slotframe_len", {"101", "606"}},
      {"per_maxretries_vs_n_r2", "per_max_retries", "max_retries", "2",
       "queue_size", {"10", "2000"}, "slotframe_len", {"101", "606"}},
      {"per_queuefull_vs_n_q10", "per_queue_full", "queue_size", "10",
       "max_retries", {"2", "200"}, "slotframe_len", {"101", "606"}},
      {"latency_vs_n_t101", "latency_mean_s", "slotframe_len", "101",
       "max_retries", {"2", "200"}, "queue_size", {"10", "2000"}},
      {"latency_vs_n_t606", "latency_mean_s", "slotframe_len", "606",
       "max_retries", {"2", "200"}, "queue_size", {"10", "2000"}},
  };
  return specs;
}

const FigureSpec* find_figure(std::string_view id) {
  for (const FigureSpec& f : figure_specs()) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

std::vector<std::uint32_t> default_node_counts() { return {10, 25, 50, 100, 150, 200}; }

SweepSpec figure_sweep(const FigureSpec& fig, const ScenarioConfig& base,
                       const std::vector<std::uint32_t>& nodeCounts) {
  SweepSpec spec;
  spec.base = base;
  apply_setting(spec.base, fig.fixedKey, fig.fixedValue);
  SweepAxis nodes{"nodes", {}};
  for (std::uint32_t n : nodeCounts) nodes.values.push_back(std::to_string(n));
  spec.axes.push_back(std::move(nodes));
  spec.axes.push_back({std::string(fig.seriesKeyA),
                       {fig.seriesValuesA.begin(), fig.seriesValuesA.end()}});
  spec.axes.push_back({std::string(fig.seriesKeyB),
                       {fig.seriesValuesB.begin(), fig.seriesValuesB.end()}});
  return spec;
}

std::vector<FigurePoint> figure_series(const FigureSpec& fig, const SweepResult& result,
                                       const std::vector<std::uint32_t>& nodeCounts) {
  using Key = std::tuple<std::string, std::string, std::uint32_t>;
  std::map<Key, std::vector<double>> values;
  std::set<std::uint32_t> nodes(nodeCounts.begin(), nodeCounts.end());
  const auto inList = [](const std::vector<std::string_view>& list, const std::string& v) {
    return std::find(list.begin(), list.end(), v) != list.end();
  };

  std::size_t contributed = 0;
  for (const RunRecord& run : result.runs) {
    if (get_setting(run.config, fig.fixedKey) != fig.fixedValue) continue;
    const std::string a = get_setting(run.config, fig.seriesKeyA);
    const std::string b = get_setting(run.config, fig.seriesKeyB);
    if (!inList(fig.seriesValuesA, a) || !inList(fig.seriesValuesB, b)) continue;
    nodes.insert(run.config.nodeCount);
    auto& bucket = values[{a, b, run.config.nodeCount}];
    if (!run.ok) continue;
    if (auto y = metric_value(run.report, fig.metric)) {
      bucket.push_back(*y);
      ++contributed;
    }
  }
  if (contributed == 0) {
    throw std::runtime_error("figure " + std::string(fig.id) + ": no run in the result set contributes data");
  }

  std::vector<FigurePoint> out;
  for (std::string_view a : fig.seriesValuesA) {
    for (std::string_view b : fig.seriesValuesB) {
      const std::string series = std::string(symbol(fig.seriesKeyA)) + "=" + std::string(a) + "," +
                                 std::string(symbol(fig.seriesKeyB)) + "=" + std::string(b);
      for (std::uint32_t n : nodes) {
        FigurePoint p{series, std::string(a), std::string(b), n, {}};
        if (auto it = values.find({std::string(a), std::string(b), n}); it != values.end()) {
          p.y = summarize(it->second);
        }
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

void write_figure_csv(std::ostream& os, const FigureSpec& fig,
                      const std::vector<FigurePoint>& points) {
  os << "figure,series," << fig.seriesKeyA << ',' << fig.seriesKeyB << ',' << fig.fixedKey
     << ",nodes," << fig.metric << "_mean," << fig.metric << "_std,n\n";
  for (const FigurePoint& p : points) {
    os << fig.id << ',' << '"' << p.series << '"' << ',' << p.valueA << ',' << p.valueB << ','
       << fig.fixedValue << ',' << p.nodes << ',' << na(p.y.mean) << ',' << na(p.y.stddev) << ','
       << p.y.n << '\n';
  }
}

}  // namespace tschsim
