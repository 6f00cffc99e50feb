#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tschsim/sweep.hpp"

namespace tschsim {

/// Plot-ready series definition: y against the node count, one series per
/// combination of the two grouping keys, with one key held fixed.
struct FigureSpec {
  std::string_view id;
  std::string_view metric;  // a metric column, e.g. per_total
  std::string_view fixedKey;
  std::string_view fixedValue;
  std::string_view seriesKeyA;
  std::vector<std::string_view> seriesValuesA;
  std::string_view seriesKeyB;
  std::vector<std::string_view> seriesValuesB;
};

std::span<const FigureSpec> figure_specs();
const FigureSpec* find_figure(std::string_view id);

/// Default node counts for figure sweeps.
std::vector<std::uint32_t> default_node_counts();

struct FigurePoint {
  std::string series;  // e.g. "Q=10,T=101"
  std::string valueA;
  std::string valueB;
  std::uint32_t nodes = 0;
  Summary y;  // y.n == 0 marks a gap
};

/// Axes covering the figure: nodes x series A x series B, fixed key pinned.
SweepSpec figure_sweep(const FigureSpec& fig, const ScenarioConfig& base,
                       const std::vector<std::uint32_t>& nodeCounts);

/// Groups successful runs of a result set into the figure's series. Every
/// (series, N) that the set or nodeCounts mentions gets a row; points without
/// data are gaps, never interpolated. Throws std::runtime_error when no run
/// contributes a value.
std::vector<FigurePoint> figure_series(const FigureSpec& fig, const SweepResult& result,
                                       const std::vector<std::uint32_t>& nodeCounts = {});

void write_figure_csv(std::ostream& os, const FigureSpec& fig,
                      const std::vector<FigurePoint>& points);

}  // namespace tschsim
