#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tschsim/mac.hpp"
#include "tschsim/radio.hpp"
#include "tschsim/rpl.hpp"
#include "tschsim/traffic.hpp"

namespace tschsim {

/// Everything that defines one run. Defaults reproduce the study point
/// N = 50, D = 2 km, C = 8, Pt = 14 dBm, T = 101, Q = 10, R = 2, t = 60 s.
struct ScenarioConfig {
  std::uint32_t nodeCount = 50;  // excluding the root
  double areaSideKm = 2.0;
  RadioConfig radio;
  MacConfig mac;
  TrafficConfig traffic;
  RplParams rpl;
  double simHorizonS = 3600.0;  // measured time after warm-up
  double warmupMaxS = 3600.0;
  std::uint64_t masterSeed = 1;
  std::uint32_t repetitions = 5;
  /// Fixed positions for nodes 1..N in metres; empty means uniform placement.
  std::vector<Position> fixedPositions;

  double area_side_m() const { return areaSideKm * 1000.0; }

  /// Throws std::invalid_argument on the first violated invariant.
  void validate() const;

  bool operator==(const ScenarioConfig& other) const;
};

struct ConfigDiagnostic {
  std::string key;
  int line = 0;  // 1-based; 0 when not tied to a line
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigDiagnostic> diagnostics);
  const std::vector<ConfigDiagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<ConfigDiagnostic> diagnostics_;
};

/// Parses the flat `key = value` format. '#' starts a comment. Unknown keys,
/// duplicate keys, malformed values and range violations are all reported;
/// keys that are absent keep their defaults.
ScenarioConfig parse_config(std::string_view text);

/// Applies one key. Throws ConfigError naming the key on a bad value.
void apply_setting(ScenarioConfig& cfg, std::string_view key, std::string_view value);

/// Current value of a key in canonical text form.
std::string get_setting(const ScenarioConfig& cfg, std::string_view key);

/// Keys in canonical order: the required keys first, then optional ones.
std::span<const std::string_view> config_keys();
bool is_config_key(std::string_view key);

/// Canonical text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& cfg);

/// FNV-1a 64 of the canonical text.
std::uint64_t config_hash(const ScenarioConfig& cfg);

std::string format_double(double v);

}  // namespace tschsim
