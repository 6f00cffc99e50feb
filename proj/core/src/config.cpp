#include "tschsim/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace tschsim {

namespace {

struct BadValue {
  std::string message;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view v) {
  v = trim(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw BadValue{"expected a number, got '" + std::string(v) + "'"};
  }
  if (!std::isfinite(out)) throw BadValue{"value must be finite"};
  return out;
}

std::uint64_t to_u64(std::string_view v) {
  v = trim(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw BadValue{"expected a non-negative integer, got '" + std::string(v) + "'"};
  }
  return out;
}

std::uint32_t to_u32(std::string_view v, std::uint32_t min = 0) {
  const std::uint64_t x = to_u64(v);
  if (x > std::numeric_limits<std::uint32_t>::max()) throw BadValue{"value out of range"};
  if (x < min) throw BadValue{"must be >= " + std::to_string(min)};
  return static_cast<std::uint32_t>(x);
}

double positive(double x) {
  if (!(x > 0.0)) throw BadValue{"must be > 0"};
  return x;
}

struct KeySpec {
  std::string_view name;
  std::function<void(ScenarioConfig&, std::string_view)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

std::string u(std::uint64_t v) { return std::to_string(v); }

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"nodes", [](auto& c, auto v) { c.nodeCount = to_u32(v, 1); },
       [](const auto& c) { return u(c.nodeCount); }},
      {"area_km", [](auto& c, auto v) { c.areaSideKm = positive(to_double(v)); },
       [](const auto& c) { return format_double(c.areaSideKm); }},
      {"channels",
       [](auto& c, auto v) {
         c.radio.channelCount = to_u32(v, 1);
         c.mac.hoppingSequence.resize(c.radio.channelCount);
         std::iota(c.mac.hoppingSequence.begin(), c.mac.hoppingSequence.end(), 0u);
       },
       [](const auto& c) { return u(c.radio.channelCount); }},
      {"slotframe_len", [](auto& c, auto v) { c.mac.slotframeLength = to_u32(v, 1); },
       [](const auto& c) { return u(c.mac.slotframeLength); }},
      {"slot_duration_s",
       [](auto& c, auto v) {
         const double s = positive(to_double(v));
         if (s < 1e-6) throw BadValue{"must be at least 1e-6 s"};
         c.mac.slotDuration = slot_duration_from_seconds(s);
       },
       [](const auto& c) { return format_double(static_cast<double>(c.mac.slotDuration.count()) / 1e6); }},
      {"queue_size", [](auto& c, auto v) { c.mac.queueCapacity = to_u32(v, 1); },
       [](const auto& c) { return u(c.mac.queueCapacity); }},
      {"max_retries", [](auto& c, auto v) { c.mac.maxRetries = to_u32(v); },
       [](const auto& c) { return u(c.mac.maxRetries); }},
      {"tx_power_dbm", [](auto& c, auto v) { c.radio.ptDbm = to_double(v); },
       [](const auto& c) { return format_double(c.radio.ptDbm); }},
      {"traffic_mean_s", [](auto& c, auto v) { c.traffic.meanInterarrivalS = positive(to_double(v)); },
       [](const auto& c) { return format_double(c.traffic.meanInterarrivalS); }},
      {"sim_horizon_s", [](auto& c, auto v) { c.simHorizonS = positive(to_double(v)); },
       [](const auto& c) { return format_double(c.simHorizonS); }},
      {"warmup_max_s", [](auto& c, auto v) { c.warmupMaxS = positive(to_double(v)); },
       [](const auto& c) { return format_double(c.warmupMaxS); }},
      {"seed", [](auto& c, auto v) { c.masterSeed = to_u64(v); },
       [](const auto& c) { return u(c.masterSeed); }},
      {"repetitions", [](auto& c, auto v) { c.repetitions = to_u32(v, 1); },
       [](const auto& c) { return u(c.repetitions); }},
      // optional keys
      {"center_freq_hz", [](auto& c, auto v) { c.radio.centerFrequencyHz = positive(to_double(v)); },
       [](const auto& c) { return format_double(c.radio.centerFrequencyHz); }},
      {"channel_spacing_hz", [](auto& c, auto v) { c.radio.channelSpacingHz = positive(to_double(v)); },
       [](const auto& c) { return format_double(c.radio.channelSpacingHz); }},
      {"antenna_gain", [](auto& c, auto v) { c.radio.antennaGainProduct = positive(to_double(v)); },
       [](const auto& c) { return format_double(c.radio.antennaGainProduct); }},
      {"sensitivity_dbm", [](auto& c, auto v) { c.radio.sensitivityDbm = to_double(v); },
       [](const auto& c) { return format_double(c.radio.sensitivityDbm); }},
      {"saturation_dbm", [](auto& c, auto v) { c.radio.saturationDbm = to_double(v); },
       [](const auto& c) { return format_double(c.radio.saturationDbm); }},
      {"pister_hack_max_db",
       [](auto& c, auto v) {
         const double x = to_double(v);
         if (x < 0.0) throw BadValue{"must be >= 0"};
         c.radio.pisterHackMaxDb = x;
       },
       [](const auto& c) { return format_double(c.radio.pisterHackMaxDb); }},
      {"min_be", [](auto& c, auto v) { c.mac.minBackoffExponent = to_u32(v); },
       [](const auto& c) { return u(c.mac.minBackoffExponent); }},
      {"max_be", [](auto& c, auto v) { c.mac.maxBackoffExponent = to_u32(v); },
       [](const auto& c) { return u(c.mac.maxBackoffExponent); }},
      {"eb_period_slotframes", [](auto& c, auto v) { c.mac.ebPeriodSlotframes = to_u32(v, 1); },
       [](const auto& c) { return u(c.mac.ebPeriodSlotframes); }},
      {"eb_probability",
       [](auto& c, auto v) {
         const double p = to_double(v);
         if (!(p > 0.0 && p <= 1.0)) throw BadValue{"must lie in (0, 1]"};
         c.mac.ebProbability = p;
       },
       [](const auto& c) { return format_double(c.mac.ebProbability); }},
      {"dio_period_slotframes", [](auto& c, auto v) { c.rpl.dioPeriodSlotframes = to_u32(v, 1); },
       [](const auto& c) { return u(c.rpl.dioPeriodSlotframes); }},
      {"min_hop_rank_increase", [](auto& c, auto v) { c.rpl.minHopRankIncrease = to_u32(v, 1); },
       [](const auto& c) { return u(c.rpl.minHopRankIncrease); }},
      {"max_step_of_rank", [](auto& c, auto v) { c.rpl.maxStepOfRank = to_u32(v, 1); },
       [](const auto& c) { return u(c.rpl.maxStepOfRank); }},
      {"parent_hysteresis",
       [](auto& c, auto v) {
         const double h = to_double(v);
         if (h < 0.0) throw BadValue{"must be >= 0"};
         c.rpl.parentSwitchHysteresis = h;
       },
       [](const auto& c) { return format_double(c.rpl.parentSwitchHysteresis); }},
      {"msf_high_util", [](auto& c, auto v) { c.mac.msfHighUtilization = to_double(v); },
       [](const auto& c) { return format_double(c.mac.msfHighUtilization); }},
      {"msf_low_util", [](auto& c, auto v) { c.mac.msfLowUtilization = to_double(v); },
       [](const auto& c) { return format_double(c.mac.msfLowUtilization); }},
      {"relocation_failures", [](auto& c, auto v) { c.mac.relocationFailures = to_u32(v); },
       [](const auto& c) { return u(c.mac.relocationFailures); }},
      {"hopping_sequence",
       [](auto& c, auto v) {
         std::vector<std::uint32_t> seq;
         for (auto item : split(v, ',')) seq.push_back(to_u32(item));
         c.mac.hoppingSequence = std::move(seq);
       },
       [](const auto& c) {
         std::string s;
         for (std::size_t i = 0; i < c.mac.hoppingSequence.size(); ++i) {
           if (i) s += ',';
           s += u(c.mac.hoppingSequence[i]);
         }
         return s;
       }},
      {"positions",
       [](auto& c, auto v) {
         std::vector<Position> pts;
         if (!trim(v).empty()) {
           for (auto item : split(v, ';')) {
             const auto xy = split(item, ',');
             if (xy.size() != 2) throw BadValue{"expected x,y pairs separated by ';'"};
             pts.push_back(Position{to_double(xy[0]), to_double(xy[1])});
           }
         }
         c.fixedPositions = std::move(pts);
       },
       [](const auto& c) {
         std::string s;
         for (std::size_t i = 0; i < c.fixedPositions.size(); ++i) {
           if (i) s += ';';
           s += format_double(c.fixedPositions[i].x) + "," + format_double(c.fixedPositions[i].y);
         }
         return s;
       }},
  };
  return table;
}

const KeySpec* find_key(std::string_view key) {
  for (const auto& k : key_table()) {
    if (k.name == key) return &k;
  }
  return nullptr;
}

/// Maps a cross-field invariant failure to the key most likely responsible.
std::string blame_key(std::string_view message) {
  if (message.find("hopping") != std::string_view::npos) return "hopping_sequence";
  if (message.find("sensitivity") != std::string_view::npos) return "sensitivity_dbm";
  if (message.find("backoff") != std::string_view::npos) return "min_be";
  if (message.find("msf") != std::string_view::npos) return "msf_low_util";
  if (message.find("position") != std::string_view::npos) return "positions";
  return "";
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void ScenarioConfig::validate() const {
  if (nodeCount < 1) throw std::invalid_argument("node count must be >= 1");
  if (!(areaSideKm > 0.0)) throw std::invalid_argument("area side must be positive");
  if (!(simHorizonS > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (!(warmupMaxS > 0.0)) throw std::invalid_argument("warm-up cap must be positive");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  radio.validate();
  mac.validate();
  traffic.validate();
  rpl.validate();
  if (mac.hoppingSequence.size() != radio.channelCount) {
    throw std::invalid_argument("hopping sequence length must equal the channel count");
  }
  if (!fixedPositions.empty()) {
    if (fixedPositions.size() != nodeCount) {
      throw std::invalid_argument("positions must list exactly one point per node");
    }
    const double side = area_side_m();
    for (const Position& p : fixedPositions) {
      if (p.x < 0.0 || p.y < 0.0 || p.x > side || p.y > side) {
        throw std::invalid_argument("position outside the deployment square");
      }
      if (p == Position{side / 2.0, side / 2.0}) {
        throw std::invalid_argument("position coincides with the root");
      }
    }
  }
}

bool ScenarioConfig::operator==(const ScenarioConfig& other) const {
  return serialize_config(*this) == serialize_config(other);
}

ConfigError::ConfigError(std::vector<ConfigDiagnostic> diagnostics)
    : std::runtime_error([&] {
        std::ostringstream os;
        for (std::size_t i = 0; i < diagnostics.size(); ++i) {
          const auto& d = diagnostics[i];
          if (i) os << "; ";
          if (d.line > 0) os << "line " << d.line << ": ";
          if (!d.key.empty()) os << d.key << ": ";
          os << d.message;
        }
        return os.str();
      }()),
      diagnostics_(std::move(diagnostics)) {}

std::span<const std::string_view> config_keys() {
  static const std::vector<std::string_view> keys = [] {
    std::vector<std::string_view> k;
    for (const auto& spec : key_table()) k.push_back(spec.name);
    return k;
  }();
  return keys;
}

bool is_config_key(std::string_view key) { return find_key(key) != nullptr; }

void apply_setting(ScenarioConfig& cfg, std::string_view key, std::string_view value) {
  const KeySpec* spec = find_key(trim(key));
  if (!spec) throw ConfigError({{std::string(key), 0, "unknown key"}});
  try {
    spec->set(cfg, trim(value));
  } catch (const BadValue& e) {
    throw ConfigError({{std::string(key), 0, e.message}});
  } catch (const std::invalid_argument& e) {
    throw ConfigError({{std::string(key), 0, e.what()}});
  }
}

std::string get_setting(const ScenarioConfig& cfg, std::string_view key) {
  const KeySpec* spec = find_key(key);
  if (!spec) throw ConfigError({{std::string(key), 0, "unknown key"}});
  return spec->get(cfg);
}

ScenarioConfig parse_config(std::string_view text) {
  ScenarioConfig cfg;
  std::vector<ConfigDiagnostic> diags;
  std::set<std::string, std::less<>> seen;
  std::vector<std::pair<std::string, int>> keyLines;
  std::map<std::string, std::pair<std::string, int>, std::less<>> values;

  int lineNo = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++lineNo;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      diags.push_back({"", lineNo, "expected key = value"});
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const KeySpec* spec = find_key(key);
    if (!spec) {
      diags.push_back({key, lineNo, "unknown key"});
      continue;
    }
    if (!seen.insert(key).second) {
      diags.push_back({key, lineNo, "duplicate key"});
      continue;
    }
    keyLines.emplace_back(key, lineNo);
    values.emplace(key, std::pair{std::string(value), lineNo});
  }

  // Apply in canonical order so that e.g. `channels` never clobbers an explicit
  // `hopping_sequence`, whatever the order in the file.
  for (const auto& spec : key_table()) {
    const auto it = values.find(spec.name);
    if (it == values.end()) continue;
    const auto& [value, line] = it->second;
    try {
      spec.set(cfg, value);
    } catch (const BadValue& e) {
      diags.push_back({std::string(spec.name), line, e.message});
    } catch (const std::invalid_argument& e) {
      diags.push_back({std::string(spec.name), line, e.what()});
    }
  }

  if (diags.empty()) {
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      const std::string key = blame_key(e.what());
      int line = 0;
      for (const auto& [k, l] : keyLines) {
        if (k == key) line = l;
      }
      diags.push_back({key, line, e.what()});
    }
  }
  if (!diags.empty()) throw ConfigError(std::move(diags));
  return cfg;
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::string out;
  for (const auto& spec : key_table()) {
    out += spec.name;
    out += " = ";
    out += spec.get(cfg);
    out += '\n';
  }
  return out;
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : serialize_config(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace tschsim
