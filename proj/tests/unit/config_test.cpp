#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <string>

#include "tschsim/config.hpp"

using namespace tschsim;

namespace {

ConfigDiagnostic first_diagnostic(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    EXPECT_FALSE(e.diagnostics().empty());
    return e.diagnostics().front();
  }
  ADD_FAILURE() << "expected a ConfigError for: " << text;
  return {};
}

}  // namespace

TEST(ParseConfig, StudyPoint) {
  const ScenarioConfig cfg = parse_config("nodes=50\nslotframe_len=101\nqueue_size=10\nmax_retries=2\nseed=1");
  EXPECT_EQ(cfg.nodeCount, 50u);
  EXPECT_EQ(cfg.areaSideKm, 2.0);
  EXPECT_EQ(cfg.radio.channelCount, 8u);
  EXPECT_EQ(cfg.radio.ptDbm, 14.0);
  EXPECT_EQ(cfg.radio.centerFrequencyHz, 915e6);
  EXPECT_EQ(cfg.radio.channelSpacingHz, 200e3);
  EXPECT_EQ(cfg.mac.slotframeLength, 101u);
  EXPECT_EQ(cfg.mac.queueCapacity, 10u);
  EXPECT_EQ(cfg.mac.maxRetries, 2u);
  EXPECT_EQ(cfg.traffic.meanInterarrivalS, 60.0);
  EXPECT_EQ(cfg.masterSeed, 1u);
  EXPECT_EQ(cfg.mac.slotframe_seconds(), 4.04);
}

TEST(ParseConfig, LongSlotframePeriod) {
  const ScenarioConfig cfg = parse_config("slotframe_len = 606\nslot_duration_s = 0.04\n");
  EXPECT_EQ(cfg.mac.slotframe_seconds(), 24.24);
}

TEST(ParseConfig, RangeErrorNamesKeyAndLine) {
  const auto d = first_diagnostic("nodes = 5\n\nqueue_size=0\n");
  EXPECT_EQ(d.key, "queue_size");
  EXPECT_EQ(d.line, 3);
}

TEST(ParseConfig, UnknownKey) {
  const auto d = first_diagnostic("# comment\nnodez = 5\n");
  EXPECT_EQ(d.key, "nodez");
  EXPECT_EQ(d.line, 2);
}

TEST(ParseConfig, MalformedValuesAreNotDefaulted) {
  EXPECT_EQ(first_diagnostic("nodes = fifty").key, "nodes");
  EXPECT_EQ(first_diagnostic("area_km = 2km").key, "area_km");
  EXPECT_EQ(first_diagnostic("max_retries = -1").key, "max_retries");
  EXPECT_EQ(first_diagnostic("traffic_mean_s = 0").key, "traffic_mean_s");
  EXPECT_EQ(first_diagnostic("nodes").line, 1);
}

TEST(ParseConfig, DuplicateKey) {
  const auto d = first_diagnostic("seed = 1\nseed = 2\n");
  EXPECT_EQ(d.key, "seed");
  EXPECT_EQ(d.line, 2);
}

TEST(ParseConfig, CrossFieldViolationIsBlamed) {
  const auto d = first_diagnostic("sensitivity_dbm = -100\nsaturation_dbm = -110\n");
  EXPECT_EQ(d.key, "sensitivity_dbm");
  EXPECT_EQ(d.line, 1);
}

TEST(ParseConfig, ChannelsAndHoppingInAnyOrder) {
  const auto a = parse_config("hopping_sequence = 3,2,1,0\nchannels = 4\n");
  EXPECT_EQ(a.mac.hoppingSequence, (std::vector<std::uint32_t>{3, 2, 1, 0}));
  EXPECT_EQ(a.radio.channelCount, 4u);
  const auto b = parse_config("channels = 4\n");
  EXPECT_EQ(b.mac.hoppingSequence, (std::vector<std::uint32_t>{0, 1, 2, 3}));
}

TEST(ParseConfig, FixedPositions) {
  const auto cfg = parse_config("nodes = 2\npositions = 1000,1100; 1000,1200\n");
  ASSERT_EQ(cfg.fixedPositions.size(), 2u);
  EXPECT_EQ(cfg.fixedPositions[1].y, 1200.0);
  EXPECT_EQ(first_diagnostic("nodes = 3\npositions = 1,1;2,2\n").key, "positions");
  EXPECT_EQ(first_diagnostic("nodes = 1\npositions = 1000,1000\n").key, "positions");
}

TEST(ConfigRoundTrip, DefaultAndRandomConfigs) {
  EXPECT_EQ(parse_config(serialize_config(ScenarioConfig{})), ScenarioConfig{});
  std::mt19937_64 gen(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    ScenarioConfig c;
    c.nodeCount = 1 + gen() % 300;
    c.areaSideKm = 0.1 + 5.0 * u(gen);
    const std::uint32_t channels = 1 + gen() % 16;
    apply_setting(c, "channels", std::to_string(channels));
    std::shuffle(c.mac.hoppingSequence.begin(), c.mac.hoppingSequence.end(), gen);
    c.mac.slotframeLength = 1 + gen() % 1000;
    c.mac.slotDuration = SlotDuration{1 + static_cast<long>(gen() % 100000)};
    c.mac.queueCapacity = 1 + gen() % 3000;
    c.mac.maxRetries = gen() % 300;
    c.radio.ptDbm = -10.0 + 30.0 * u(gen);
    c.radio.sensitivityDbm = -130.0 + 10.0 * u(gen);
    c.radio.saturationDbm = c.radio.sensitivityDbm + 0.5 + 20.0 * u(gen);
    c.traffic.meanInterarrivalS = 0.01 + 100.0 * u(gen);
    c.simHorizonS = 1.0 + 1e4 * u(gen);
    c.warmupMaxS = 1.0 + 1e4 * u(gen);
    c.masterSeed = gen();
    c.repetitions = 1 + gen() % 20;
    c.mac.ebProbability = 0.01 + 0.99 * u(gen);
    c.rpl.parentSwitchHysteresis = 3.0 * u(gen);
    if (gen() % 4 == 0) {
      const double side = c.area_side_m();
      for (std::uint32_t k = 0; k < c.nodeCount; ++k) c.fixedPositions.push_back({side * u(gen), side * u(gen)});
    }
    ASSERT_NO_THROW(c.validate());
    const ScenarioConfig back = parse_config(serialize_config(c));
    EXPECT_EQ(back, c);
    EXPECT_EQ(back.mac.slotDuration, c.mac.slotDuration);
    EXPECT_EQ(back.radio.ptDbm, c.radio.ptDbm);
    EXPECT_EQ(config_hash(back), config_hash(c));
  }
}

TEST(ConfigKeys, RequiredKeysExist) {
  for (const char* k : {"nodes", "area_km", "channels", "slotframe_len", "slot_duration_s", "queue_size",
                        "max_retries", "tx_power_dbm", "traffic_mean_s", "sim_horizon_s",
                        "warmup_max_s", "seed", "repetitions"}) {
    EXPECT_TRUE(is_config_key(k)) << k;
  }
  EXPECT_FALSE(is_config_key("bogus"));
}

TEST(ConfigHash, SensitiveToEveryField) {
  ScenarioConfig a;
  ScenarioConfig b = a;
  b.mac.maxRetries = 3;
  EXPECT_NE(config_hash(a), config_hash(b));
  b = a;
  b.masterSeed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
}
