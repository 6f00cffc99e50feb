// Acceptance harness: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tschsim/asn.hpp"
#include "tschsim/config.hpp"
#include "tschsim/radio.hpp"
#include "tschsim/random.hpp"
#include "tschsim/simulation.hpp"
#include "tschsim/sweep.hpp"

using namespace tschsim;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Free-space received power written out directly from the textbook form.
double friis_oracle(double d, double ptDbm, double freqHz) {
  const double lambda = 299'792'458.0 / freqHz;
  const double ratio = lambda / (4.0 * std::numbers::pi * d);
  return ptDbm + 10.0 * std::log10(ratio * ratio);
}

Outcome criterion_friis() {
  const RadioConfig cfg;
  const double at1km = friis_rx_power(1000.0, cfg);
  double worstDoubling = 0.0;
  double worstOracle = 0.0;
  const double law = 20.0 * std::log10(2.0);
  for (double d = 1.0; d <= 1e5; d *= 1.37) {
    worstDoubling = std::max(worstDoubling, std::abs(friis_rx_power(d, cfg) - friis_rx_power(2 * d, cfg) - law));
    worstOracle = std::max(worstOracle, std::abs(friis_rx_power(d, cfg) - friis_oracle(d, 14.0, 915e6)));
  }
  const bool ok = std::abs(at1km - -77.68) <= 0.01 && std::abs(law - 6.0206) < 1e-4 && worstDoubling <= 1e-6 &&
                  worstOracle <= 1e-9;
  return {ok, fmt("Pr(1 km) = %.4f dBm, doubling error %.2e dB, oracle error %.2e dB", at1km, worstDoubling,
                  worstOracle)};
}

Outcome criterion_pister_hack() {
  RandomSource rng(2024, {StreamPurpose::PisterHack, 0, 1});
  std::vector<double> loss(10000);
  bool inside = true;
  for (double& x : loss) {
    const double r = pister_hack_rssi(-80.0, rng);
    inside = inside && r >= -120.0 && r <= -80.0;
    x = -80.0 - r;
  }
  std::sort(loss.begin(), loss.end());
  double d = 0.0;
  const double n = static_cast<double>(loss.size());
  for (std::size_t i = 0; i < loss.size(); ++i) {
    const double f = std::clamp(loss[i] / 40.0, 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double critical = 1.6276 / std::sqrt(n);
  return {inside && d < critical,
          fmt("all in [-120, -80]: %s, KS D = %.4f (critical %.4f)", inside ? "yes" : "no", d, critical)};
}

Outcome criterion_slotframe_periods() {
  const SlotDuration slot = slot_duration_from_seconds(0.04);
  const double t101 = asn_to_seconds(Asn{101}, slot);
  const double t606 = asn_to_seconds(Asn{606}, slot);
  const double zero = asn_to_seconds(Asn{0}, slot);
  return {t101 == 4.04 && t606 == 24.24 && zero == 0.0, fmt("T=101 -> %.17g s, T=606 -> %.17g s", t101, t606)};
}

Outcome criterion_identity() {
  std::mt19937_64 gen(4242);
  int runs = 0;
  int bad = 0;
  int skipped = 0;
  for (int i = 0; i < 20; ++i) {
    ScenarioConfig cfg;
    cfg.nodeCount = 1 + static_cast<std::uint32_t>(gen() % 15);
    cfg.areaSideKm = 0.3 + static_cast<double>(gen() % 18) * 0.1;
    cfg.mac.slotframeLength = std::array<std::uint32_t, 4>{11, 31, 101, 606}[gen() % 4];
    cfg.mac.queueCapacity = 1 + static_cast<std::uint32_t>(gen() % 20);
    cfg.mac.maxRetries = static_cast<std::uint32_t>(gen() % 6);
    cfg.traffic.meanInterarrivalS = 1.0 + static_cast<double>(gen() % 90);
    cfg.simHorizonS = 300.0;
    cfg.masterSeed = gen();
    try {
      const MetricsReport r = run_scenario(cfg);
      ++runs;
      const bool counts = r.generated == r.delivered + r.droppedQueueFull + r.droppedMaxRetries + r.droppedNoRoute +
                                             r.inFlightAtEnd;
      const bool ratios =
          !r.perTotal || *r.perQueueFull + *r.perMaxRetries + *r.perNoRoute == *r.perTotal;
      if (!counts || !ratios) ++bad;
    } catch (const DisconnectedError&) {
      ++skipped;
    }
  }
  return {bad == 0 && runs == 20,
          fmt("%d runs, %d identity violations, %d disconnected", runs, bad, skipped)};
}

class AttemptCounter : public SimObserver {
 public:
  explicit AttemptCounter(PacketId id) : id_(id) {}
  void on_transmission(Asn, const SlotTransmission&, std::optional<PacketId> p) override {
    if (p == id_) ++attempts;
  }
  void on_terminal(const Packet& p, TerminalState s) override {
    if (p.id == id_) state = s;
  }
  int attempts = 0;
  std::optional<TerminalState> state;

 private:
  PacketId id_;
};

Outcome criterion_retry_bound() {
  std::string detail;
  bool ok = true;
  for (std::uint32_t r : {0u, 2u, 5u}) {
    ScenarioConfig cfg;
    cfg.nodeCount = 1;
    cfg.fixedPositions = {{1000.0, 1020.0}};
    cfg.mac.maxRetries = r;
    cfg.traffic.meanInterarrivalS = 1e7;
    cfg.simHorizonS = 300.0;
    Simulation sim(cfg);
    sim.override_link(0, 1, -60.0);
    sim.run_warmup();
    sim.override_link(0, 1, -121.0);  // forced failure
    const auto id = sim.inject_packet(1);
    if (!id) return {false, "packet was not generated"};
    AttemptCounter counter(*id);
    sim.set_observer(&counter);
    sim.run_for_slots(1000ull * cfg.mac.slotframeLength);
    const bool good = counter.attempts == static_cast<int>(r) + 1 && counter.state == TerminalState::MaxRetries;
    ok = ok && good;
    detail += fmt("R=%u: %d attempts%s; ", r, counter.attempts,
                  counter.state == TerminalState::MaxRetries ? " then MaxRetries" : " without MaxRetries");
  }
  return {ok, detail};
}

// --- desk-scale sweep shared by the trend criteria ---

struct Desk {
  SweepResult result;
  std::size_t failed = 0;

  std::vector<double> values(std::uint32_t n, std::uint32_t t, std::uint32_t r, std::uint32_t q,
                             std::optional<double> MetricsReport::*field) const {
    std::vector<double> out;
    for (const auto& run : result.runs) {
      const auto& c = run.config;
      if (!run.ok || c.nodeCount != n || c.mac.slotframeLength != t || c.mac.maxRetries != r ||
          c.mac.queueCapacity != q) {
        continue;
      }
      if (const auto v = run.report.*field) out.push_back(*v);
    }
    return out;
  }

  std::optional<double> mean(std::uint32_t n, std::uint32_t t, std::uint32_t r, std::uint32_t q,
                             std::optional<double> MetricsReport::*field) const {
    return summarize(values(n, t, r, q, field)).mean;
  }
};

ScenarioConfig desk_base() {
  ScenarioConfig base;
  base.simHorizonS = 900.0;
  base.repetitions = 5;
  base.masterSeed = 1;
  return base;
}

SweepSpec criterion6_spec(unsigned jobs) {
  SweepSpec spec;
  spec.base = desk_base();
  spec.base.mac.slotframeLength = 101;
  spec.base.mac.queueCapacity = 10;
  spec.axes = {{"nodes", {"10", "30", "50"}}, {"max_retries", {"2", "200"}}};
  spec.parallelism = jobs;
  return spec;
}

Desk run_desk() {
  SweepSpec spec;
  spec.base = desk_base();
  spec.axes = {{"nodes", {"10", "30", "50"}},
               {"slotframe_len", {"101", "606"}},
               {"max_retries", {"2", "200"}},
               {"queue_size", {"10", "2000"}}};
  spec.parallelism = 0;
  Desk d{run_sweep(spec)};
  for (const auto& run : d.result.runs) d.failed += run.ok ? 0 : 1;
  return d;
}

std::string show(std::optional<double> v) { return v ? fmt("%.6g", *v) : std::string("NA"); }

bool leq(std::optional<double> a, std::optional<double> b) { return a && b && *a <= *b; }

Outcome criterion_retries_dominate(const Desk& d) {
  bool ok = true;
  std::string detail;
  for (std::uint32_t n : {10u, 30u, 50u}) {
    const auto hi = d.mean(n, 101, 200, 10, &MetricsReport::perTotal);
    const auto lo = d.mean(n, 101, 2, 10, &MetricsReport::perTotal);
    ok = ok && leq(hi, lo);
    if (n == 50) ok = ok && hi && lo && *hi < *lo;
    detail += fmt("N=%u: R=200 %s vs R=2 %s; ", n, show(hi).c_str(), show(lo).c_str());
  }
  return {ok, detail};
}

Outcome criterion_slotframe_trend(const Desk& d) {
  bool ok = true;
  std::string detail;
  for (std::uint32_t n : {10u, 30u, 50u}) {
    const auto t606 = d.mean(n, 606, 2, 10, &MetricsReport::perTotal);
    const auto t101 = d.mean(n, 101, 2, 10, &MetricsReport::perTotal);
    ok = ok && leq(t606, t101);
    detail += fmt("N=%u: T=606 %s vs T=101 %s; ", n, show(t606).c_str(), show(t101).c_str());
  }
  return {ok, detail};
}

Outcome criterion_queue_full_vs_r(const Desk& d) {
  bool ok = true;
  std::string detail;
  for (std::uint32_t t : {101u, 606u}) {
    const auto hi = d.mean(50, t, 200, 10, &MetricsReport::perQueueFull);
    const auto lo = d.mean(50, t, 2, 10, &MetricsReport::perQueueFull);
    ok = ok && leq(hi, lo);
    detail += fmt("T=%u: R=200 %s vs R=2 %s; ", t, show(hi).c_str(), show(lo).c_str());
  }
  return {ok, detail};
}

Outcome criterion_max_retries_vs_t(const Desk& d) {
  const auto t606 = d.mean(50, 606, 2, 10, &MetricsReport::perMaxRetries);
  const auto t101 = d.mean(50, 101, 2, 10, &MetricsReport::perMaxRetries);
  return {leq(t606, t101), fmt("T=606 %s vs T=101 %s", show(t606).c_str(), show(t101).c_str())};
}

Outcome criterion_latency_vs_q(const Desk& d) {
  bool ok = true;
  std::string detail;
  for (std::uint32_t n : {30u, 50u}) {
    const auto big = d.mean(n, 606, 2, 2000, &MetricsReport::latencyMeanS);
    const auto small = d.mean(n, 606, 2, 10, &MetricsReport::latencyMeanS);
    ok = ok && leq(big, small);
    detail += fmt("N=%u: Q=2000 %s s vs Q=10 %s s; ", n, show(big).c_str(), show(small).c_str());
  }
  return {ok, detail};
}

class FloorChecker : public SimObserver {
 public:
  void on_terminal(const Packet& p, TerminalState s) override {
    if (s != TerminalState::Delivered) return;
    ++delivered;
    if (*p.deliveredAsn - p.createdAsn < p.hopCount) ++violations;
  }
  std::uint64_t delivered = 0;
  std::uint64_t violations = 0;
};

Outcome criterion_latency_floor() {
  const SweepSpec spec = criterion6_spec(1);
  FloorChecker checker;
  std::uint64_t reported = 0;
  int runs = 0;
  for (const ScenarioConfig& point : expand_grid(spec)) {
    for (std::uint32_t i = 0; i < point.repetitions; ++i) {
      Simulation sim(repetition_config(point, i));
      sim.set_observer(&checker);
      try {
        reported += sim.run().latencyFloorViolations;
        ++runs;
      } catch (const DisconnectedError&) {
      }
    }
  }
  return {checker.violations == 0 && reported == 0 && checker.delivered > 0,
          fmt("%d runs, %llu delivered packets, %llu below hopCount x slot", runs,
              static_cast<unsigned long long>(checker.delivered),
              static_cast<unsigned long long>(checker.violations + reported))};
}

std::string runs_csv_of(unsigned jobs) {
  std::ostringstream os;
  write_runs_csv(os, run_sweep(criterion6_spec(jobs)));
  return os.str();
}

Outcome criterion_determinism() {
  const std::string a = runs_csv_of(1);
  const std::string b = runs_csv_of(1);
  const std::string c = runs_csv_of(2);
  const std::string e = runs_csv_of(0);
  const bool ok = a == b && a == c && a == e && !a.empty();
  return {ok, fmt("rerun %s, 2 workers %s, all hardware threads %s (%zu bytes)", a == b ? "identical" : "differs",
                  a == c ? "identical" : "differs", a == e ? "identical" : "differs", a.size())};
}

Outcome criterion_tree_depth(const Desk& d) {
  bool ok = true;
  std::string depths;
  int seen = 0;
  for (const auto& run : d.result.runs) {
    const auto& c = run.config;
    // Depth is fixed by topology and routing, so one (T, R, Q) cell is enough.
    if (c.nodeCount != 50 || c.mac.slotframeLength != 101 || c.mac.maxRetries != 2 || c.mac.queueCapacity != 10) {
      continue;
    }
    ++seen;
    if (!run.ok) {
      ok = false;
      depths += "failed ";
      continue;
    }
    const auto depth = run.report.maxTreeDepth;
    ok = ok && depth >= 2 && depth <= 8;
    depths += std::to_string(depth) + " ";
  }
  return {ok && seen == 5, "maxTreeDepth over 5 seeds: " + depths};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, double limitS, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double took = seconds_since(t0);
    if (limitS > 0.0 && took > limitS) {
      o.pass = false;
      o.detail += fmt(" [over time budget %.0f s]", limitS);
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %2d %s: %s (%.2f s) %s\n", id, o.pass ? "PASS" : "FAIL", name, took, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "friis", 1.0, criterion_friis);
  report(2, "pister-hack envelope", 5.0, criterion_pister_hack);
  report(3, "slotframe periods", 1.0, criterion_slotframe_periods);
  report(4, "loss decomposition identity", 120.0, criterion_identity);
  report(5, "retry bound", 5.0, criterion_retry_bound);

  const auto t0 = Clock::now();
  const Desk desk = run_desk();
  std::printf("desk sweep: %zu runs, %zu failed, %.1f s\n", desk.result.runs.size(), desk.failed,
              seconds_since(t0));
  for (const auto& run : desk.result.runs) {
    if (!run.ok) std::printf("  failed run %s: %s\n", serialize_config(run.config).c_str(), run.error.c_str());
  }

  report(6, "retries reduce PER", 0.0, [&] { return criterion_retries_dominate(desk); });
  report(7, "longer slotframe reduces PER at R=2", 0.0, [&] { return criterion_slotframe_trend(desk); });
  report(8, "queue-full losses fall with R", 0.0, [&] { return criterion_queue_full_vs_r(desk); });
  report(9, "max-retries losses fall with T", 0.0, [&] { return criterion_max_retries_vs_t(desk); });
  report(10, "latency vs Q at T=606", 0.0, [&] { return criterion_latency_vs_q(desk); });
  report(11, "latency floor", 0.0, criterion_latency_floor);
  report(12, "determinism", 0.0, criterion_determinism);
  report(13, "tree depth band", 0.0, [&] { return criterion_tree_depth(desk); });

  std::printf("%d of 13 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
