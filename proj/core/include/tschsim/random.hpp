#pragma once

#include <cstdint>
#include <random>

namespace tschsim {

/// What a random stream is consumed for. Each (purpose, a, b) key owns an
/// independent stream so that changing one parameter does not shift draws
/// made elsewhere in the run.
enum class StreamPurpose : std::uint8_t {
  Placement,
  PisterHack,
  Traffic,
  Backoff,
  Jitter,
  Link,   // per-frame delivery trials
  Cells,  // MSF-lite cell relocation
  Test,
};

struct StreamId {
  StreamPurpose purpose = StreamPurpose::Test;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seeded, substream-splittable random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are not, so the conversions to
/// uniform/exponential variates are done here by hand.
class RandomSource {
 public:
  RandomSource(std::uint64_t masterSeed, StreamId id);

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();
  double uniform_real(double a, double b);
  /// Uniform on the closed range [a, b]; unbiased (rejection sampling).
  std::int64_t uniform_int(std::int64_t a, std::int64_t b);
  double exponential(double mean);
  bool bernoulli(double p);

 private:
  std::mt19937_64 engine_;
};

inline RandomSource rng_stream(std::uint64_t masterSeed, StreamId id) {
  return RandomSource(masterSeed, id);
}

}  // namespace tschsim
