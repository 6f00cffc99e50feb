#include "tschsim/random.hpp"

#include <cmath>
#include <stdexcept>

namespace tschsim {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t derive_seed(std::uint64_t masterSeed, StreamId id) {
  std::uint64_t h = splitmix64(masterSeed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(id.purpose));
  h = splitmix64(h ^ id.a);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(id.b) << 32));
  return h;
}

}  // namespace

RandomSource::RandomSource(std::uint64_t masterSeed, StreamId id)
    : engine_(derive_seed(masterSeed, id)) {}

double RandomSource::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomSource::uniform_real(double a, double b) {
  return a + (b - a) * uniform01();
}

std::int64_t RandomSource::uniform_int(std::int64_t a, std::int64_t b) {
  if (b < a) throw std::invalid_argument("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(b) - static_cast<std::uint64_t>(a);
  if (span == UINT64_MAX) return static_cast<std::int64_t>(engine_());
  const std::uint64_t range = span + 1;
  // Reject the lowest (2^64 mod range) values so every residue is equally likely.
  const std::uint64_t threshold = (0 - range) % range;
  std::uint64_t x = engine_();
  while (x < threshold) x = engine_();
  return a + static_cast<std::int64_t>(x % range);
}

double RandomSource::exponential(double mean) {
  if (!(mean > 0.0)) throw std::invalid_argument("exponential: mean must be positive");
  // 1 - u lies in (0, 1], so the logarithm is finite.
  return -mean * std::log(1.0 - uniform01());
}

bool RandomSource::bernoulli(double p) {
  // Always consumes exactly one draw, whatever p is.
  return uniform01() < p;
}

}  // namespace tschsim
