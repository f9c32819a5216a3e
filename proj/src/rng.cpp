#include "deua/rng.hpp"

#include <cmath>

namespace deua {
namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) {
  for (char c : s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= kFnvPrime;
  }
  return h;
}

// splitmix64 finalizer; decorrelates nearby seeds before feeding mt19937_64.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

Rng Rng::stream(std::string_view name) const {
  return Rng(mix(seed_ ^ fnv1a(name)));
}

Rng Rng::stream(std::uint64_t index) const {
  return Rng(mix(seed_ ^ mix(index ^ 0xA5A5A5A5A5A5A5A5ull)));
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  // 53 high bits -> double in [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  const double u = uniform();
  const int span = hi - lo + 1;
  int v = lo + static_cast<int>(u * span);
  return v > hi ? hi : v;
}

double Rng::normal() {
  // u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::vector<double> Rng::normal_vector(std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = normal();
  return v;
}

}  // namespace deua
