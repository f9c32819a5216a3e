#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace deua {

/// Seeded pseudo-random generator used by every pipeline stage.
///
/// Streams are derived by name from the root seed, so "init", "noise",
/// "pairs", "posterior", ... are mutually independent and reproducible no
/// matter how many draws the parent has already made. All draw paths avoid
/// std::*_distribution, whose output is implementation-defined; the mt19937_64
/// engine itself is pinned by the standard, so sequences are portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Child generator keyed by (this generator's seed, name).
  Rng stream(std::string_view name) const;
  /// Child generator keyed by (this generator's seed, index).
  Rng stream(std::uint64_t index) const;

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  int uniform_int(int lo, int hi);       // {lo, ..., hi}
  double normal();                       // N(0, 1) via Box-Muller
  std::vector<double> normal_vector(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(
          uniform_int(0, static_cast<int>(i)));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace deua
