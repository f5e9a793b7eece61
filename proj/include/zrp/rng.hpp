#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace zrp {

/// Child seed from a root seed and a path of integer labels (replica index,
/// stream tag, ...). Uses std::seed_seq, whose mixing is fixed by the standard,
/// so derived seeds are identical on every conforming platform.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * path.size());
  words.push_back(static_cast<std::uint32_t>(root));
  words.push_back(static_cast<std::uint32_t>(root >> 32));
  for (auto p : path) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

/// Stream tags used with derive_seed.
enum class StreamTag : std::uint64_t {
  harris = 1,
  initial = 2,
  environment = 3,
  walks = 4,
  path = 5,
};

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t replica, StreamTag tag) {
  return derive_seed(root, {replica, static_cast<std::uint64_t>(tag)});
}

/// mt19937_64 with the few draws the simulation needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0,1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double exponential(double rate) { return -std::log(uniform()) / rate; }
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n) {
    __extension__ const unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    return static_cast<std::uint64_t>(m >> 64);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace zrp
