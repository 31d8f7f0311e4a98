#pragma once

#include <cstdint>
#include <initializer_list>

namespace normgame {

// Purpose tags keep independent draw sites from sharing a stream.
enum class Stream : std::uint64_t {
  InitialProjects = 1,
  Observation = 2,
  ProjectReroll = 3,
  Attack = 4,
  Policy = 5,
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t stable_hash(std::uint64_t seed, std::initializer_list<std::uint64_t> parts);
std::uint64_t stable_hash(std::uint64_t seed, const char* text);

// Counter-based generator: output i is splitmix64(key + i * golden). The whole
// state is two integers, identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  // Stream for one draw site; the key folds every coordinate in order.
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
    return Rng(stable_hash(seed, parts));
  }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  // Uniform on [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace normgame
