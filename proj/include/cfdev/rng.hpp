#pragma once

#include <cstdint>
#include <string_view>

namespace cfdev {

/// Counter-based random bit generator. Word `i` of stream `s` under seed `k`
/// is a fixed bijective mix of (k, s, i), so any word can be recomputed
/// without replaying the sequence and independent streams can be handed to
/// workers without coordination. Satisfies std::uniform_random_bit_generator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return at(counter_++); }

  /// Word at an absolute position; does not advance the generator.
  result_type at(std::uint64_t counter) const {
    std::uint64_t x = mix(seed_ + 0x9e3779b97f4a7c15ULL * (stream_ + 1));
    x = mix(x ^ (counter * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
    return mix(x + stream_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Independent generator for child index `index` of this stream.
  CounterRng substream(std::uint64_t index) const {
    return CounterRng(seed_, mix(stream_ ^ mix(index + 0x632be59bd9b4e019ULL)));
  }

  /// Independent generator for a named purpose ("levy-mc", "sampler", ...).
  CounterRng named(std::string_view name) const { return substream(hash(name)); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  static std::uint64_t hash(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (const char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  // SplitMix64 finaliser.
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace cfdev
