#ifndef UAVSWARM_RNG_HPP
#define UAVSWARM_RNG_HPP

#include <array>
#include <cstdint>
#include <random>

namespace uavswarm {

using Rng = std::mt19937_64;

/// Independent randomness sources. Drawing from one never shifts another, so
/// e.g. a change in policy sampling leaves user mobility and fading untouched.
enum class Stream : std::uint32_t { Placement = 0, Regions, Mobility, Fading, Policy, Update, kCount };

inline Rng make_rng(std::uint64_t seed, std::uint32_t stream, std::uint64_t salt = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream,
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32), 0x5eedU};
  return Rng(seq);
}

class RandomStreams {
 public:
  explicit RandomStreams(std::uint64_t seed, std::uint64_t salt = 0) {
    for (std::uint32_t i = 0; i < streams_.size(); ++i) streams_[i] = make_rng(seed, i, salt);
  }

  Rng& operator()(Stream s) { return streams_[static_cast<std::size_t>(s)]; }

 private:
  std::array<Rng, static_cast<std::size_t>(Stream::kCount)> streams_;
};

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace uavswarm

#endif  // UAVSWARM_RNG_HPP
