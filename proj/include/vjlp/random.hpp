#ifndef VJLP_RANDOM_HPP
#define VJLP_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace vjlp {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// SplitMix64 engine: a Weyl sequence passed through the splitmix finalizer.
/// Seeding is a single store, which makes it cheap to open a fresh stream
/// for every (step, kernel) pair. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept
  {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  friend bool operator==(const SplitMix64&, const SplitMix64&) = default;

 private:
  std::uint64_t state_;
};

using Rng = SplitMix64;

/// Sub-kernels of one integrator step. Each (step, tag) pair owns a
/// logically independent stream.
enum class KernelTag : std::uint64_t {
  kJumpFirst = 1,
  kOrnsteinUhlenbeck = 2,
  kJumpSecond = 3,
  kInit = 4,
  kAux = 5,
};

/// Counter-based stream family: a root seed and a replica index identify a
/// chain; every (step, kernel) draw is taken from a fresh generator keyed by
/// the full tuple, so the variates a sub-kernel sees do not depend on how
/// many variates other sub-kernels consumed.
class StreamFamily {
 public:
  StreamFamily(std::uint64_t seed, std::uint64_t replica = 0) noexcept
      : seed_(seed), replica_(replica),
        root_(splitmix64(splitmix64(seed) ^ (replica * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL)))
  {}

  [[nodiscard]] Rng substream(std::uint64_t step, KernelTag tag) const noexcept
  {
    return Rng(splitmix64(root_ ^ splitmix64(step * 8 + static_cast<std::uint64_t>(tag))));
  }

  /// Child family for replica ensembles; disjoint from the parent's replicas.
  [[nodiscard]] StreamFamily replica(std::uint64_t index) const noexcept
  {
    return StreamFamily(splitmix64(seed_ ^ 0xa0761d6478bd642fULL) + replica_, index);
  }

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t replica_index() const noexcept { return replica_; }

 private:
  std::uint64_t seed_;
  std::uint64_t replica_;
  std::uint64_t root_;
};

// Small samplers used across the kernels. Uniforms are drawn on the open
// interval (0, 1) so logarithms stay finite.

template <typename Engine>
inline double uniform_open(Engine& rng)
{
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

template <typename Engine>
inline double standard_exponential(Engine& rng)
{
  return -std::log(uniform_open(rng));
}

template <typename Engine>
inline double standard_normal(Engine& rng)
{
  // Marsaglia polar method without caching so every call consumes from the
  // engine deterministically.
  double u, w;
  double v;
  do {
    u = 2.0 * uniform_open(rng) - 1.0;
    v = 2.0 * uniform_open(rng) - 1.0;
    w = u * u + v * v;
  } while (w >= 1.0 || w == 0.0);
  return u * std::sqrt(-2.0 * std::log(w) / w);
}

template <typename Engine>
inline std::uint64_t poisson(Engine& rng, double mean)
{
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(rng);
}

} // namespace vjlp

#endif // VJLP_RANDOM_HPP
