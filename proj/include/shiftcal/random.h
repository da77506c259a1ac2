#ifndef SHIFTCAL_RANDOM_H_
#define SHIFTCAL_RANDOM_H_

#include <cstdint>
#include <random>

namespace shiftcal {

// Purposes that get their own independent stream from one user seed. Adding a
// purpose never perturbs the numbers drawn by the others.
enum class Stream : std::uint64_t {
  kLabels = 1,
  kFeatures = 2,
  kNoise = 3,
  kClassMeans = 4,
  kSubsample = 5,
};

std::uint64_t splitmix64(std::uint64_t x);

// Portable seeded generator: std::mt19937_64 (whose output sequence is fixed
// by the standard) with hand-written transforms, since the standard library
// distributions are implementation-defined.
class Rng {
 public:
  Rng(std::uint64_t seed, Stream stream);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n) by rejection; n > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace shiftcal

#endif  // SHIFTCAL_RANDOM_H_
