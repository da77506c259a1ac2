#ifndef SHIFTCAL_SURROGATE_H_
#define SHIFTCAL_SURROGATE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shiftcal/core.h"

namespace shiftcal {

inline constexpr std::size_t kDefaultLadderSize = 6;
inline constexpr std::size_t kDefaultSubsample = 100;

enum class Distance { kMean, kKs, kW1 };

std::string to_string(Distance distance);
// Throws ValidationError listing the supported names.
Distance distance_from_string(const std::string& name);

// |mean(a) - mean(b)|
double dist_mean(std::span<const double> a, std::span<const double> b);
// sup_x |F_a(x) - F_b(x)| over the pooled sample points.
double dist_ks(std::span<const double> a, std::span<const double> b);
// Integral of |F_a(x) - F_b(x)| dx, computed exactly on the merged support.
double dist_w1(std::span<const double> a, std::span<const double> b);

double distance(Distance kind, std::span<const double> a, std::span<const double> b);

// Fits an NLL temperature per set and records the vanilla mean pmax. The first
// entry is by convention the clean calibration set. Throws ValidationError if
// any set is unlabeled or the class counts differ.
SurrogateLadder build_ladder(std::vector<std::pair<std::string, PredictionSet>> sets);

struct SacOptions {
  Distance distance = Distance::kMean;
  // Compare only a uniform random subsample of this many test rows.
  std::optional<std::size_t> subsample;
  std::uint64_t seed = 0;
};

// 1-based index of the ladder entry whose pmax sample is closest to the test
// sample under the chosen distance. Ties go to the lowest index.
std::size_t sac_select_index(const SurrogateLadder& ladder,
                             std::span<const double> test_pmax, Distance distance);

// Matches the test set against the ladder and returns the ladder model with
// the selected entry. The mean distance needs only the ladder summaries; ks and
// w1 need every entry's prediction set.
SacLadderModel sac_select(std::shared_ptr<const SurrogateLadder> ladder,
                          const PredictionSet& test, const SacOptions& options = {});

// Single NLL temperature fitted on the union of all ladder sets.
TemperatureModel sts_fit(const SurrogateLadder& ladder);

// Uniform random subset (without replacement) of `count` indices in [0, n),
// returned in increasing order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count,
                                        std::uint64_t seed);

}  // namespace shiftcal

#endif  // SHIFTCAL_SURROGATE_H_
