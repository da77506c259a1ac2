#ifndef SHIFTCAL_SCALING_H_
#define SHIFTCAL_SCALING_H_

#include <cstddef>
#include <optional>
#include <span>

#include "shiftcal/core.h"
#include "shiftcal/metrics.h"

namespace shiftcal {

inline constexpr double kMinTemperature = 0.05;
inline constexpr double kMaxTemperature = 20.0;
inline constexpr std::size_t kTemperatureGridPoints = 200;
inline constexpr double kTemperatureTolerance = 1e-4;

struct FitOptions {
  // Bins used by the weighted-ECE objective.
  std::size_t num_bins = kDefaultBins;
};

// Minimises the chosen objective over T in [kMinTemperature, kMaxTemperature]:
// a 200-point log-spaced grid locates the best cell, then golden-section
// search refines inside the neighbouring grid interval to 1e-4 in T.
//
// `weights` (optional, one per row, non-negative with a positive sum) are
// rescaled to mean 1 before use. With kNll and no weights this is plain
// temperature scaling.
//
// Throws ValidationError on missing labels, bad weights, or a degenerate set
// where the objective cannot depend on T.
TemperatureFit fit_temperature(const PredictionSet& cal, ObjectiveKind objective,
                               std::optional<std::span<const double>> weights = std::nullopt,
                               const FitOptions& options = {});

}  // namespace shiftcal

#endif  // SHIFTCAL_SCALING_H_
