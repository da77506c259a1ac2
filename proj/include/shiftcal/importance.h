#ifndef SHIFTCAL_IMPORTANCE_H_
#define SHIFTCAL_IMPORTANCE_H_

#include <cstddef>
#include <span>
#include <vector>

#include "shiftcal/core.h"

namespace shiftcal {

// Row-major feature vectors of a fixed dimension. Row i lines up with row i of
// the matching prediction file.
class FeatureSet {
 public:
  // Throws ValidationError unless dim >= 1, values.size() is a multiple of dim
  // and every value is finite.
  FeatureSet(std::size_t dim, std::vector<double> values);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return values_.size() / dim_; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t dim_;
  std::vector<double> values_;
};

struct DiscriminatorOptions {
  double l2 = 1e-3;
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
  // Raw weights above this quantile are clamped to it.
  double clamp_quantile = 0.99;
};

// Logistic source-vs-target classifier on standardized features.
struct Discriminator {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<double> coefficients;
  double intercept = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;

  // Log-odds that x came from the target domain.
  double log_odds(std::span<const double> x) const;
};

Discriminator train_discriminator(const FeatureSet& source, const FeatureSet& target,
                                  const DiscriminatorOptions& options = {});

struct ImportanceWeights {
  // One positive weight per calibration row, mean 1.
  std::vector<double> weights;
};

// w(x) = (n_source / n_target) * p_target(x) / (1 - p_target(x)) for every
// calibration row, clamped at the configured quantile, then rescaled to mean 1.
ImportanceWeights estimate_weights(const FeatureSet& source, const FeatureSet& target,
                                   const FeatureSet& cal,
                                   const DiscriminatorOptions& options = {});

// CPCS: temperature minimising the importance-weighted Brier score.
TemperatureFit cpcs_fit(const PredictionSet& cal, const ImportanceWeights& weights);

// Importance-weighted ECE minimisation only; TransCal's bias and variance
// correction terms are not included.
TemperatureFit transcal_lite_fit(const PredictionSet& cal, const ImportanceWeights& weights);

}  // namespace shiftcal

#endif  // SHIFTCAL_IMPORTANCE_H_
