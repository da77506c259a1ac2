#ifndef SHIFTCAL_EXPERIMENT_H_
#define SHIFTCAL_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "shiftcal/core.h"
#include "shiftcal/importance.h"
#include "shiftcal/metrics.h"
#include "shiftcal/synth.h"

namespace shiftcal {

// Synthetic covariate-shift benchmark: a clean calibration set, a ladder of
// surrogate sets made by adding Gaussian feature noise of increasing strength
// to that same calibration set, and held-out test sets shifted by a noise type
// the ladder never uses.
struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::size_t num_classes = 10;
  std::size_t dim = 8;
  // Heavily overlapping classes. With well-separated classes the noise-unaware
  // model's mean confidence barely moves with the noise level, which leaves
  // nothing for SAC to match on.
  double separation = 1.0;
  double within_class_std = 1.0;
  // Overconfidence of the base model on clean data.
  double temperature_distortion = 1.5;
  std::size_t n_cal = 5000;
  std::size_t n_test = 10000;
  // Noise std per ladder entry; the first entry is the clean set.
  std::vector<double> ladder_levels = {0.0, 0.8, 1.2, 1.6, 2.0, 2.5};
  NoiseKind ladder_noise = NoiseKind::kGaussian;
  // Noise std per test intensity; intensity 0 is unshifted.
  std::vector<double> test_levels = {0.0, 0.8, 1.2, 1.6, 2.0};
  NoiseKind test_noise = NoiseKind::kUniform;
  std::size_t num_bins = kDefaultBins;
  // When set, SAC matches on a random subsample of this many test rows.
  std::optional<std::size_t> subsample;
};

struct ExperimentData {
  std::vector<std::vector<double>> class_means;
  std::shared_ptr<const SurrogateLadder> ladder;
  // Observed features of the clean calibration set.
  std::optional<FeatureSet> cal_features;
  std::vector<PredictionSet> test_sets;
  std::vector<FeatureSet> test_features;
};

// Generates every set and fits the ladder temperatures.
ExperimentData prepare_experiment(const ExperimentConfig& config);

struct ExperimentRow {
  std::string method;
  std::size_t intensity = 0;
  double ece = 0.0;
  double accuracy = 0.0;
  double mean_pmax = 0.0;
  // 1-based ladder index chosen by SAC; empty for other methods.
  std::optional<std::size_t> selected_index;
};

// Rows ordered by intensity, then method: vanilla, ts, cpcs, transcal_lite,
// sts, sac.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config);
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config,
                                          const ExperimentData& data);

// Header method,intensity,ece,accuracy,mean_pmax,selected_index; reals with 6
// decimals.
std::string experiment_report_csv(const std::vector<ExperimentRow>& rows);

// Feature map handed to the domain classifier: each coordinate and its square,
// so a linear discriminator can see variance shifts as well as mean shifts.
FeatureSet quadratic_features(const FeatureSet& features);

}  // namespace shiftcal

#endif  // SHIFTCAL_EXPERIMENT_H_
