#ifndef SHIFTCAL_METRICS_H_
#define SHIFTCAL_METRICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shiftcal/core.h"

namespace shiftcal {

inline constexpr std::size_t kDefaultBins = 15;

struct ConfidenceSample {
  double pmax = 0.0;
  bool correct = false;
};

struct ReliabilityBin {
  std::size_t count = 0;
  // Sum of row weights in the bin; equals `count` for unweighted binning.
  double mass = 0.0;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
  double lower_edge = 0.0;
  double upper_edge = 0.0;
};

struct BinnedReliability {
  std::vector<ReliabilityBin> bins;
  std::size_t total = 0;
  double total_mass = 0.0;
};

// Sorts by pmax (stable, so equal confidences keep input order) and cuts the
// sorted rows into `num_bins` contiguous chunks. The first N mod M chunks get
// one extra row. Throws ValidationError when N < M or M == 0.
BinnedReliability bin_equal_mass(std::span<const ConfidenceSample> rows,
                                 std::size_t num_bins);

// Same partition as above, but every row contributes its weight instead of 1
// to bin mass, bin accuracy and bin confidence. Weights must be non-negative;
// a bin with zero mass reports accuracy and confidence 0.
BinnedReliability bin_equal_mass(std::span<const ConfidenceSample> rows,
                                 std::span<const double> weights,
                                 std::size_t num_bins);

// sum_m (mass_m / total_mass) * |accuracy_m - confidence_m|
double ece(const BinnedReliability& binned);

// Pairs each probability row with Top-1 correctness against `preds` labels.
std::vector<ConfidenceSample> confidence_samples(std::span<const ProbabilityRow> probs,
                                                 const PredictionSet& preds);

// Mean negative log-likelihood of the labelled class, probabilities clamped
// below at kProbabilityFloor.
double nll(std::span<const ProbabilityRow> probs, const PredictionSet& preds);

// Mean over rows of sum_k (p_k - onehot_k)^2. With weights the per-row terms
// are combined as sum(w * term) / sum(w).
double brier(std::span<const ProbabilityRow> probs, const PredictionSet& preds,
             std::optional<std::span<const double>> weights = std::nullopt);

double accuracy(std::span<const ProbabilityRow> probs, const PredictionSet& preds);

double mean_pmax(std::span<const ProbabilityRow> probs);

// CSV with header bin_index,count,lower_edge,upper_edge,accuracy,mean_confidence.
// bin_index is 1-based.
std::string reliability_csv(const BinnedReliability& binned);

}  // namespace shiftcal

#endif  // SHIFTCAL_METRICS_H_
