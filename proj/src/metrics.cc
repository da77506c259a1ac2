#include "shiftcal/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace shiftcal {

namespace {

BinnedReliability bin_impl(std::span<const ConfidenceSample> rows,
                           const double* weights, std::size_t num_bins) {
  const std::size_t n = rows.size();
  if (num_bins == 0) {
    throw ValidationError("number of bins must be positive");
  }
  if (n < num_bins) {
    throw ValidationError("equal-mass binning needs at least as many rows as bins (" +
                          std::to_string(n) + " rows, " + std::to_string(num_bins) +
                          " bins)");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a].pmax < rows[b].pmax;
  });

  BinnedReliability out;
  out.total = n;
  out.bins.resize(num_bins);
  const std::size_t base = n / num_bins;
  const std::size_t extra = n % num_bins;

  CompensatedSum total_mass;
  std::size_t pos = 0;
  for (std::size_t m = 0; m < num_bins; ++m) {
    const std::size_t size = base + (m < extra ? 1 : 0);
    CompensatedSum mass, hits, conf;
    for (std::size_t i = pos; i < pos + size; ++i) {
      const auto& r = rows[order[i]];
      const double w = weights ? weights[order[i]] : 1.0;
      mass.add(w);
      if (r.correct) hits.add(w);
      conf.add(w * r.pmax);
    }
    auto& bin = out.bins[m];
    bin.count = size;
    bin.mass = mass.value();
    if (bin.mass > 0.0) {
      bin.accuracy = hits.value() / bin.mass;
      bin.mean_confidence = conf.value() / bin.mass;
    }
    bin.lower_edge = rows[order[pos]].pmax;
    bin.upper_edge = rows[order[pos + size - 1]].pmax;
    total_mass.add(bin.mass);
    pos += size;
  }
  out.total_mass = total_mass.value();
  return out;
}

}  // namespace

BinnedReliability bin_equal_mass(std::span<const ConfidenceSample> rows,
                                 std::size_t num_bins) {
  return bin_impl(rows, nullptr, num_bins);
}

BinnedReliability bin_equal_mass(std::span<const ConfidenceSample> rows,
                                 std::span<const double> weights,
                                 std::size_t num_bins) {
  if (weights.size() != rows.size()) {
    throw ValidationError("weights: expected " + std::to_string(rows.size()) +
                          " values, got " + std::to_string(weights.size()));
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ValidationError("weights must be non-negative and finite");
    }
  }
  return bin_impl(rows, weights.data(), num_bins);
}

double ece(const BinnedReliability& binned) {
  if (!(binned.total_mass > 0.0)) {
    throw ValidationError("ece: total bin mass is zero");
  }
  CompensatedSum sum;
  for (const auto& bin : binned.bins) {
    sum.add(bin.mass / binned.total_mass *
            std::abs(bin.accuracy - bin.mean_confidence));
  }
  return sum.value();
}

std::vector<ConfidenceSample> confidence_samples(std::span<const ProbabilityRow> probs,
                                                 const PredictionSet& preds) {
  if (probs.size() != preds.size()) {
    throw ValidationError("probability rows and prediction set differ in length");
  }
  preds.require_labels("calibration metrics");
  std::vector<ConfidenceSample> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out[i].pmax = probs[i].pmax;
    out[i].correct = static_cast<int>(probs[i].predicted_class) == *preds.label(i);
  }
  return out;
}

double nll(std::span<const ProbabilityRow> probs, const PredictionSet& preds) {
  if (probs.size() != preds.size()) {
    throw ValidationError("probability rows and prediction set differ in length");
  }
  preds.require_labels("nll");
  CompensatedSum sum;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i].probs[static_cast<std::size_t>(*preds.label(i))];
    sum.add(-std::log(std::clamp(p, kProbabilityFloor, 1.0)));
  }
  return sum.value() / static_cast<double>(probs.size());
}

double brier(std::span<const ProbabilityRow> probs, const PredictionSet& preds,
             std::optional<std::span<const double>> weights) {
  if (probs.size() != preds.size()) {
    throw ValidationError("probability rows and prediction set differ in length");
  }
  if (weights && weights->size() != probs.size()) {
    throw ValidationError("weights: expected " + std::to_string(probs.size()) +
                          " values, got " + std::to_string(weights->size()));
  }
  preds.require_labels("brier");
  CompensatedSum sum, weight_sum;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto label = static_cast<std::size_t>(*preds.label(i));
    double term = 0.0;
    for (std::size_t k = 0; k < probs[i].probs.size(); ++k) {
      const double d = probs[i].probs[k] - (k == label ? 1.0 : 0.0);
      term += d * d;
    }
    const double w = weights ? (*weights)[i] : 1.0;
    sum.add(w * term);
    weight_sum.add(w);
  }
  if (!(weight_sum.value() > 0.0)) {
    throw ValidationError("brier: weights sum to zero");
  }
  return sum.value() / weight_sum.value();
}

double accuracy(std::span<const ProbabilityRow> probs, const PredictionSet& preds) {
  const auto samples = confidence_samples(probs, preds);
  std::size_t hits = 0;
  for (const auto& s : samples) hits += s.correct ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double mean_pmax(std::span<const ProbabilityRow> probs) {
  CompensatedSum sum;
  for (const auto& row : probs) sum.add(row.pmax);
  return sum.value() / static_cast<double>(probs.size());
}

std::string reliability_csv(const BinnedReliability& binned) {
  std::string out = "bin_index,count,lower_edge,upper_edge,accuracy,mean_confidence\n";
  char line[256];
  for (std::size_t m = 0; m < binned.bins.size(); ++m) {
    const auto& b = binned.bins[m];
    std::snprintf(line, sizeof(line), "%zu,%zu,%.6f,%.6f,%.6f,%.6f\n", m + 1, b.count,
                  b.lower_edge, b.upper_edge, b.accuracy, b.mean_confidence);
    out += line;
  }
  return out;
}

}  // namespace shiftcal
