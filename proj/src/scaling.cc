#include "shiftcal/scaling.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace shiftcal {

namespace {

// Logits shifted so each row's maximum is 0, plus the cached labels and
// Top-1 correctness, which do not depend on T.
class ObjectiveEvaluator {
 public:
  ObjectiveEvaluator(const PredictionSet& cal, ObjectiveKind objective,
                     std::vector<double> weights, std::size_t num_bins)
      : k_(cal.num_classes()),
        n_(cal.size()),
        objective_(objective),
        weights_(std::move(weights)),
        num_bins_(num_bins),
        shifted_(cal.all_logits().begin(), cal.all_logits().end()),
        labels_(n_),
        correct_(n_),
        probs_(k_),
        samples_(objective == ObjectiveKind::kWeightedEce ? n_ : 0) {
    for (std::size_t i = 0; i < n_; ++i) {
      const auto row = cal.logits(i);
      const std::size_t top = argmax(row);
      const double top_value = row[top];
      for (std::size_t k = 0; k < k_; ++k) shifted_[i * k_ + k] -= top_value;
      labels_[i] = static_cast<std::size_t>(*cal.label(i));
      correct_[i] = top == labels_[i];
    }
    CompensatedSum total;
    for (double w : weights_) total.add(w);
    weight_total_ = weights_.empty() ? static_cast<double>(n_) : total.value();
  }

  double operator()(double temperature) {
    ++evaluations_;
    switch (objective_) {
      case ObjectiveKind::kNll:
        return nll(temperature);
      case ObjectiveKind::kWeightedBrier:
        return brier(temperature);
      case ObjectiveKind::kWeightedEce:
        return weighted_ece(temperature);
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  int evaluations() const { return evaluations_; }

 private:
  double weight(std::size_t i) const { return weights_.empty() ? 1.0 : weights_[i]; }

  std::span<const double> row(std::size_t i) const {
    return {shifted_.data() + i * k_, k_};
  }

  double nll(double t) const {
    const double max_loss = -std::log(kProbabilityFloor);
    CompensatedSum sum;
    for (std::size_t i = 0; i < n_; ++i) {
      const auto z = row(i);
      double denom = 0.0;
      for (double v : z) denom += std::exp(v / t);
      const double loss = std::log(denom) - z[labels_[i]] / t;
      sum.add(weight(i) * std::min(loss, max_loss));
    }
    return sum.value() / weight_total_;
  }

  double brier(double t) {
    CompensatedSum sum;
    for (std::size_t i = 0; i < n_; ++i) {
      tempered_softmax(row(i), t, probs_);
      double term = 0.0;
      for (std::size_t k = 0; k < k_; ++k) {
        const double d = probs_[k] - (k == labels_[i] ? 1.0 : 0.0);
        term += d * d;
      }
      sum.add(weight(i) * term);
    }
    return sum.value() / weight_total_;
  }

  double weighted_ece(double t) {
    for (std::size_t i = 0; i < n_; ++i) {
      // Row maximum is 0, so pmax = 1 / sum_k exp(z_k / t).
      double denom = 0.0;
      for (double v : row(i)) denom += std::exp(v / t);
      samples_[i] = {1.0 / denom, correct_[i]};
    }
    if (weights_.empty()) return ece(bin_equal_mass(samples_, num_bins_));
    return ece(bin_equal_mass(samples_, weights_, num_bins_));
  }

  std::size_t k_;
  std::size_t n_;
  ObjectiveKind objective_;
  std::vector<double> weights_;
  std::size_t num_bins_;
  std::vector<double> shifted_;
  std::vector<std::size_t> labels_;
  std::vector<bool> correct_;
  std::vector<double> probs_;
  std::vector<ConfidenceSample> samples_;
  double weight_total_ = 0.0;
  int evaluations_ = 0;
};

std::vector<double> normalized_weights(std::span<const double> weights, std::size_t n) {
  if (weights.size() != n) {
    throw ValidationError("weights: expected " + std::to_string(n) +
                          " values, got " + std::to_string(weights.size()));
  }
  CompensatedSum sum;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ValidationError("weights must be non-negative and finite");
    }
    sum.add(w);
  }
  if (!(sum.value() > 0.0)) {
    throw ValidationError("weights sum to zero");
  }
  const double mean = sum.value() / static_cast<double>(n);
  std::vector<double> out(weights.begin(), weights.end());
  for (double& w : out) w /= mean;
  return out;
}

void check_not_degenerate(const PredictionSet& cal) {
  const std::size_t k = cal.num_classes();
  bool every_row_flat = true;
  for (std::size_t i = 0; i < cal.size() && every_row_flat; ++i) {
    const auto z = cal.logits(i);
    every_row_flat = std::all_of(z.begin(), z.end(), [&](double v) { return v == z[0]; });
  }
  if (every_row_flat) {
    throw ValidationError(
        "degenerate calibration set: every row has constant logits, the objective "
        "does not depend on the temperature");
  }
  const auto first = cal.logits(0);
  for (std::size_t i = 1; i < cal.size(); ++i) {
    if (cal.label(i) != cal.label(0)) return;
    const auto z = cal.logits(i);
    for (std::size_t c = 0; c < k; ++c) {
      if (z[c] != first[c]) return;
    }
  }
  if (cal.size() > 1) {
    throw ValidationError(
        "degenerate calibration set: all rows share one label and identical logits");
  }
}

}  // namespace

TemperatureFit fit_temperature(const PredictionSet& cal, ObjectiveKind objective,
                               std::optional<std::span<const double>> weights,
                               const FitOptions& options) {
  cal.require_labels("temperature fit");
  check_not_degenerate(cal);
  std::vector<double> w;
  if (weights) w = normalized_weights(*weights, cal.size());

  ObjectiveEvaluator f(cal, objective, std::move(w), options.num_bins);

  const double log_lo = std::log(kMinTemperature);
  const double log_hi = std::log(kMaxTemperature);
  const std::size_t n_grid = kTemperatureGridPoints;
  std::vector<double> grid(n_grid);
  for (std::size_t i = 0; i < n_grid; ++i) {
    grid[i] = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) /
                                    static_cast<double>(n_grid - 1));
  }
  grid.front() = kMinTemperature;
  grid.back() = kMaxTemperature;

  std::size_t best_index = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_grid; ++i) {
    const double v = f(grid[i]);
    if (v < best_value) {
      best_value = v;
      best_index = i;
    }
  }
  double best_t = grid[best_index];

  // Golden-section refinement on the grid cell pair around the best point.
  double a = grid[best_index == 0 ? 0 : best_index - 1];
  double b = grid[std::min(best_index + 1, n_grid - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > kTemperatureTolerance) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (a + b);
  const double fmid = f(mid);
  for (auto [t, v] : {std::pair{c, fc}, std::pair{d, fd}, std::pair{mid, fmid}}) {
    if (v < best_value) {
      best_value = v;
      best_t = t;
    }
  }

  if (!std::isfinite(best_value)) {
    throw ValidationError("temperature fit produced a non-finite objective");
  }
  TemperatureFit fit;
  fit.temperature = best_t;
  fit.objective_value = best_value;
  fit.objective = objective;
  fit.evaluations = f.evaluations();
  return fit;
}

}  // namespace shiftcal
