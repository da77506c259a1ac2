#include "shiftcal/core.h"

#include <algorithm>
#include <cmath>

namespace shiftcal {

void CompensatedSum::add(double value) {
  const double t = sum_ + value;
  if (std::abs(sum_) >= std::abs(value)) {
    compensation_ += (sum_ - t) + value;
  } else {
    compensation_ += (value - t) + sum_;
  }
  sum_ = t;
}

PredictionSet::PredictionSet(std::size_t num_classes,
                             std::vector<std::optional<int>> labels,
                             std::vector<double> logits)
    : num_classes_(num_classes), labels_(std::move(labels)), logits_(std::move(logits)) {
  if (num_classes_ < 2) {
    throw ValidationError("prediction set needs at least 2 classes, got " +
                          std::to_string(num_classes_));
  }
  if (labels_.empty()) {
    throw ValidationError("prediction set has no rows");
  }
  if (logits_.size() != labels_.size() * num_classes_) {
    throw ValidationError("prediction set: expected " +
                          std::to_string(labels_.size() * num_classes_) +
                          " logits for " + std::to_string(labels_.size()) +
                          " rows, got " + std::to_string(logits_.size()));
  }
  for (std::size_t row = 0; row < labels_.size(); ++row) {
    const auto& label = labels_[row];
    if (label && (*label < 0 || static_cast<std::size_t>(*label) >= num_classes_)) {
      throw ValidationError("row " + std::to_string(row) + ": label " +
                            std::to_string(*label) + " outside [0, " +
                            std::to_string(num_classes_ - 1) + "]");
    }
    for (double v : this->logits(row)) {
      if (!std::isfinite(v)) {
        throw ValidationError("row " + std::to_string(row) + ": non-finite logit");
      }
    }
  }
}

bool PredictionSet::fully_labeled() const {
  return std::all_of(labels_.begin(), labels_.end(),
                     [](const auto& l) { return l.has_value(); });
}

bool PredictionSet::fully_unlabeled() const {
  return std::none_of(labels_.begin(), labels_.end(),
                      [](const auto& l) { return l.has_value(); });
}

void PredictionSet::require_labels(const std::string& what) const {
  for (std::size_t row = 0; row < labels_.size(); ++row) {
    if (!labels_[row]) {
      throw ValidationError(what + ": row " + std::to_string(row) + " has no label");
    }
  }
}

PredictionSet PredictionSet::concatenated(const PredictionSet& other) const {
  if (other.num_classes_ != num_classes_) {
    throw ValidationError("cannot concatenate prediction sets with " +
                          std::to_string(num_classes_) + " and " +
                          std::to_string(other.num_classes_) + " classes");
  }
  std::vector<std::optional<int>> labels = labels_;
  labels.insert(labels.end(), other.labels_.begin(), other.labels_.end());
  std::vector<double> logits = logits_;
  logits.insert(logits.end(), other.logits_.begin(), other.logits_.end());
  return PredictionSet(num_classes_, std::move(labels), std::move(logits));
}

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::kNll:
      return "nll";
    case ObjectiveKind::kWeightedBrier:
      return "weighted_brier";
    case ObjectiveKind::kWeightedEce:
      return "weighted_ece";
  }
  return "unknown";
}

ObjectiveKind objective_from_string(const std::string& name) {
  if (name == "nll") return ObjectiveKind::kNll;
  if (name == "weighted_brier") return ObjectiveKind::kWeightedBrier;
  if (name == "weighted_ece") return ObjectiveKind::kWeightedEce;
  throw ValidationError("unknown objective \"" + name +
                        "\" (supported: nll, weighted_brier, weighted_ece)");
}

namespace {

void check_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw ValidationError("temperature must be positive and finite, got " +
                          std::to_string(t));
  }
}

}  // namespace

void validate_model(const CalibrationModel& model) {
  if (const auto* ts = std::get_if<TemperatureModel>(&model)) {
    check_temperature(ts->temperature);
  } else if (const auto* sac = std::get_if<SacLadderModel>(&model)) {
    if (!sac->ladder || sac->ladder->entries.empty()) {
      throw ValidationError("sac_ladder model has no entries");
    }
    for (const auto& entry : sac->ladder->entries) {
      check_temperature(entry.fit.temperature);
    }
    if (sac->selected &&
        (*sac->selected < 1 || *sac->selected > sac->ladder->entries.size())) {
      throw ValidationError("sac_ladder selected index " +
                            std::to_string(*sac->selected) + " outside [1, " +
                            std::to_string(sac->ladder->entries.size()) + "]");
    }
  }
}

double effective_temperature(const CalibrationModel& model) {
  validate_model(model);
  if (const auto* ts = std::get_if<TemperatureModel>(&model)) {
    return ts->temperature;
  }
  if (const auto* sac = std::get_if<SacLadderModel>(&model)) {
    if (!sac->selected) {
      throw ValidationError(
          "sac_ladder model has no selected entry; run selection against a test set first");
    }
    return sac->ladder->entries[*sac->selected - 1].fit.temperature;
  }
  return 1.0;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

void tempered_softmax(std::span<const double> logits, double temperature,
                      std::span<double> out) {
  const double top = logits[argmax(logits)];
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp((logits[k] - top) / temperature);
    total += out[k];
  }
  for (double& p : out) p /= total;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.size() < 2) {
    throw ValidationError("softmax needs at least 2 logits");
  }
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (!std::isfinite(logits[k])) {
      throw ValidationError("softmax: non-finite logit at index " + std::to_string(k));
    }
  }
  std::vector<double> out(logits.size());
  tempered_softmax(logits, 1.0, out);
  return out;
}

ProbabilityRow probability_row(std::span<const double> logits, double temperature) {
  ProbabilityRow row;
  row.probs.resize(logits.size());
  tempered_softmax(logits, temperature, row.probs);
  // argmax of the logits, so the predicted class never depends on T.
  row.predicted_class = argmax(logits);
  row.pmax = row.probs[row.predicted_class];
  return row;
}

std::vector<ProbabilityRow> apply_model(const CalibrationModel& model,
                                        const PredictionSet& preds) {
  const double temperature = effective_temperature(model);
  std::vector<ProbabilityRow> rows;
  rows.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    rows.push_back(probability_row(preds.logits(i), temperature));
  }
  return rows;
}

std::vector<double> vanilla_pmax(const PredictionSet& preds) {
  std::vector<double> out(preds.size());
  std::vector<double> probs(preds.num_classes());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto logits = preds.logits(i);
    tempered_softmax(logits, 1.0, probs);
    out[i] = probs[argmax(logits)];
  }
  return out;
}

}  // namespace shiftcal
