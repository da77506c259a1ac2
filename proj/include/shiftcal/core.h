#ifndef SHIFTCAL_CORE_H_
#define SHIFTCAL_CORE_H_

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace shiftcal {

// Input that violates a documented contract (bad shape, missing labels,
// non-finite values, unknown option). The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File could not be opened, read or written. The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lower clamp applied to probabilities before taking a logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

// Neumaier-compensated running sum. Adding the same values in the same order
// always gives the same result.
class CompensatedSum {
 public:
  void add(double value);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

// Per-sample logits with optional integer labels. Logits are stored row-major.
class PredictionSet {
 public:
  // Throws ValidationError unless num_classes >= 2, at least one row, every
  // row has num_classes finite logits and every present label is in range.
  PredictionSet(std::size_t num_classes, std::vector<std::optional<int>> labels,
                std::vector<double> logits);

  std::size_t num_classes() const { return num_classes_; }
  std::size_t size() const { return labels_.size(); }

  std::span<const double> logits(std::size_t row) const {
    return {logits_.data() + row * num_classes_, num_classes_};
  }
  std::span<const double> all_logits() const { return logits_; }

  const std::optional<int>& label(std::size_t row) const { return labels_[row]; }
  const std::vector<std::optional<int>>& labels() const { return labels_; }

  bool fully_labeled() const;
  bool fully_unlabeled() const;

  // Throws ValidationError naming `what` unless every row carries a label.
  void require_labels(const std::string& what) const;

  // Rows of `this` followed by rows of `other`. Class counts must agree.
  PredictionSet concatenated(const PredictionSet& other) const;

 private:
  std::size_t num_classes_;
  std::vector<std::optional<int>> labels_;
  std::vector<double> logits_;
};

struct ProbabilityRow {
  std::vector<double> probs;
  std::size_t predicted_class = 0;
  double pmax = 0.0;
};

enum class ObjectiveKind { kNll, kWeightedBrier, kWeightedEce };

std::string to_string(ObjectiveKind kind);
// Throws ValidationError for unknown names.
ObjectiveKind objective_from_string(const std::string& name);

struct TemperatureFit {
  double temperature = 1.0;
  double objective_value = 0.0;
  ObjectiveKind objective = ObjectiveKind::kNll;
  int evaluations = 0;
};

struct LadderEntry {
  std::string tag;
  // Absent when the ladder was read back from its JSON summary.
  std::optional<PredictionSet> preds;
  TemperatureFit fit;
  double mean_pmax = 0.0;
};

struct SurrogateLadder {
  std::vector<LadderEntry> entries;

  std::size_t size() const { return entries.size(); }
};

struct VanillaModel {};

struct TemperatureModel {
  double temperature = 1.0;
  ObjectiveKind objective = ObjectiveKind::kNll;
  // Free-form method label written alongside the model ("ts", "cpcs",
  // "transcal_lite", "sts"). Empty means plain temperature scaling.
  std::string method;
};

struct SacLadderModel {
  std::shared_ptr<const SurrogateLadder> ladder;
  // 1-based index into the ladder; empty until a test set has been matched.
  std::optional<std::size_t> selected;
};

using CalibrationModel = std::variant<VanillaModel, TemperatureModel, SacLadderModel>;

// Checks temperature positivity/finiteness and the ladder selection range.
void validate_model(const CalibrationModel& model);

// Temperature the model divides logits by. Vanilla is 1.
double effective_temperature(const CalibrationModel& model);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

// Numerically stable softmax (max subtraction). Throws ValidationError on
// non-finite input.
std::vector<double> softmax(std::span<const double> logits);

// softmax(logits / temperature) written into `out` (size K).
void tempered_softmax(std::span<const double> logits, double temperature,
                      std::span<double> out);

ProbabilityRow probability_row(std::span<const double> logits, double temperature);

std::vector<ProbabilityRow> apply_model(const CalibrationModel& model,
                                        const PredictionSet& preds);

// Vanilla pmax of every row, i.e. max softmax(logits).
std::vector<double> vanilla_pmax(const PredictionSet& preds);

}  // namespace shiftcal

#endif  // SHIFTCAL_CORE_H_
