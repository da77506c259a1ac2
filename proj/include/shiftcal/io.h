#ifndef SHIFTCAL_IO_H_
#define SHIFTCAL_IO_H_

#include <filesystem>
#include <istream>
#include <span>
#include <string>

#include "shiftcal/core.h"
#include "shiftcal/importance.h"

namespace shiftcal {

// Prediction CSV: header "label,logit_0,...,logit_{K-1}", one row per sample.
// Label -1 marks an unlabeled row. Parsing is strict; every malformed line is
// reported with its 1-based line number. `source` names the input in messages.
PredictionSet parse_predictions(std::istream& in, const std::string& source = "<input>");
PredictionSet read_predictions(const std::filesystem::path& path);
std::string format_predictions(const PredictionSet& preds);
void write_predictions(const std::filesystem::path& path, const PredictionSet& preds);

// Feature CSV: header "feat_0,...,feat_{d-1}". Rows align positionally with
// the prediction file they describe.
FeatureSet parse_features(std::istream& in, const std::string& source = "<input>");
FeatureSet read_features(const std::filesystem::path& path);
std::string format_features(const FeatureSet& features);
void write_features(const std::filesystem::path& path, const FeatureSet& features);

// Single-column CSV with header "true_confidence".
void write_true_confidence(const std::filesystem::path& path, std::span<const double> values);

// Temperatures are written with 6 significant digits.
//   {"kind":"vanilla"}
//   {"kind":"temperature","temperature":1.832,"objective":"nll"}
//   {"kind":"sac_ladder","entries":[{"tag":..,"temperature":..,"mean_pmax":..}],
//    "selected":3}
// A temperature model with a method label also carries "method":"<label>".
// Ladder entries read back from JSON carry no prediction sets.
std::string model_to_json(const CalibrationModel& model);
CalibrationModel model_from_json(const std::string& text);
void write_model(const std::filesystem::path& path, const CalibrationModel& model);
CalibrationModel read_model(const std::filesystem::path& path);

double round_significant(double value, int digits);

// Writes to a sibling temporary file and renames it into place, so a failed
// run never leaves a partial output. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace shiftcal

#endif  // SHIFTCAL_IO_H_
