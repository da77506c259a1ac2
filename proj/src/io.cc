#include "shiftcal/io.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace shiftcal {

namespace {

using Json = nlohmann::ordered_json;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string line_error(const std::string& source, std::size_t line, const std::string& what) {
  return source + ": line " + std::to_string(line) + ": " + what;
}

double parse_real(std::string_view token, const std::string& source, std::size_t line) {
  double value = 0.0;
  const char* end = token.data() + token.size();
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || token.empty()) {
    throw ValidationError(line_error(source, line, "invalid number \"" + std::string(token) + "\""));
  }
  if (!std::isfinite(value)) {
    throw ValidationError(line_error(source, line, "non-finite value \"" + std::string(token) + "\""));
  }
  return value;
}

int parse_label(std::string_view token, const std::string& source, std::size_t line) {
  int value = 0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || token.empty()) {
    throw ValidationError(line_error(source, line, "invalid label \"" + std::string(token) + "\""));
  }
  return value;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

// Reads the header and checks it is prefix_0,...; `leading` names fixed
// columns that come first. Returns the number of indexed columns.
std::size_t parse_header(std::istream& in, const std::string& source,
                         const std::vector<std::string>& leading, const std::string& prefix) {
  std::string expected = "";
  for (const auto& col : leading) expected += col + ",";
  expected += prefix + "0";
  std::string line;
  if (!next_line(in, line)) {
    throw ValidationError(source + ": missing header, expected a line starting with \"" +
                          expected + "\"");
  }
  const auto fields = split_fields(line);
  bool ok = fields.size() > leading.size();
  for (std::size_t i = 0; ok && i < leading.size(); ++i) ok = fields[i] == leading[i];
  for (std::size_t i = leading.size(); ok && i < fields.size(); ++i) {
    ok = fields[i] == prefix + std::to_string(i - leading.size());
  }
  if (!ok) {
    throw ValidationError(source + ": line 1: malformed header, expected a line starting with \"" +
                          expected + "\"");
  }
  return fields.size() - leading.size();
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

}  // namespace

PredictionSet parse_predictions(std::istream& in, const std::string& source) {
  const std::size_t k = parse_header(in, source, {"label"}, "logit_");
  std::vector<std::optional<int>> labels;
  std::vector<double> logits;
  std::string line;
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != k + 1) {
      throw ValidationError(line_error(source, line_no,
                                       "expected " + std::to_string(k + 1) + " fields, got " +
                                           std::to_string(fields.size())));
    }
    const int label = parse_label(fields[0], source, line_no);
    if (label < -1 || label >= static_cast<int>(k)) {
      throw ValidationError(line_error(source, line_no,
                                       "label " + std::to_string(label) + " outside [-1, " +
                                           std::to_string(k - 1) + "]"));
    }
    labels.push_back(label == -1 ? std::nullopt : std::optional<int>(label));
    for (std::size_t c = 1; c <= k; ++c) logits.push_back(parse_real(fields[c], source, line_no));
  }
  if (labels.empty()) throw ValidationError(source + ": no data rows");
  return PredictionSet(k, std::move(labels), std::move(logits));
}

PredictionSet read_predictions(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_predictions(in, path.string());
}

std::string format_predictions(const PredictionSet& preds) {
  std::string out = "label";
  for (std::size_t c = 0; c < preds.num_classes(); ++c) out += ",logit_" + std::to_string(c);
  out += '\n';
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out += std::to_string(preds.label(i).value_or(-1));
    for (double v : preds.logits(i)) {
      out += ',';
      out += format_real(v);
    }
    out += '\n';
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, const PredictionSet& preds) {
  write_file_atomic(path, format_predictions(preds));
}

FeatureSet parse_features(std::istream& in, const std::string& source) {
  const std::size_t d = parse_header(in, source, {}, "feat_");
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != d) {
      throw ValidationError(line_error(source, line_no,
                                       "expected " + std::to_string(d) + " fields, got " +
                                           std::to_string(fields.size())));
    }
    for (const auto& f : fields) values.push_back(parse_real(f, source, line_no));
  }
  if (values.empty()) throw ValidationError(source + ": no data rows");
  return FeatureSet(d, std::move(values));
}

FeatureSet read_features(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_features(in, path.string());
}

std::string format_features(const FeatureSet& features) {
  std::string out;
  for (std::size_t c = 0; c < features.dim(); ++c) {
    if (c) out += ',';
    out += "feat_" + std::to_string(c);
  }
  out += '\n';
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto row = features.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_real(row[c]);
    }
    out += '\n';
  }
  return out;
}

void write_features(const std::filesystem::path& path, const FeatureSet& features) {
  write_file_atomic(path, format_features(features));
}

void write_true_confidence(const std::filesystem::path& path, std::span<const double> values) {
  std::string out = "true_confidence\n";
  for (double v : values) out += format_real(v) + '\n';
  write_file_atomic(path, out);
}

double round_significant(double value, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

std::string model_to_json(const CalibrationModel& model) {
  validate_model(model);
  Json j;
  if (std::holds_alternative<VanillaModel>(model)) {
    j["kind"] = "vanilla";
  } else if (const auto* ts = std::get_if<TemperatureModel>(&model)) {
    j["kind"] = "temperature";
    j["temperature"] = round_significant(ts->temperature, 6);
    j["objective"] = to_string(ts->objective);
    if (!ts->method.empty()) j["method"] = ts->method;
  } else {
    const auto& sac = std::get<SacLadderModel>(model);
    j["kind"] = "sac_ladder";
    Json entries = Json::array();
    for (const auto& e : sac.ladder->entries) {
      Json entry;
      entry["tag"] = e.tag;
      entry["temperature"] = round_significant(e.fit.temperature, 6);
      entry["mean_pmax"] = e.mean_pmax;
      entries.push_back(std::move(entry));
    }
    j["entries"] = std::move(entries);
    j["selected"] = sac.selected ? Json(*sac.selected) : Json(nullptr);
  }
  return j.dump() + "\n";
}

namespace {

template <typename T>
T required(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(std::string("model JSON: missing key \"") + key + "\"");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("model JSON: key \"") + key + "\" has the wrong type");
  }
}

}  // namespace

CalibrationModel model_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("model JSON: parse error: ") + e.what());
  }
  const auto kind = required<std::string>(j, "kind");
  CalibrationModel model;
  if (kind == "vanilla") {
    model = VanillaModel{};
  } else if (kind == "temperature") {
    TemperatureModel ts;
    ts.temperature = required<double>(j, "temperature");
    ts.objective = j.contains("objective") ? objective_from_string(required<std::string>(j, "objective"))
                                           : ObjectiveKind::kNll;
    if (j.contains("method")) ts.method = required<std::string>(j, "method");
    model = ts;
  } else if (kind == "sac_ladder") {
    auto ladder = std::make_shared<SurrogateLadder>();
    const Json entries = j.contains("entries") ? j.at("entries") : Json();
    if (!entries.is_array()) throw ValidationError("model JSON: \"entries\" must be an array");
    for (const auto& e : entries) {
      LadderEntry entry;
      entry.tag = required<std::string>(e, "tag");
      entry.fit.temperature = required<double>(e, "temperature");
      entry.mean_pmax = required<double>(e, "mean_pmax");
      ladder->entries.push_back(std::move(entry));
    }
    SacLadderModel sac;
    if (j.contains("selected") && !j.at("selected").is_null()) {
      sac.selected = required<std::size_t>(j, "selected");
    }
    sac.ladder = std::move(ladder);
    model = sac;
  } else {
    throw ValidationError("model JSON: unknown kind \"" + kind +
                          "\" (supported: vanilla, temperature, sac_ladder)");
  }
  validate_model(model);
  return model;
}

void write_model(const std::filesystem::path& path, const CalibrationModel& model) {
  write_file_atomic(path, model_to_json(model));
}

CalibrationModel read_model(const std::filesystem::path& path) {
  try {
    return model_from_json(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

}  // namespace shiftcal
