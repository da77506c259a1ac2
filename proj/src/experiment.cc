#include "shiftcal/experiment.h"

#include <cstdio>

#include "shiftcal/random.h"
#include "shiftcal/scaling.h"
#include "shiftcal/surrogate.h"

namespace shiftcal {

namespace {

constexpr std::uint64_t kCalSeedSalt = 0xca11b7a7e5eedULL;
constexpr std::uint64_t kTestSeedSalt = 0x7e575e7000ULL;

SynthSpec base_spec(const ExperimentConfig& config,
                    const std::vector<std::vector<double>>& means) {
  SynthSpec spec;
  spec.num_classes = config.num_classes;
  spec.dim = config.dim;
  spec.class_means = means;
  spec.within_class_std = config.within_class_std;
  spec.temperature_distortion = config.temperature_distortion;
  return spec;
}

ExperimentRow evaluate(const std::string& method, std::size_t intensity,
                       const CalibrationModel& model, const PredictionSet& test,
                       std::size_t num_bins) {
  const auto probs = apply_model(model, test);
  ExperimentRow row;
  row.method = method;
  row.intensity = intensity;
  row.ece = ece(bin_equal_mass(confidence_samples(probs, test), num_bins));
  row.accuracy = accuracy(probs, test);
  row.mean_pmax = mean_pmax(probs);
  return row;
}

}  // namespace

FeatureSet quadratic_features(const FeatureSet& features) {
  const std::size_t d = features.dim();
  std::vector<double> values;
  values.reserve(features.size() * 2 * d);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto row = features.row(i);
    values.insert(values.end(), row.begin(), row.end());
    for (double v : row) values.push_back(v * v);
  }
  return FeatureSet(2 * d, std::move(values));
}

ExperimentData prepare_experiment(const ExperimentConfig& config) {
  if (config.ladder_levels.empty() || config.test_levels.empty()) {
    throw ValidationError("experiment needs at least one ladder level and one test level");
  }
  ExperimentData data;
  data.class_means = default_class_means(config.num_classes, config.dim, config.separation,
                                         config.seed);

  // Every ladder entry perturbs the same calibration rows.
  const std::uint64_t cal_seed = splitmix64(config.seed ^ kCalSeedSalt);
  std::vector<std::pair<std::string, PredictionSet>> sets;
  for (std::size_t j = 0; j < config.ladder_levels.size(); ++j) {
    auto spec = base_spec(config, data.class_means);
    spec.n = config.n_cal;
    spec.seed = cal_seed;
    spec.shift_std = config.ladder_levels[j];
    spec.noise = config.ladder_noise;
    auto generated = generate(spec);
    if (j == 0) data.cal_features = std::move(generated.features);
    char tag[64];
    std::snprintf(tag, sizeof(tag), "%s-%zu", to_string(config.ladder_noise).c_str(), j);
    sets.emplace_back(j == 0 ? std::string("clean") : std::string(tag),
                      std::move(generated.preds));
  }
  data.ladder = std::make_shared<const SurrogateLadder>(build_ladder(std::move(sets)));

  for (std::size_t i = 0; i < config.test_levels.size(); ++i) {
    auto spec = base_spec(config, data.class_means);
    spec.n = config.n_test;
    spec.seed = splitmix64(config.seed ^ (kTestSeedSalt + i));
    spec.shift_std = config.test_levels[i];
    spec.noise = config.test_noise;
    auto generated = generate(spec);
    data.test_sets.push_back(std::move(generated.preds));
    data.test_features.push_back(std::move(generated.features));
  }
  return data;
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, prepare_experiment(config));
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config,
                                          const ExperimentData& data) {
  const PredictionSet& cal = *data.ladder->entries.front().preds;
  const CalibrationModel vanilla = VanillaModel{};
  const CalibrationModel ts =
      TemperatureModel{data.ladder->entries.front().fit.temperature, ObjectiveKind::kNll, "ts"};
  const CalibrationModel sts = sts_fit(*data.ladder);
  const FeatureSet source = quadratic_features(*data.cal_features);

  std::vector<ExperimentRow> rows;
  for (std::size_t i = 0; i < data.test_sets.size(); ++i) {
    const auto& test = data.test_sets[i];
    const FeatureSet target = quadratic_features(data.test_features[i]);
    const auto weights = estimate_weights(source, target, source);
    const CalibrationModel cpcs =
        TemperatureModel{cpcs_fit(cal, weights).temperature, ObjectiveKind::kWeightedBrier, "cpcs"};
    const CalibrationModel transcal = TemperatureModel{
        transcal_lite_fit(cal, weights).temperature, ObjectiveKind::kWeightedEce, "transcal_lite"};

    SacOptions sac_options;
    sac_options.subsample = config.subsample;
    sac_options.seed = config.seed + i;
    const auto sac = sac_select(data.ladder, test, sac_options);

    rows.push_back(evaluate("vanilla", i, vanilla, test, config.num_bins));
    rows.push_back(evaluate("ts", i, ts, test, config.num_bins));
    rows.push_back(evaluate("cpcs", i, cpcs, test, config.num_bins));
    rows.push_back(evaluate("transcal_lite", i, transcal, test, config.num_bins));
    rows.push_back(evaluate("sts", i, sts, test, config.num_bins));
    auto sac_row = evaluate("sac", i, sac, test, config.num_bins);
    sac_row.selected_index = sac.selected;
    rows.push_back(sac_row);
  }
  return rows;
}

std::string experiment_report_csv(const std::vector<ExperimentRow>& rows) {
  std::string out = "method,intensity,ece,accuracy,mean_pmax,selected_index\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%s,%zu,%.6f,%.6f,%.6f,", r.method.c_str(), r.intensity,
                  r.ece, r.accuracy, r.mean_pmax);
    out += line;
    if (r.selected_index) out += std::to_string(*r.selected_index);
    out += '\n';
  }
  return out;
}

}  // namespace shiftcal
