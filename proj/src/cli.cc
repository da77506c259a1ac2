#include "shiftcal/cli.h"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "shiftcal/core.h"
#include "shiftcal/experiment.h"
#include "shiftcal/importance.h"
#include "shiftcal/io.h"
#include "shiftcal/metrics.h"
#include "shiftcal/scaling.h"
#include "shiftcal/surrogate.h"
#include "shiftcal/synth.h"

namespace shiftcal {

namespace {

namespace fs = std::filesystem;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::pair<std::string, fs::path> split_set_arg(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
    throw ValidationError("--set expects tag=path, got \"" + arg + "\"");
  }
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::vector<std::pair<std::string, PredictionSet>> read_sets(const std::vector<std::string>& args) {
  std::vector<std::pair<std::string, PredictionSet>> sets;
  for (const auto& arg : args) {
    auto [tag, path] = split_set_arg(arg);
    sets.emplace_back(tag, read_predictions(path));
  }
  return sets;
}

// Re-attaches prediction sets (<dir>/<tag>.csv) to a ladder read from JSON.
std::shared_ptr<SurrogateLadder> load_ladder(const fs::path& ladder_json,
                                             const std::optional<fs::path>& preds_dir) {
  const auto model = read_model(ladder_json);
  const auto* sac = std::get_if<SacLadderModel>(&model);
  if (!sac) {
    throw ValidationError(ladder_json.string() + ": expected a model of kind sac_ladder");
  }
  auto ladder = std::make_shared<SurrogateLadder>(*sac->ladder);
  if (preds_dir) {
    for (auto& entry : ladder->entries) {
      entry.preds = read_predictions(*preds_dir / (entry.tag + ".csv"));
    }
  }
  return ladder;
}

struct Flags {
  std::string cal, cal_feats, source_feats, target_feats, out, test, model, ladder,
      ladder_preds, truth, feats;
  std::vector<std::string> sets;
  std::string distance = "mean";
  std::vector<std::string> subsample;
  std::uint64_t seed = 0;
  std::size_t bins = kDefaultBins;
  std::size_t classes = 10, dim = 8, n = 1000;
  double shift = 0.0, distort = 1.0, separation = 4.0, within_std = 1.0;
  std::uint64_t model_seed = 0;
  std::string noise = "gaussian";
};

int fit_weighted(const Flags& f, ObjectiveKind objective, const std::string& method,
                 std::ostream& out) {
  const auto cal = read_predictions(f.cal);
  const auto cal_feats = read_features(f.cal_feats);
  if (cal_feats.size() != cal.size()) {
    throw ValidationError(f.cal_feats + ": " + std::to_string(cal_feats.size()) +
                          " feature rows for " + std::to_string(cal.size()) + " prediction rows");
  }
  const auto weights =
      estimate_weights(read_features(f.source_feats), read_features(f.target_feats), cal_feats);
  const auto fit = objective == ObjectiveKind::kWeightedBrier ? cpcs_fit(cal, weights)
                                                              : transcal_lite_fit(cal, weights);
  write_model(f.out, TemperatureModel{fit.temperature, objective, method});
  out << "temperature=" << fixed6(fit.temperature) << "\n";
  return kExitOk;
}

int cmd_fit_ts(const Flags& f, std::ostream& out) {
  const auto fit = fit_temperature(read_predictions(f.cal), ObjectiveKind::kNll);
  write_model(f.out, TemperatureModel{fit.temperature, ObjectiveKind::kNll, ""});
  out << "temperature=" << fixed6(fit.temperature) << "\n";
  return kExitOk;
}

int cmd_build_ladder(const Flags& f, std::ostream& out) {
  auto ladder = std::make_shared<SurrogateLadder>(build_ladder(read_sets(f.sets)));
  for (std::size_t j = 0; j < ladder->size(); ++j) {
    const auto& e = ladder->entries[j];
    out << j + 1 << " " << e.tag << " temperature=" << fixed6(e.fit.temperature)
        << " mean_pmax=" << fixed6(e.mean_pmax) << "\n";
  }
  write_model(f.out, SacLadderModel{ladder, std::nullopt});
  return kExitOk;
}

// --subsample may be given bare, meaning the default size.
std::optional<std::size_t> subsample_size(const Flags& f, const CLI::Option* opt) {
  if (opt->count() == 0) return std::nullopt;
  if (f.subsample.empty() || f.subsample.front().empty()) return kDefaultSubsample;
  const std::string& text = f.subsample.front();
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) {
    throw ValidationError("--subsample expects a positive integer, got \"" + text + "\"");
  }
  return value;
}

int cmd_sac(const Flags& f, const CLI::Option* subsample_opt, std::ostream& out) {
  SacOptions options;
  options.distance = distance_from_string(f.distance);
  options.seed = f.seed;
  options.subsample = subsample_size(f, subsample_opt);
  std::optional<fs::path> dir;
  if (!f.ladder_preds.empty()) dir = f.ladder_preds;
  if (options.distance != Distance::kMean && !dir) {
    throw ValidationError("--distance " + f.distance + " needs --ladder-preds");
  }
  const auto ladder = load_ladder(f.ladder, dir);
  const auto model = sac_select(ladder, read_predictions(f.test), options);
  write_model(f.out, model);
  const auto& chosen = ladder->entries[*model.selected - 1];
  out << "selected=" << *model.selected << " tag=" << chosen.tag
      << " temperature=" << fixed6(chosen.fit.temperature) << "\n";
  return kExitOk;
}

int cmd_sts(const Flags& f, std::ostream& out) {
  SurrogateLadder ladder;
  if (!f.sets.empty()) {
    for (auto& [tag, preds] : read_sets(f.sets)) {
      LadderEntry entry;
      entry.tag = tag;
      entry.preds = std::move(preds);
      ladder.entries.push_back(std::move(entry));
    }
  } else if (!f.ladder.empty() && !f.ladder_preds.empty()) {
    ladder = *load_ladder(f.ladder, fs::path(f.ladder_preds));
  } else {
    throw ValidationError("sts needs --set tag=path entries or --ladder with --ladder-preds");
  }
  const auto model = sts_fit(ladder);
  write_model(f.out, model);
  out << "temperature=" << fixed6(model.temperature) << "\n";
  return kExitOk;
}

int cmd_eval(const Flags& f, std::ostream& out) {
  const auto test = read_predictions(f.test);
  const auto model = read_model(f.model);
  const auto probs = apply_model(model, test);
  const auto binned = bin_equal_mass(confidence_samples(probs, test), f.bins);
  out << "ece=" << fixed6(ece(binned)) << "\n"
      << "nll=" << fixed6(nll(probs, test)) << "\n"
      << "brier=" << fixed6(brier(probs, test)) << "\n"
      << "accuracy=" << fixed6(accuracy(probs, test)) << "\n";
  return kExitOk;
}

int cmd_reliability(const Flags& f, std::ostream& out) {
  const auto test = read_predictions(f.test);
  const auto probs = apply_model(read_model(f.model), test);
  const auto binned = bin_equal_mass(confidence_samples(probs, test), f.bins);
  write_file_atomic(f.out, reliability_csv(binned));
  out << "ece=" << fixed6(ece(binned)) << "\n";
  return kExitOk;
}

int cmd_synth(const Flags& f, std::ostream& out) {
  SynthSpec spec;
  spec.num_classes = f.classes;
  spec.dim = f.dim;
  spec.class_means = default_class_means(f.classes, f.dim, f.separation, f.model_seed);
  spec.within_class_std = f.within_std;
  spec.shift_std = f.shift;
  spec.noise = noise_from_string(f.noise);
  spec.temperature_distortion = f.distort;
  spec.n = f.n;
  spec.seed = f.seed;
  const auto data = generate(spec);
  write_predictions(f.out, data.preds);
  if (!f.truth.empty()) write_true_confidence(f.truth, data.true_confidence);
  if (!f.feats.empty()) write_features(f.feats, data.features);
  out << "rows=" << data.preds.size() << "\n";
  return kExitOk;
}

int cmd_experiment(const Flags& f, const CLI::Option* seed_opt, const CLI::Option* subsample_opt,
                   std::ostream& out) {
  ExperimentConfig config;
  if (seed_opt->count() > 0) config.seed = f.seed;
  config.num_bins = f.bins;
  config.subsample = subsample_size(f, subsample_opt);
  const auto report = experiment_report_csv(run_experiment(config));
  write_file_atomic(f.out, report);
  out << report;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Post-hoc confidence calibration under distribution shift", "shiftcal"};
  app.require_subcommand(1);
  Flags f;

  auto* fit_ts = app.add_subcommand("fit-ts", "Fit an NLL temperature on a labeled set");
  fit_ts->add_option("--cal", f.cal, "Labeled calibration predictions")->required();
  fit_ts->add_option("--out", f.out, "Model JSON output")->required();

  auto add_weighted = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--cal", f.cal, "Labeled calibration predictions")->required();
    sub->add_option("--cal-feats", f.cal_feats, "Features of the calibration rows")->required();
    sub->add_option("--source-feats", f.source_feats, "Source-domain features")->required();
    sub->add_option("--target-feats", f.target_feats, "Target-domain features")->required();
    sub->add_option("--out", f.out, "Model JSON output")->required();
    return sub;
  };
  auto* fit_cpcs = add_weighted("fit-cpcs", "Importance-weighted Brier temperature (CPCS)");
  auto* fit_wece = add_weighted("fit-wece", "Importance-weighted ECE temperature (transcal_lite)");

  auto* ladder_cmd = app.add_subcommand("build-ladder", "Fit temperatures for surrogate sets");
  ladder_cmd->add_option("--set", f.sets, "tag=predictions.csv, first is the clean set")
      ->required()
      ->take_all();
  ladder_cmd->add_option("--out", f.out, "Ladder JSON output")->required();

  auto* sac_cmd = app.add_subcommand("sac", "Select the closest surrogate for a test set");
  sac_cmd->add_option("--ladder", f.ladder, "Ladder JSON from build-ladder")->required();
  sac_cmd->add_option("--ladder-preds", f.ladder_preds, "Directory holding <tag>.csv files");
  sac_cmd->add_option("--test", f.test, "Test predictions (labels optional)")->required();
  sac_cmd->add_option("--distance", f.distance, "mean, ks or w1");
  auto* sac_subsample = sac_cmd->add_option("--subsample", f.subsample,
                                            "Match on a random subsample (default 100)")
                            ->expected(0, 1);
  sac_cmd->add_option("--seed", f.seed, "Subsample seed");
  sac_cmd->add_option("--out", f.out, "Model JSON output")->required();

  auto* sts_cmd = app.add_subcommand("sts", "Fit one temperature on the union of surrogates");
  sts_cmd->add_option("--set", f.sets, "tag=predictions.csv")->take_all();
  sts_cmd->add_option("--ladder", f.ladder, "Ladder JSON from build-ladder");
  sts_cmd->add_option("--ladder-preds", f.ladder_preds, "Directory holding <tag>.csv files");
  sts_cmd->add_option("--out", f.out, "Model JSON output")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Calibration metrics of a model on a test set");
  eval_cmd->add_option("--test", f.test, "Labeled test predictions")->required();
  eval_cmd->add_option("--model", f.model, "Model JSON")->required();
  eval_cmd->add_option("--bins", f.bins, "Equal-mass bins")->check(CLI::PositiveNumber);

  auto* rel_cmd = app.add_subcommand("reliability", "Export reliability-diagram bins");
  rel_cmd->add_option("--test", f.test, "Labeled test predictions")->required();
  rel_cmd->add_option("--model", f.model, "Model JSON")->required();
  rel_cmd->add_option("--bins", f.bins, "Equal-mass bins")->check(CLI::PositiveNumber);
  rel_cmd->add_option("--out", f.out, "CSV output")->required();

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic shifted prediction set");
  synth_cmd->add_option("--classes", f.classes, "Number of classes")->check(CLI::Range(2, 100000));
  synth_cmd->add_option("--dim", f.dim, "Feature dimension")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--shift", f.shift, "Noise std added to features");
  synth_cmd->add_option("--noise", f.noise, "gaussian or uniform");
  synth_cmd->add_option("--distort", f.distort, "Logit temperature distortion T0");
  synth_cmd->add_option("--separation", f.separation, "Typical distance between class means");
  synth_cmd->add_option("--within-std", f.within_std, "Within-class feature std");
  synth_cmd->add_option("--n", f.n, "Rows")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", f.seed, "Sample seed");
  synth_cmd->add_option("--model-seed", f.model_seed, "Seed for the class means");
  synth_cmd->add_option("--out", f.out, "Prediction CSV output")->required();
  synth_cmd->add_option("--truth", f.truth, "True-confidence CSV output");
  synth_cmd->add_option("--feats", f.feats, "Feature CSV output");

  auto* exp_cmd = app.add_subcommand("experiment", "Synthetic shift benchmark report");
  auto* exp_seed = exp_cmd->add_option("--seed", f.seed, "Experiment seed (default 7)");
  exp_cmd->add_option("--bins", f.bins, "Equal-mass bins")->check(CLI::PositiveNumber);
  auto* exp_subsample = exp_cmd->add_option("--subsample", f.subsample,
                                            "SAC matches on a random subsample (default 100)")
                            ->expected(0, 1);
  exp_cmd->add_option("--out", f.out, "Report CSV output")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (*fit_ts) return cmd_fit_ts(f, out);
    if (*fit_cpcs) return fit_weighted(f, ObjectiveKind::kWeightedBrier, "cpcs", out);
    if (*fit_wece) return fit_weighted(f, ObjectiveKind::kWeightedEce, "transcal_lite", out);
    if (*ladder_cmd) return cmd_build_ladder(f, out);
    if (*sac_cmd) return cmd_sac(f, sac_subsample, out);
    if (*sts_cmd) return cmd_sts(f, out);
    if (*eval_cmd) return cmd_eval(f, out);
    if (*rel_cmd) return cmd_reliability(f, out);
    if (*synth_cmd) return cmd_synth(f, out);
    if (*exp_cmd) return cmd_experiment(f, exp_seed, exp_subsample, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace shiftcal
