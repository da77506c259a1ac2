#include "shiftcal/experiment.h"

#include <gtest/gtest.h>

namespace shiftcal {
namespace {

ExperimentConfig small_config() {
  ExperimentConfig config;
  config.n_cal = 1500;
  config.n_test = 2000;
  return config;
}

TEST(Experiment, RowsCoverEveryMethodAndIntensity) {
  const auto config = small_config();
  const auto rows = run_experiment(config);
  const std::vector<std::string> methods{"vanilla", "ts", "cpcs", "transcal_lite", "sts", "sac"};
  ASSERT_EQ(rows.size(), methods.size() * config.test_levels.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].method, methods[i % methods.size()]);
    EXPECT_EQ(rows[i].intensity, i / methods.size());
    EXPECT_EQ(rows[i].selected_index.has_value(), rows[i].method == "sac");
    EXPECT_GE(rows[i].ece, 0.0);
  }
}

TEST(Experiment, TemperatureMethodsKeepAccuracy) {
  const auto rows = run_experiment(small_config());
  for (const auto& r : rows) {
    const auto& vanilla = rows[r.intensity * 6];
    EXPECT_EQ(r.accuracy, vanilla.accuracy) << r.method;
  }
}

TEST(Experiment, SacMatchesTsOnCleanData) {
  const auto rows = run_experiment(small_config());
  EXPECT_EQ(rows[5].selected_index, 1u);
  EXPECT_EQ(rows[5].ece, rows[1].ece);
}

TEST(Experiment, SacSelectionTracksIntensity) {
  const auto rows = run_experiment(ExperimentConfig{});
  std::vector<std::size_t> picks;
  for (const auto& r : rows) {
    if (r.method == "sac") picks.push_back(*r.selected_index);
  }
  ASSERT_EQ(picks.size(), 5u);
  int inversions = 0;
  for (std::size_t i = 1; i < picks.size(); ++i) inversions += picks[i] < picks[i - 1] ? 1 : 0;
  EXPECT_LE(inversions, 1);
}

TEST(Experiment, ReportIsDeterministic) {
  const auto config = small_config();
  const auto a = experiment_report_csv(run_experiment(config));
  const auto b = experiment_report_csv(run_experiment(config));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("method,intensity,ece,accuracy,mean_pmax,selected_index\nvanilla,0,", 0), 0u);
  auto other = config;
  other.seed = 8;
  EXPECT_NE(experiment_report_csv(run_experiment(other)), a);
}

TEST(Experiment, ReportFormatting) {
  const std::vector<ExperimentRow> rows{{"vanilla", 0, 0.1234564, 0.5, 0.25, std::nullopt},
                                        {"sac", 3, 0.0, 1.0, 0.999999951, 2}};
  EXPECT_EQ(experiment_report_csv(rows),
            "method,intensity,ece,accuracy,mean_pmax,selected_index\n"
            "vanilla,0,0.123456,0.500000,0.250000,\n"
            "sac,3,0.000000,1.000000,1.000000,2\n");
}

TEST(QuadraticFeatures, AppendsSquares) {
  const auto q = quadratic_features(FeatureSet(2, {1.0, -2.0, 3.0, 0.5}));
  EXPECT_EQ(q.dim(), 4u);
  const std::vector<double> got(q.values().begin(), q.values().end());
  EXPECT_EQ(got, (std::vector<double>{1.0, -2.0, 1.0, 4.0, 3.0, 0.5, 9.0, 0.25}));
}

}  // namespace
}  // namespace shiftcal
