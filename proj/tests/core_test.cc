#include "shiftcal/core.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace shiftcal {
namespace {

PredictionSet one_row(std::vector<double> logits, std::optional<int> label = 0) {
  const std::size_t k = logits.size();
  return PredictionSet(k, {label}, std::move(logits));
}

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) h -= v * std::log(v);
  return h;
}

TEST(Softmax, UniformForEqualLogits) {
  const std::vector<double> logits{0, 0, 0, 0};
  for (double p : softmax(logits)) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(Softmax, AnalyticTwoClass) {
  const std::vector<double> logits{std::log(2.0), 0.0};
  const auto p = softmax(logits);
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  const std::vector<double> logits{1000.0, 0.0};
  const auto p = softmax(logits);
  EXPECT_TRUE(std::isfinite(p[0]));
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_GE(p[1], 0.0);
  EXPECT_LT(p[1], 1e-300);
}

TEST(Softmax, RejectsNonFinite) {
  const std::vector<double> logits{0.0, NAN};
  EXPECT_THROW(softmax(logits), ValidationError);
  const std::vector<double> inf{INFINITY, 0.0};
  EXPECT_THROW(softmax(inf), ValidationError);
}

TEST(Softmax, ShiftInvarianceAndNormalization) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> logits(2 + trial % 9);
    for (double& v : logits) v = u(gen);
    const double c = u(gen);
    std::vector<double> shifted = logits;
    for (double& v : shifted) v += c;
    const auto p = softmax(logits);
    const auto q = softmax(shifted);
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      EXPECT_NEAR(p[k], q[k], 1e-12);
      EXPECT_GE(p[k], 0.0);
      EXPECT_LE(p[k], 1.0);
      total += p[k];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Argmax, TiesGoToLowestIndex) {
  const std::vector<double> v{1.0, 3.0, 3.0, 2.0};
  EXPECT_EQ(argmax(v), 1u);
  const auto row = probability_row(std::vector<double>{0.5, 0.5, 0.5}, 1.0);
  EXPECT_EQ(row.predicted_class, 0u);
}

TEST(PredictionSet, Validation) {
  EXPECT_THROW(PredictionSet(1, {0}, {1.0}), ValidationError);
  EXPECT_THROW(PredictionSet(2, {}, {}), ValidationError);
  EXPECT_THROW(PredictionSet(2, {0}, {1.0}), ValidationError);
  EXPECT_THROW(PredictionSet(2, {2}, {1.0, 0.0}), ValidationError);
  EXPECT_THROW(PredictionSet(2, {0}, {NAN, 0.0}), ValidationError);
  try {
    PredictionSet(2, {0, 1}, {0.0, 0.0, 1.0, INFINITY});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
  const PredictionSet mixed(2, {0, std::nullopt}, {0.0, 1.0, 1.0, 0.0});
  EXPECT_FALSE(mixed.fully_labeled());
  EXPECT_FALSE(mixed.fully_unlabeled());
  EXPECT_THROW(mixed.require_labels("test"), ValidationError);
}

TEST(ApplyModel, UnitTemperatureMatchesVanilla) {
  const PredictionSet preds(3, {0, 1, 2}, {3, 1, 0, -2, 5, 0.5, 1e3, 1e3 - 1, -7});
  const auto vanilla = apply_model(VanillaModel{}, preds);
  const auto t1 = apply_model(TemperatureModel{1.0, ObjectiveKind::kNll, ""}, preds);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(vanilla[i].probs, t1[i].probs);
    EXPECT_EQ(vanilla[i].pmax, t1[i].pmax);
  }
}

TEST(ApplyModel, TemperatureTwoAnalytic) {
  const auto rows = apply_model(TemperatureModel{2.0, ObjectiveKind::kNll, ""},
                                one_row({2.0, 0.0}));
  const double e = std::exp(1.0);
  EXPECT_NEAR(rows[0].probs[0], e / (e + 1.0), 1e-15);
  EXPECT_NEAR(rows[0].probs[0], 0.73106, 1e-5);
  EXPECT_NEAR(rows[0].probs[1], 0.26894, 1e-5);
}

TEST(ApplyModel, HighTemperatureFlattens) {
  const auto preds = one_row({3.0, 1.0, 0.0});
  const auto cold = apply_model(TemperatureModel{1.0, ObjectiveKind::kNll, ""}, preds);
  const auto hot = apply_model(TemperatureModel{10.0, ObjectiveKind::kNll, ""}, preds);
  EXPECT_GT(entropy(hot[0].probs), entropy(cold[0].probs));
  EXPECT_LT(hot[0].pmax, cold[0].pmax);
  EXPECT_LT(std::log(3.0) - entropy(hot[0].probs), 0.02);
}

TEST(ApplyModel, ArgmaxInvariantUnderTemperature) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> z(0.0, 4.0);
  std::vector<std::optional<int>> labels(300, 0);
  std::vector<double> logits(300 * 6);
  for (double& v : logits) v = z(gen);
  const PredictionSet preds(6, labels, logits);
  const auto base = apply_model(VanillaModel{}, preds);
  for (double t : {0.05, 0.3, 1.7, 20.0}) {
    const auto rows = apply_model(TemperatureModel{t, ObjectiveKind::kNll, ""}, preds);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      EXPECT_EQ(rows[i].predicted_class, base[i].predicted_class);
    }
  }
}

TEST(ApplyModel, SacLadderUsesSelectedTemperature) {
  auto ladder = std::make_shared<SurrogateLadder>();
  for (double t : {1.0, 2.5, 4.0}) {
    LadderEntry e;
    e.tag = "t" + std::to_string(t);
    e.fit.temperature = t;
    ladder->entries.push_back(e);
  }
  const auto preds = one_row({2.0, -1.0, 0.5});
  const auto sac = apply_model(SacLadderModel{ladder, 2}, preds);
  const auto ts = apply_model(TemperatureModel{2.5, ObjectiveKind::kNll, ""}, preds);
  EXPECT_EQ(sac[0].probs, ts[0].probs);
  EXPECT_THROW(apply_model(SacLadderModel{ladder, std::nullopt}, preds), ValidationError);
  EXPECT_THROW(apply_model(SacLadderModel{ladder, 4}, preds), ValidationError);
  EXPECT_THROW(apply_model(SacLadderModel{ladder, 0}, preds), ValidationError);
}

TEST(ApplyModel, RejectsBadTemperature) {
  const auto preds = one_row({1.0, 0.0});
  EXPECT_THROW(apply_model(TemperatureModel{0.0, ObjectiveKind::kNll, ""}, preds), ValidationError);
  EXPECT_THROW(apply_model(TemperatureModel{-1.0, ObjectiveKind::kNll, ""}, preds), ValidationError);
  EXPECT_THROW(apply_model(TemperatureModel{INFINITY, ObjectiveKind::kNll, ""}, preds),
               ValidationError);
}

TEST(ApplyModel, Deterministic) {
  const PredictionSet preds(4, {0, 3}, {0.1, 0.2, 0.3, 0.4, 9, -9, 1, 2});
  const CalibrationModel m = TemperatureModel{1.37, ObjectiveKind::kNll, ""};
  const auto a = apply_model(m, preds);
  const auto b = apply_model(m, preds);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].probs, b[i].probs);
}

}  // namespace
}  // namespace shiftcal
