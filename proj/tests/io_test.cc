#include "shiftcal/io.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.h"

namespace shiftcal {
namespace {

namespace fs = std::filesystem;

PredictionSet parse(const std::string& text) {
  std::istringstream in(text);
  return parse_predictions(in, "mem.csv");
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("shiftcal_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST(ParsePredictions, LabeledAndUnlabeledRows) {
  const auto one = parse("label,logit_0,logit_1\n1,0.0,0.0\n");
  EXPECT_EQ(one.num_classes(), 2u);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.label(0), 1);

  const auto unl = parse("label,logit_0,logit_1\n-1,1.5,0.5\n");
  EXPECT_FALSE(unl.label(0).has_value());
  EXPECT_EQ(unl.logits(0)[0], 1.5);
  EXPECT_EQ(unl.logits(0)[1], 0.5);
}

TEST(ParsePredictions, AcceptsMissingTrailingNewlineCrlfAndBlankLines) {
  EXPECT_EQ(parse("label,logit_0,logit_1\n0,1,2").size(), 1u);
  EXPECT_EQ(parse("label,logit_0,logit_1\n0,1,2\n\n").size(), 1u);
  EXPECT_EQ(parse("label,logit_0,logit_1\r\n0,1,2\r\n1,3,4\r\n").size(), 2u);
}

TEST(ParsePredictions, ErrorsNameTheLine) {
  EXPECT_NE(parse_error("label,logit_0,logit_1\n2,1.0\n").find("line 2: expected 3 fields"),
            std::string::npos);
  EXPECT_NE(parse_error("label,logit_0,logit_1\n0,1,2\n0,1,2,3\n").find("line 3"), std::string::npos);
  EXPECT_NE(parse_error("label,logit_0,logit_1\n0,1,nan\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error("label,logit_0,logit_1\n0,1,inf\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error("label,logit_0,logit_1\n0,1,abc\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error("label,logit_0,logit_1\n0.5,1,2\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error("label,logit_0,logit_1\n5,1,2\n").find("line 2"), std::string::npos);
}

TEST(ParsePredictions, HeaderErrorsNameExpectedPrefix) {
  EXPECT_NE(parse_error("").find("label,logit_0"), std::string::npos);
  EXPECT_NE(parse_error("y,p0,p1\n0,1,2\n").find("label,logit_0"), std::string::npos);
  EXPECT_NE(parse_error("label,logit_0,logit_2\n0,1,2\n").find("line 1"), std::string::npos);
  EXPECT_FALSE(parse_error("label,logit_0\n0,1\n").empty());
  EXPECT_FALSE(parse_error("label,logit_0,logit_1\n").empty());
}

TEST(PredictionsRoundTrip, RandomSetsSurviveWriteThenRead) {
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + gen() % 6;
    const std::size_t n = 1 + gen() % 40;
    std::vector<std::optional<int>> labels(n);
    std::vector<double> logits(n * k);
    for (auto& l : labels) {
      if (gen() % 4 != 0) l = static_cast<int>(gen() % k);
    }
    // Mix of magnitudes, including subnormal-adjacent and large values.
    for (double& v : logits) {
      const double mag = std::pow(10.0, static_cast<double>(gen() % 40) - 20.0);
      v = std::uniform_real_distribution<double>(-1.0, 1.0)(gen) * mag;
    }
    const PredictionSet preds(k, labels, logits);
    const auto back = parse(format_predictions(preds));
    EXPECT_EQ(back.labels(), preds.labels());
    const std::vector<double> got(back.all_logits().begin(), back.all_logits().end());
    EXPECT_EQ(got, logits) << "trial " << trial;
  }
}

TEST(FeaturesRoundTrip, RandomSetsSurviveWriteThenRead) {
  std::mt19937_64 gen(43);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + gen() % 5;
    std::vector<double> v(d * (1 + gen() % 30));
    for (double& x : v) x = std::normal_distribution<double>(0.0, 100.0)(gen);
    const FeatureSet f(d, v);
    std::istringstream in(format_features(f));
    const auto back = parse_features(in);
    EXPECT_EQ(back.dim(), d);
    const std::vector<double> got(back.values().begin(), back.values().end());
    EXPECT_EQ(got, v);
  }
  std::istringstream bad("feat_0,feat_1\n1,2\n3\n");
  EXPECT_THROW(parse_features(bad), ValidationError);
  std::istringstream bad_header("x0\n1\n");
  EXPECT_THROW(parse_features(bad_header), ValidationError);
}

TEST(Formats, EndWithNewline) {
  const PredictionSet preds(2, {0, std::nullopt}, {1, 2, 3, 4});
  const auto text = format_predictions(preds);
  EXPECT_EQ(text, "label,logit_0,logit_1\n0,1,2\n-1,3,4\n");
  EXPECT_EQ(format_features(FeatureSet(1, {0.25})), "feat_0\n0.25\n");
}

TEST(ModelJson, TemperatureRoundTrip) {
  const CalibrationModel m = TemperatureModel{1.832, ObjectiveKind::kNll, ""};
  const auto json = model_to_json(m);
  EXPECT_NE(json.find("\"temperature\":1.832"), std::string::npos) << json;
  const auto back = std::get<TemperatureModel>(model_from_json(json));
  EXPECT_EQ(back.temperature, 1.832);
  EXPECT_EQ(back.objective, ObjectiveKind::kNll);
}

TEST(ModelJson, TemperatureRoundsToSixSignificantDigits) {
  const CalibrationModel m = TemperatureModel{1.23456789, ObjectiveKind::kWeightedBrier, "cpcs"};
  const auto back = std::get<TemperatureModel>(model_from_json(model_to_json(m)));
  EXPECT_EQ(back.temperature, 1.23457);
  EXPECT_EQ(back.objective, ObjectiveKind::kWeightedBrier);
  EXPECT_EQ(back.method, "cpcs");
  EXPECT_EQ(round_significant(0.000123456789, 6), 0.000123457);
  EXPECT_EQ(round_significant(19.99999999, 6), 20.0);
}

TEST(ModelJson, VanillaRoundTrip) {
  const auto json = model_to_json(VanillaModel{});
  EXPECT_EQ(json, "{\"kind\":\"vanilla\"}\n");
  EXPECT_TRUE(std::holds_alternative<VanillaModel>(model_from_json(json)));
}

TEST(ModelJson, LadderRoundTrip) {
  auto ladder = std::make_shared<SurrogateLadder>();
  for (int j = 0; j < 6; ++j) {
    LadderEntry e;
    e.tag = "level-" + std::to_string(j);
    e.fit.temperature = 1.0 + 0.37 * j;
    e.mean_pmax = 0.9 - 0.0312345678901 * j;
    ladder->entries.push_back(e);
  }
  for (std::optional<std::size_t> selected : {std::optional<std::size_t>{}, std::optional<std::size_t>{4}}) {
    const CalibrationModel m = SacLadderModel{ladder, selected};
    const auto back = std::get<SacLadderModel>(model_from_json(model_to_json(m)));
    ASSERT_EQ(back.ladder->entries.size(), 6u);
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_EQ(back.ladder->entries[j].tag, ladder->entries[j].tag);
      EXPECT_EQ(back.ladder->entries[j].fit.temperature,
                round_significant(ladder->entries[j].fit.temperature, 6));
      EXPECT_EQ(back.ladder->entries[j].mean_pmax, ladder->entries[j].mean_pmax);
      EXPECT_FALSE(back.ladder->entries[j].preds.has_value());
    }
    EXPECT_EQ(back.selected, selected);
  }
}

TEST(ModelJson, RandomModelsRoundTrip) {
  std::mt19937_64 gen(44);
  std::uniform_real_distribution<double> t(0.05, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double temp = round_significant(t(gen), 6);
    const CalibrationModel m = TemperatureModel{temp, ObjectiveKind::kWeightedEce, "transcal_lite"};
    const auto once = model_to_json(m);
    EXPECT_EQ(model_to_json(model_from_json(once)), once);
    EXPECT_EQ(std::get<TemperatureModel>(model_from_json(once)).temperature, temp);
  }
}

TEST(ModelJson, Errors) {
  EXPECT_THROW(model_from_json("{\"kind\":\"temperature\",\"temperat"), ValidationError);
  EXPECT_THROW(model_from_json("{\"kind\":\"temperature\"}"), ValidationError);
  EXPECT_THROW(model_from_json("{\"kind\":\"temperature\",\"temperature\":-1,\"objective\":\"nll\"}"),
               ValidationError);
  EXPECT_THROW(model_from_json("[]"), ValidationError);
  try {
    model_from_json("{\"kind\":\"isotonic\"}");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("vanilla"), std::string::npos);
    EXPECT_NE(msg.find("temperature"), std::string::npos);
    EXPECT_NE(msg.find("sac_ladder"), std::string::npos);
  }
  EXPECT_THROW(model_from_json("{\"kind\":\"sac_ladder\",\"entries\":[],\"selected\":null}"),
               ValidationError);
  EXPECT_THROW(
      model_from_json("{\"kind\":\"sac_ladder\",\"entries\":[{\"tag\":\"a\",\"temperature\":1,"
                      "\"mean_pmax\":0.5}],\"selected\":2}"),
      ValidationError);
}

TEST_F(TempDir, FilesRoundTripAndFailCleanly) {
  const auto preds = testing::calibrated_logits(50, 3, 1.0, 1);
  write_predictions(dir_ / "p.csv", preds);
  EXPECT_EQ(format_predictions(read_predictions(dir_ / "p.csv")), format_predictions(preds));

  write_model(dir_ / "m.json", TemperatureModel{2.5, ObjectiveKind::kNll, ""});
  EXPECT_EQ(std::get<TemperatureModel>(read_model(dir_ / "m.json")).temperature, 2.5);

  EXPECT_THROW(read_predictions(dir_ / "missing.csv"), IoError);
  EXPECT_THROW(write_file_atomic(dir_ / "no" / "such" / "dir" / "x.txt", "x"), IoError);
  // Only the two outputs remain; no temporary files are left behind.
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_)) ++files;
  EXPECT_EQ(files, 2u);

  {
    std::ofstream bad(dir_ / "trunc.json");
    bad << "{\"kind\":";
  }
  EXPECT_THROW(read_model(dir_ / "trunc.json"), ValidationError);
}

TEST_F(TempDir, ErrorsMentionTheFile) {
  {
    std::ofstream bad(dir_ / "bad.csv");
    bad << "label,logit_0,logit_1\n2,1.0\n";
  }
  try {
    read_predictions(dir_ / "bad.csv");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bad.csv"), std::string::npos);
    EXPECT_NE(msg.find("line 2: expected 3 fields"), std::string::npos);
  }
}

}  // namespace
}  // namespace shiftcal
