#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "mfcs/io.hpp"

using namespace mfcs;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kMinimal = "[experiment]\nmode = design\nalpha = 0.1\nlambda = 5\nT = 5\n";

}  // namespace

TEST(Config, MinimalDocumentUsesDefaults) {
  const auto c = parse(kMinimal);
  EXPECT_EQ(c.mode, ExperimentMode::kDesign);
  EXPECT_EQ(c.alpha, 0.1);
  EXPECT_EQ(c.lambda, 5.0);
  EXPECT_EQ(c.steps, 5u);
  EXPECT_EQ(c.n_train, 32u);
  EXPECT_EQ(c.gamma_init_bias, 0.0);
}

TEST(Config, ActiveLearningDefaults) {
  const auto c = parse("[experiment]\nmode = active-learning\nalpha = 0.1\nlambda = 10\nT = 20\n");
  EXPECT_EQ(c.predictor, PredictorKind::kGp);
  EXPECT_EQ(c.n_train, 64u);
  EXPECT_EQ(c.n_cal, 16u);
  EXPECT_EQ(c.gamma_init_bias, 3.0);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, MissingRequiredFieldIsNamed) {
  EXPECT_EQ(error_of("[experiment]\nmode = design\nlambda = 5\nT = 5\n"),
            "config: missing required field 'alpha' in [experiment]");
  EXPECT_NE(error_of("[experiment]\nalpha = 0.1\nlambda = 5\nT = 5\n").find("'mode'"),
            std::string::npos);
}

TEST(Config, RejectsUnknownAndMalformedFields) {
  EXPECT_NE(error_of(std::string(kMinimal) + "colour = red\n").find("unknown field 'colour'"),
            std::string::npos);
  EXPECT_NE(error_of("[experiment]\nmode = design\nalpha = 0.1x\nlambda = 5\nT = 5\n")
                .find("'alpha'"),
            std::string::npos);
  EXPECT_NE(error_of("[experiment]\nmode = sideways\nalpha = 0.1\nlambda = 5\nT = 5\n")
                .find("must be one of"),
            std::string::npos);
}

TEST(Config, OptionalSectionsAndLists) {
  const auto c = parse(std::string(kMinimal) +
                       "methods = standard, mfcs\ndepths = 1,2,4\nseeds = 10..19\n"
                       "[pool]\nlength = 6\nnoise_scale = 0.2\n"
                       "[model]\nridge_regularization = 0.5\n[output]\nwall_time = false\n");
  EXPECT_EQ(c.methods, (std::vector<std::string>{"standard", "mfcs"}));
  EXPECT_EQ(c.depths, (std::vector<std::size_t>{1, 2, 4}));
  EXPECT_EQ(c.seed_begin, 10u);
  EXPECT_EQ(c.seed_end, 19u);
  EXPECT_EQ(c.design_pool.length, 6u);
  EXPECT_EQ(c.design_pool.noise_scale, 0.2);
  EXPECT_EQ(c.ridge_regularization, 0.5);
  EXPECT_FALSE(c.wall_time);
}

TEST(Config, HashIgnoresKeyOrderAndExplicitDefaults) {
  const auto a = parse(kMinimal);
  const auto b = parse("[experiment]\nT=5\nlambda=5.0\nalpha=0.1\nmode=design\nn_train=32\n");
  EXPECT_EQ(canonical_config(a), canonical_config(b));
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  const auto c = parse("[experiment]\nT=5\nlambda=5.0\nalpha=0.2\nmode=design\n");
  EXPECT_NE(config_hash(a), config_hash(c));
}

TEST(SeedRange, Parsing) {
  EXPECT_EQ(parse_seed_range("0..499"), (std::pair<std::uint64_t, std::uint64_t>{0, 499}));
  EXPECT_EQ(parse_seed_range("7"), (std::pair<std::uint64_t, std::uint64_t>{7, 7}));
  EXPECT_THROW(parse_seed_range("5..2"), ConfigError);
  EXPECT_THROW(parse_seed_range("a..b"), ConfigError);
}

TEST(Report, RealFormatting) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(2.0), "2");
  EXPECT_EQ(format_real(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Report, RecordsCsv) {
  StepRecord r;
  r.seed = 3;
  r.t = 2;
  r.method = "mfcs-d2";
  r.covered = true;
  r.width = ExtendedReal::plus_infinity();
  r.metric = 0.25;
  r.bound_relative = 0.5;
  r.wall_ms = 1.23456;
  std::ostringstream out;
  write_records_csv(out, {r});
  EXPECT_EQ(out.str(),
            "seed,t,method,covered,width,metric,bound_relative,wall_ms\n"
            "3,2,mfcs-d2,1,inf,0.25,0.5,1.235\n");
}

TEST(Report, SummaryHeaderAndManifest) {
  std::ostringstream s;
  write_summary_csv(s, {});
  EXPECT_EQ(s.str(),
            "method,t,n,coverage_mean,coverage_se,width_median,width_q25,width_q75,metric_mean,"
            "metric_se,inf_fraction,bound_relative_mean\n");
  RunManifest m;
  m.config_hash = "0123456789abcdef";
  m.tool_version = kToolVersion;
  m.seed_end = 9;
  m.seed_errors.emplace_back(4, "boom");
  std::ostringstream j;
  write_manifest_json(j, m);
  const auto doc = nlohmann::json::parse(j.str());
  EXPECT_EQ(doc["config_hash"], "0123456789abcdef");
  EXPECT_EQ(doc["seed_range"][1], 9);
  EXPECT_EQ(doc["seed_errors"][0]["seed"], 4);
}
