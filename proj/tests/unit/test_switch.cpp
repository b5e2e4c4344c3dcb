#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pips/core/errors.hpp"
#include "pips/core/rng.hpp"
#include "pips/switch/switch.hpp"
#include "test_support.hpp"

namespace pips {
namespace {

std::string criteria_reply(const std::vector<double>& v) {
  std::string list;
  for (std::size_t i = 0; i < v.size(); ++i) list += (i ? ", " : "") + std::to_string(v[i]);
  return "Reasoning...\nFINAL ANSWER: [" + list + "]";
}

CriteriaVector with_scores(std::vector<double> s) {
  CriteriaVector v;
  v.scores = std::move(s);
  return v;
}

ReasoningInstance question() { return test::make_instance("q", "t", "Count the apples."); }

// Independent logistic objective for the oracles: mean negative log-likelihood
// plus (l2/2)|w|^2.
double oracle_objective(const std::vector<SwitchSample>& samples, double w, double b, double l2) {
  double total = 0;
  for (const auto& s : samples) {
    const double z = w * s.features[0] + b;
    const double log_p = -std::log1p(std::exp(-z));
    const double log_q = -std::log1p(std::exp(z));
    total -= s.label ? log_p : log_q;
  }
  return total / static_cast<double>(samples.size()) + 0.5 * l2 * w * w;
}

TEST(ParseCriteria, TenNumbersAfterMarker) {
  std::vector<std::string> warnings;
  auto v = parse_criteria_scores(criteria_reply({0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}), 10, warnings);
  ASSERT_TRUE(v.has_value());
  EXPECT_DOUBLE_EQ((*v)[9], 0.9);
  EXPECT_TRUE(warnings.empty());
}

TEST(ParseCriteria, WrongCountOrMissingMarker) {
  std::vector<std::string> warnings;
  EXPECT_FALSE(parse_criteria_scores(criteria_reply(std::vector<double>(9, 0.5)), 10, warnings));
  EXPECT_FALSE(parse_criteria_scores("[0.1, 0.2]", 10, warnings));
}

TEST(ParseCriteria, OutOfRangeIsClampedWithWarning) {
  std::vector<std::string> warnings;
  std::vector<double> raw(10, 0.5);
  raw[3] = 1.3;
  auto v = parse_criteria_scores(criteria_reply(raw), 10, warnings);
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ((*v)[3], 1.0);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(ScoreCriteria, RetryAfterNineNumbers) {
  ScriptedProvider p;
  p.push_text(criteria_reply(std::vector<double>(9, 0.5)));
  p.push_text(criteria_reply(std::vector<double>(10, 0.7)));
  ScorerConfig config;
  config.model_id = "m";
  auto v = score_criteria(p, question(), config);
  EXPECT_EQ(p.calls(), 2u);
  EXPECT_EQ(v.parse_warnings.size(), 1u);
  EXPECT_FALSE(v.defaulted);
  EXPECT_DOUBLE_EQ(v.scores[0], 0.7);
  EXPECT_EQ(v.usage, (TokenUsage{20, 20}));
}

TEST(ScoreCriteria, DefaultsAfterRepromptsRunOut) {
  ScriptedProvider p;
  for (int i = 0; i < 3; ++i) p.push_text("I cannot say.");
  ScorerConfig config;
  config.model_id = "m";
  auto v = score_criteria(p, question(), config);
  EXPECT_TRUE(v.defaulted);
  EXPECT_EQ(v.scores, std::vector<double>(10, 0.5));
  EXPECT_EQ(p.calls(), 3u);
}

TEST(ScoreCriteria, RequestIsTheRenderedPrompt) {
  ScriptedProvider p;
  p.push_text(criteria_reply(std::vector<double>(10, 0.2)));
  ScorerConfig config;
  config.model_id = "m";
  score_criteria(p, question(), config);
  EXPECT_EQ(test::first_text(p.requests()[0]), render_switch_prompt(question()));
}

TEST(ZeroShotDecide, Boundaries) {
  std::vector<double> s(10, 0.0);
  s[9] = 0.9;
  EXPECT_EQ(zero_shot_decide(with_scores(s)), Decision::synthesis);
  s[9] = 0.3;
  EXPECT_EQ(zero_shot_decide(with_scores(s)), Decision::cot);
  s[9] = 0.5;
  EXPECT_EQ(zero_shot_decide(with_scores(s)), Decision::synthesis);
}

TEST(ZeroShotDecide, EqualsThresholdOnLastScore) {
  DeterministicRng rng(99);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> s(10);
    for (auto& x : s) x = rng.uniform();
    if (i % 10 == 0) s[9] = 0.5;
    EXPECT_EQ(zero_shot_decide(with_scores(s)) == Decision::synthesis, s[9] >= 0.5);
  }
}

TEST(Decide, ZeroModel) {
  LogisticModel m;
  m.weights.assign(10, 0.0);
  auto d = decide(m, with_scores(std::vector<double>(10, 0.3)));
  EXPECT_DOUBLE_EQ(d.probability, 0.5);
  EXPECT_EQ(d.decision, Decision::synthesis);
}

TEST(Decide, PublishedGeminiRowAllOnes) {
  LogisticModel m;
  m.weights = {0.14, 0.03, 0.12, 0.15, 0.21, -0.21, 0.18, -0.09, 0.03, 0.10};
  auto d = decide(m, std::vector<double>(10, 1.0));
  const double z = 0.14 + 0.03 + 0.12 + 0.15 + 0.21 - 0.21 + 0.18 - 0.09 + 0.03 + 0.10;
  EXPECT_NEAR(d.probability, 1.0 / (1.0 + std::exp(-z)), 1e-12);
  EXPECT_EQ(d.decision, Decision::synthesis);
}

TEST(Decide, MonotoneInPositivelyWeightedFeature) {
  LogisticModel m;
  m.weights = {0.22, 0.04, 0.16, 0.24, 0.27, -0.05, 0.12, 0.35, 0.18, 0.24};
  DeterministicRng rng(5);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> x(10);
    for (auto& v : x) v = rng.uniform();
    const auto k = static_cast<std::size_t>(rng.below(10));
    auto y = x;
    y[k] = std::min(1.0, y[k] + 0.2);
    const double px = decide(m, x).probability, py = decide(m, y).probability;
    if (m.weights[k] > 0) EXPECT_GE(py, px);
    if (m.weights[k] < 0) EXPECT_LE(py, px);
  }
}

TEST(Decide, LargeWeightOnLastScoreMatchesZeroShot) {
  LogisticModel m;
  const double W = 1e3;
  m.weights.assign(10, 0.0);
  m.weights[9] = W;
  m.bias = -W / 2;
  DeterministicRng rng(17);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> s(10);
    for (auto& x : s) x = rng.uniform();
    auto v = with_scores(s);
    EXPECT_EQ(decide(m, v).decision, zero_shot_decide(v));
  }
}

TEST(Decide, DimensionMismatchThrows) {
  LogisticModel m;
  m.weights.assign(10, 0.0);
  EXPECT_THROW(decide(m, std::vector<double>(3, 0.0)), DomainError);
}

std::vector<SwitchSample> separable_set(std::size_t n, std::uint64_t seed) {
  DeterministicRng rng(seed);
  std::vector<SwitchSample> out;
  while (out.size() < n) {
    std::vector<double> x(10);
    for (auto& v : x) v = rng.uniform();
    const double margin = x[0] + x[9] - x[3] - 0.5;
    if (std::abs(margin) < 0.05) continue;
    out.push_back({x, margin > 0});
  }
  return out;
}

double accuracy(const LogisticModel& m, const std::vector<SwitchSample>& samples) {
  std::size_t right = 0;
  for (const auto& s : samples) right += (decide(m, s.features).decision == Decision::synthesis) == s.label;
  return static_cast<double>(right) / static_cast<double>(samples.size());
}

TEST(TrainSwitch, SeparableSetReachesHighAccuracy) {
  auto samples = separable_set(2000, 1);
  auto m = train_switch(samples);
  EXPECT_GE(accuracy(m, samples), 0.99);
  EXPECT_TRUE(m.training_meta.converged);
  EXPECT_EQ(m.training_meta.samples, samples.size());
}

TEST(TrainSwitch, LabelFlipNegatesParameters) {
  auto samples = separable_set(500, 2);
  DeterministicRng rng(3);
  for (auto& s : samples) if (rng.bernoulli(0.1)) s.label = !s.label;
  auto flipped = samples;
  for (auto& s : flipped) s.label = !s.label;
  auto a = train_switch(samples);
  auto b = train_switch(flipped);
  for (std::size_t i = 0; i < a.weights.size(); ++i) EXPECT_NEAR(a.weights[i], -b.weights[i], 1e-6);
  EXPECT_NEAR(a.bias, -b.bias, 1e-6);
}

TEST(TrainSwitch, GridOracleOnFourPoints) {
  const std::vector<SwitchSample> samples = {{{0.1}, false}, {{0.4}, true}, {{0.6}, false}, {{0.9}, true}};
  TrainOptions options;
  auto m = train_switch(samples, options);
  double best = 1e300, best_w = 0, best_b = 0;
  for (int i = -500; i <= 500; ++i) {
    for (int j = -500; j <= 500; ++j) {
      const double w = i * 0.01, b = j * 0.01;
      const double f = oracle_objective(samples, w, b, options.l2);
      if (f < best) best = f, best_w = w, best_b = b;
    }
  }
  EXPECT_NEAR(m.weights[0], best_w, 0.02);
  EXPECT_NEAR(m.bias, best_b, 0.02);
  EXPECT_NEAR(switch_objective(samples, m.weights, m.bias, options.l2),
              oracle_objective(samples, m.weights[0], m.bias, options.l2), 1e-12);
}

TEST(TrainSwitch, ParallelMatchesSerial) {
  auto samples = separable_set(3000, 4);
  DeterministicRng rng(8);
  for (auto& s : samples) if (rng.bernoulli(0.2)) s.label = !s.label;
  auto p = train_switch(samples);
  auto s = train_switch_serial(samples);
  for (std::size_t i = 0; i < p.weights.size(); ++i) EXPECT_NEAR(p.weights[i], s.weights[i], 1e-9);
  EXPECT_NEAR(p.bias, s.bias, 1e-9);
}

TEST(TrainSwitch, Deterministic) {
  auto samples = separable_set(300, 6);
  auto a = train_switch(samples), b = train_switch(samples);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
}

TEST(TrainSwitch, SingleLabelIsDegenerate) {
  std::vector<SwitchSample> samples = {{{0.1}, true}, {{0.2}, true}};
  EXPECT_THROW(train_switch(samples), DegenerateData);
  EXPECT_THROW(train_switch({}), DegenerateData);
}

TEST(LogisticModel, JsonRoundTrip) {
  LogisticModel m;
  m.weights = {0.25, -1.5};
  m.bias = 0.125;
  m.threshold = 0.6;
  m.training_meta = {12, 1e-4, true, 7};
  auto back = logistic_model_from_json(to_json(m));
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.bias, m.bias);
  EXPECT_EQ(back.threshold, m.threshold);
  EXPECT_EQ(back.training_meta.samples, 12u);
  EXPECT_THROW(logistic_model_from_json(Json::parse(R"({"bias": 0})")), SchemaError);
}

TEST(Algorithmicity, RuleExhaustive) {
  for (unsigned mask = 0; mask < 1024; ++mask) {
    std::array<bool, 10> bits{};
    int ones = 0;
    for (int i = 0; i < 10; ++i) ones += bits[i] = (mask >> i) & 1u;
    ASSERT_EQ(algorithmicity_rule(bits), ones >= 8) << mask;
  }
}

std::string algo_reply(const std::vector<int>& bits) {
  std::string list;
  for (std::size_t i = 0; i < bits.size(); ++i) list += (i ? ", " : "") + std::to_string(bits[i]);
  return "Step by step...\nFINAL ANSWER: [" + list + "]";
}

TEST(Algorithmicity, ClassifyExamples) {
  {
    ScriptedProvider p;
    p.push_text(algo_reply({1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 1}));
    auto v = classify_algorithmicity(p, question(), "m");
    EXPECT_TRUE(v.final);
    EXPECT_TRUE(v.consistent_with_rule);
  }
  {
    ScriptedProvider p;
    p.push_text(algo_reply(std::vector<int>(11, 0)));
    auto v = classify_algorithmicity(p, question(), "m");
    EXPECT_FALSE(v.final);
    EXPECT_TRUE(v.consistent_with_rule);
  }
  {
    ScriptedProvider p;
    p.push_text(algo_reply({1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 1}));
    auto v = classify_algorithmicity(p, question(), "m");
    EXPECT_TRUE(v.final);
    EXPECT_FALSE(v.consistent_with_rule);
    EXPECT_EQ(v.warnings.size(), 1u);
  }
}

TEST(Algorithmicity, UnclassifiedAfterTwoReprompts) {
  ScriptedProvider p;
  p.push_text("[1, 0]");
  p.push_text("no idea");
  p.push_text("[2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2]");
  EXPECT_THROW(classify_algorithmicity(p, question(), "m"), UnclassifiedInstance);
  EXPECT_EQ(p.calls(), 3u);
}

TEST(Algorithmicity, ParseTakesLastValidList) {
  auto bits = parse_algorithmicity_bits("[0,0,0,0,0,0,0,0,0,0,0] then [1,1,1,1,1,1,1,1,1,1,1] and [1]");
  ASSERT_TRUE(bits.has_value());
  EXPECT_TRUE((*bits)[10]);
}

TEST(Calibration, TenSamplesNineTenthsPositive) {
  std::vector<std::pair<double, bool>> preds;
  for (int i = 0; i < 10; ++i) preds.push_back({0.9, i < 9});
  auto bins = calibration_curve(preds, 10);
  ASSERT_EQ(bins.size(), 1u);
  EXPECT_DOUBLE_EQ(bins[0].empirical_rate, 0.9);
  EXPECT_EQ(bins[0].count, 10u);
  EXPECT_NEAR(bins[0].bin_mid, 0.95, 1e-12);
}

TEST(Calibration, SingleBinAndWeightedMean) {
  DeterministicRng rng(21);
  std::vector<std::pair<double, bool>> preds;
  std::size_t positives = 0;
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.uniform();
    const bool y = rng.bernoulli(p);
    positives += y;
    preds.push_back({p, y});
  }
  auto one = calibration_curve(preds, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_DOUBLE_EQ(one[0].empirical_rate, static_cast<double>(positives) / 1000.0);
  for (int n : {5, 10, 20}) {
    double weighted = 0;
    std::size_t total = 0;
    for (const auto& b : calibration_curve(preds, n)) {
      weighted += b.empirical_rate * static_cast<double>(b.count);
      total += b.count;
    }
    EXPECT_EQ(total, 1000u);
    EXPECT_NEAR(weighted / 1000.0, static_cast<double>(positives) / 1000.0, 1e-12);
  }
}

TEST(Calibration, PerfectlyCalibratedSamples) {
  DeterministicRng rng(1234);
  std::vector<std::pair<double, bool>> preds;
  for (int i = 0; i < 10000; ++i) {
    const double p = rng.uniform();
    preds.push_back({p, rng.bernoulli(p)});
  }
  for (const auto& b : calibration_curve(preds, 10)) EXPECT_LT(std::abs(b.empirical_rate - b.bin_mid), 0.05);
}

TEST(Calibration, Errors) {
  EXPECT_THROW(calibration_curve({}, 10), EmptyInput);
  EXPECT_THROW(calibration_curve({{1.2, true}}, 10), DomainError);
  EXPECT_THROW(calibration_curve({{0.2, true}}, 0), DomainError);
  EXPECT_EQ(calibration_csv(calibration_curve({{0.9, true}}, 10)).rfind("bin_mid", 0), 0u);
}

TEST(Lodo, IdenticalTasksFoldPerTask) {
  std::map<std::string, std::vector<SwitchSample>> grouped;
  for (const char* t : {"a", "b", "c"}) grouped[t] = separable_set(200, 9);
  auto folds = lodo_eval(grouped);
  ASSERT_EQ(folds.size(), 3u);
  EXPECT_EQ(folds[0].held_out, "a");
  for (const auto& f : folds) {
    EXPECT_EQ(f.train_samples, 400u);
    EXPECT_EQ(f.test_samples, 200u);
    ASSERT_TRUE(f.accuracy.has_value());
    EXPECT_GE(*f.accuracy, 0.95);
  }
}

TEST(Lodo, InvertedTaskScoresBelowHalf) {
  std::map<std::string, std::vector<SwitchSample>> grouped;
  grouped["a"] = separable_set(300, 10);
  grouped["b"] = separable_set(300, 11);
  auto inverted = separable_set(300, 12);
  for (auto& s : inverted) s.label = !s.label;
  grouped["z"] = inverted;
  auto folds = lodo_eval(grouped);
  ASSERT_EQ(folds.size(), 3u);
  ASSERT_TRUE(folds[2].accuracy.has_value());
  EXPECT_LT(*folds[2].accuracy, 0.5);
  auto serial = lodo_eval_serial(grouped);
  for (std::size_t i = 0; i < folds.size(); ++i) EXPECT_EQ(folds[i].accuracy, serial[i].accuracy);
}

TEST(Lodo, NeedsTwoTasksAndReportsDegenerateFolds) {
  std::map<std::string, std::vector<SwitchSample>> one = {{"a", separable_set(10, 1)}};
  EXPECT_THROW(lodo_eval(one), DomainError);
  std::map<std::string, std::vector<SwitchSample>> degenerate = {
      {"a", {{{0.1}, true}}}, {"b", {{{0.2}, false}}}};
  auto folds = lodo_eval(degenerate);
  ASSERT_EQ(folds.size(), 2u);
  EXPECT_FALSE(folds[0].accuracy.has_value());
  EXPECT_FALSE(folds[0].error.empty());
}

}  // namespace
}  // namespace pips
