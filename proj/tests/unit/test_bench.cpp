#include <gtest/gtest.h>

#include <fstream>

#include "pips/bench/dataset.hpp"
#include "pips/bench/records.hpp"
#include "pips/bench/report.hpp"
#include "pips/bench/runner.hpp"
#include "pips/bench/training.hpp"
#include "pips/core/errors.hpp"
#include "pips/core/stats.hpp"
#include "test_support.hpp"

namespace pips {
namespace {

namespace fs = std::filesystem;

Dataset arith_dataset(const test::TempDir& dir, int n) {
  test::write_text(dir / "arith.jsonl", test::arith_dataset_jsonl(n));
  return load_dataset(dir / "arith.jsonl");
}

BenchOptions options_for(BenchMethod method) {
  BenchOptions o;
  o.method = method;
  o.concurrency = 2;
  o.loop.model_id = "mock";
  o.baseline.model_id = "mock";
  o.scorer.model_id = "mock";
  return o;
}

TEST(LoadDataset, ThreeLineFile) {
  test::TempDir dir;
  test::write_text(dir / "tiny.jsonl",
                   R"({"id": "a", "task": "t", "question": "Q1?", "answer": "4", "answer_kind": "integer"})"
                   "\n\n"
                   R"({"id": "b", "task": "t", "question": "Q2?", "answer": "B", "answer_kind": "multiple_choice", "options": ["x", "y"]})"
                   "\n"
                   R"({"id": "c", "task": "u", "question": "Q3?", "split": "calibration"})"
                   "\n");
  auto ds = load_dataset(dir / "tiny.jsonl");
  EXPECT_EQ(ds.name, "tiny");
  ASSERT_EQ(ds.instances.size(), 3u);
  EXPECT_EQ(ds.instances[0].gold_answer->canonical_text, "4");
  EXPECT_EQ(ds.instances[1].gold_answer->canonical_text, "b");
  EXPECT_FALSE(ds.instances[2].gold_answer.has_value());
  EXPECT_EQ(ds.instances[2].split_tag, SplitTag::calibration);
}

TEST(LoadDataset, DuplicateIdIsSchemaErrorWithLine) {
  test::TempDir dir;
  test::write_text(dir / "d.jsonl", R"({"id": "a", "task": "t", "question": "Q"})"
                                    "\n"
                                    R"({"id": "a", "task": "t", "question": "Q"})"
                                    "\n");
  try {
    load_dataset(dir / "d.jsonl");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(LoadDataset, MalformedRecords) {
  test::TempDir dir;
  for (const char* line : {"{not json", R"({"id": "a", "task": "t"})", R"({"id": "a", "task": "t", "question": "Q", "answer_kind": "essay"})",
                           R"({"id": "a", "task": "t", "question": "Q", "answer_kind": "multiple_choice"})"}) {
    test::write_text(dir / "bad.jsonl", std::string(line) + "\n");
    EXPECT_THROW(load_dataset(dir / "bad.jsonl"), SchemaError) << line;
  }
  EXPECT_THROW(load_dataset(dir / "missing.jsonl"), SchemaError);
}

TEST(LoadDataset, ImagesResolveRelativeToFile) {
  test::TempDir dir;
  test::write_text(dir / "img" / "a.png", "png-bytes");
  test::write_text(dir / "v.jsonl", R"({"id": "a", "task": "t", "question": "Q", "images": ["img/a.png"]})"
                                    "\n");
  auto ds = load_dataset(dir / "v.jsonl");
  ASSERT_EQ(ds.instances[0].attachments.size(), 1u);
  EXPECT_EQ(ds.instances[0].attachments[0].media_type, "image/png");
  EXPECT_TRUE(fs::exists(ds.instances[0].attachments[0].path));
  test::write_text(dir / "w.jsonl", R"({"id": "a", "task": "t", "question": "Q", "images": ["img/nope.png"]})"
                                    "\n");
  EXPECT_THROW(load_dataset(dir / "w.jsonl"), SchemaError);
  EXPECT_EQ(media_type_for("x.JPG"), "image/jpeg");
  EXPECT_THROW(media_type_for("x.tiff"), SchemaError);
}

Dataset synthetic_dataset(std::map<std::string, int> sizes) {
  Dataset ds;
  for (const auto& [task, n] : sizes)
    for (int i = 0; i < n; ++i)
      ds.instances.push_back(test::make_instance(task + std::to_string(i), task, "q"));
  return ds;
}

TEST(SplitCalibration, Examples) {
  auto ds = synthetic_dataset({{"t", 10}});
  split_calibration(ds, 0.2, 7);
  EXPECT_EQ(count_tagged(ds, SplitTag::calibration), 2u);
  EXPECT_EQ(count_tagged(ds, SplitTag::evaluation), 8u);

  auto small = synthetic_dataset({{"t", 3}});
  split_calibration(small, 0.5, 7);
  EXPECT_EQ(count_tagged(small, SplitTag::calibration), 2u);

  EXPECT_THROW(split_calibration(ds, 0.0, 1), DomainError);
  EXPECT_THROW(split_calibration(ds, 1.0, 1), DomainError);
}

TEST(SplitCalibration, SameSeedSameTags) {
  auto a = synthetic_dataset({{"t", 50}, {"u", 20}});
  auto b = a;
  split_calibration(a, 0.3, 11);
  split_calibration(b, 0.3, 11);
  for (std::size_t i = 0; i < a.instances.size(); ++i)
    EXPECT_EQ(a.instances[i].split_tag, b.instances[i].split_tag);
  auto c = synthetic_dataset({{"t", 50}, {"u", 20}});
  split_calibration(c, 0.3, 12);
  bool differs = false;
  for (std::size_t i = 0; i < a.instances.size(); ++i)
    differs |= a.instances[i].split_tag != c.instances[i].split_tag;
  EXPECT_TRUE(differs);
}

TEST(SplitCalibration, PartitionPerTask) {
  for (int n = 1; n <= 30; ++n) {
    for (double f : {0.1, 0.2, 0.5, 0.9}) {
      auto ds = synthetic_dataset({{"a", n}, {"b", n + 3}});
      split_calibration(ds, f, static_cast<std::uint64_t>(n));
      std::map<std::string, int> cal;
      for (const auto& inst : ds.instances) {
        ASSERT_NE(inst.split_tag, SplitTag::unassigned);
        cal[inst.task_name] += inst.split_tag == SplitTag::calibration;
      }
      ASSERT_EQ(cal["a"], static_cast<int>(std::ceil(f * n - 1e-9)));
      ASSERT_EQ(cal["b"], static_cast<int>(std::ceil(f * (n + 3) - 1e-9)));
    }
  }
}

RunRecord record(const std::string& id, const std::string& task, const std::string& method,
                 std::optional<bool> correct) {
  RunRecord r;
  r.instance_id = id;
  r.task = task;
  r.method = method;
  r.split = "evaluation";
  r.correct = correct;
  return r;
}

TEST(RunRecord, JsonRoundTripIsCanonical) {
  RunRecord r = record("x", "t", "pips", true);
  r.final_answer = "7";
  r.usage = {10, 20};
  r.wall_seconds = 3.5;
  r.issues.trivial = true;
  r.switch_info = SwitchInfo{{0.1, 0.9}, 0.9, "synthesis", "zero_shot"};
  r.warnings = {"w"};
  Json j = to_json(r);
  EXPECT_FALSE(j.contains("wall_seconds"));
  RunRecord back = run_record_from_json(j);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(back.switch_info->routed_to, "synthesis");
}

TEST(Records, UnterminatedLastLineIgnoredAndTruncatedOnResume) {
  test::TempDir dir;
  const auto path = dir / "r.jsonl";
  const std::string good = to_json(record("a", "t", "cot", true)).dump() + "\n";
  const std::string partial = R"({"instance_id": "b", "ta)";
  test::write_text(path, good + partial);
  EXPECT_EQ(load_records(path).size(), 1u);
  EXPECT_EQ(test::read_text(path).size(), good.size() + partial.size());
  EXPECT_EQ(load_records_for_resume(path).size(), 1u);
  EXPECT_EQ(test::read_text(path), good);
  test::write_text(path, good + "{garbage}\n" + good);
  EXPECT_THROW(load_records(path), SchemaError);
  EXPECT_TRUE(load_records(dir / "absent.jsonl").empty());
}

TEST(BuildReport, HalfAndQuarterGiveOneThird) {
  std::vector<RunRecord> recs = {record("1", "a", "cot", true), record("2", "a", "cot", false),
                                 record("3", "b", "cot", true), record("4", "b", "cot", false),
                                 record("5", "b", "cot", false), record("6", "b", "cot", false),
                                 record("7", "b", "cot", std::nullopt)};
  auto rep = build_report(recs);
  EXPECT_DOUBLE_EQ(rep.per_task_accuracy.at("a"), 0.5);
  EXPECT_DOUBLE_EQ(rep.per_task_accuracy.at("b"), 0.25);
  EXPECT_NEAR(rep.harmonic_mean_accuracy, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(rep.tallies.at("b").graded, 4u);
  EXPECT_EQ(rep.tallies.at("b").total, 5u);
}

TEST(BuildReport, AllCorrectSingleTask) {
  auto rep = build_report({record("1", "a", "cot", true), record("2", "a", "cot", true)});
  EXPECT_EQ(rep.harmonic_mean_accuracy, 1.0);
  EXPECT_THROW(build_report({}), EmptyInput);
  EXPECT_THROW(build_report({record("1", "a", "cot", std::nullopt)}), EmptyInput);
}

TEST(BuildReport, HarmonicMeanRecomputesFromPerTask) {
  std::vector<RunRecord> recs;
  for (int t = 0; t < 7; ++t)
    for (int i = 0; i < 13; ++i)
      recs.push_back(record(std::to_string(t * 100 + i), "task" + std::to_string(t), "cot", (i * (t + 1)) % 5 != 0));
  auto rep = build_report(recs);
  std::vector<double> acc;
  for (const auto& [task, a] : rep.per_task_accuracy) acc.push_back(a);
  EXPECT_NEAR(rep.harmonic_mean_accuracy, harmonic_mean(acc), 1e-12);
}

TEST(BuildReport, IssueRatesOverAttemptedCode) {
  auto a = record("1", "a", "pot", true);
  a.attempted_code = true;
  a.issues.trivial = true;
  auto b = record("2", "a", "pot", true);
  b.attempted_code = true;
  b.issues.syntax_error = true;
  b.issues.trivial = true;
  auto c = record("3", "a", "pot", true);
  c.attempted_code = true;
  auto d = record("4", "a", "pot", false);
  auto rates = issue_category_rates({a, b, c, d});
  EXPECT_DOUBLE_EQ(rates.at("trivial"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(rates.at("syntax"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(rates.at("placeholders"), 0.0);
  EXPECT_DOUBLE_EQ(rates.at("type"), 0.0);
}

TEST(CostReport, AveragesAndZeroPrices) {
  auto a = record("1", "a", "pot", true);
  a.usage = {100, 200};
  auto b = record("2", "a", "pot", true);
  b.usage = {300, 0};
  auto rep = cost_report({a, b}, PriceSheet{});
  EXPECT_DOUBLE_EQ(rep.per_method.at("pot").avg_input_tokens, 200.0);
  EXPECT_DOUBLE_EQ(rep.per_method.at("pot").avg_output_tokens, 100.0);
  EXPECT_EQ(rep.overall.total_cost_usd, 0.0);
  auto priced = cost_report({a, b}, PriceSheet{1.0, 2.0});
  EXPECT_NEAR(priced.per_method.at("pot").total_cost_usd, (400 * 1.0 + 200 * 2.0) / 1e6, 1e-15);
}

TEST(CostReport, PublishedPotAverages) {
  std::vector<RunRecord> recs;
  for (int i = 0; i < 100; ++i) {
    auto r = record(std::to_string(i), "t", "pot", true);
    r.usage = {1115 + (i < 96 ? 1 : 0), 1333 + (i < 98 ? 1 : 0)};
    recs.push_back(r);
  }
  auto rep = cost_report(recs, PriceSheet{});
  EXPECT_EQ(rep.per_method.at("pot").avg_input_tokens, 1115.96);
  EXPECT_EQ(rep.per_method.at("pot").avg_output_tokens, 1333.98);
}

TEST(BuildTrainingSet, PairsOutcomesAndKeepsDecisive) {
  std::vector<RunRecord> recs;
  auto add = [&](const std::string& id, const std::string& method, bool correct) {
    auto r = record(id, "t", method, correct);
    r.split = "calibration";
    r.criteria = std::vector<double>(10, 0.5);
    recs.push_back(r);
  };
  add("1", "pips_no_switch", true);
  add("1", "cot", false);
  add("2", "pips_no_switch", false);
  add("2", "cot", true);
  add("3", "pips_no_switch", true);
  add("3", "cot", true);
  add("4", "cot", true);
  auto eval = record("5", "t", "cot", true);
  recs.push_back(eval);
  auto set = build_training_set(recs);
  EXPECT_EQ(set.instances, 3u);
  EXPECT_EQ(set.decisive, 2u);
  EXPECT_EQ(set.missing, 1u);
  ASSERT_EQ(set.samples.size(), 2u);
  EXPECT_TRUE(set.samples[0].label);
  EXPECT_FALSE(set.samples[1].label);
  EXPECT_EQ(set.by_task.at("t").size(), 2u);
}

TEST(RunBenchmark, AllCotRoutingNeverExecutes) {
  test::TempDir dir;
  auto ds = arith_dataset(dir, 6);
  test::MockModel model = test::arith_model();
  model.switch_criteria = [](const ModelRequest&) {
    return std::string("FINAL ANSWER: [0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.1]");
  };
  ScriptedProvider provider(model.responder());
  test::FakeExecutor exec;
  auto summary = run_benchmark({ds}, provider, exec, options_for(BenchMethod::pips), dir / "out.jsonl");
  EXPECT_EQ(summary.produced, 6u);
  EXPECT_EQ(exec.calls(), 0);
  for (const auto& r : load_records(dir / "out.jsonl")) {
    ASSERT_TRUE(r.switch_info.has_value());
    EXPECT_EQ(r.switch_info->routed_to, "cot");
    EXPECT_FALSE(r.attempted_code);
  }
}

TEST(RunBenchmark, NoSwitchAlwaysSynthesizes) {
  test::TempDir dir;
  auto ds = arith_dataset(dir, 4);
  ScriptedProvider provider(test::arith_model().responder());
  auto summary = run_benchmark({ds}, provider, test::shared_sandbox(),
                               options_for(BenchMethod::pips_no_switch), dir / "out.jsonl");
  EXPECT_EQ(summary.failed, 0u);
  auto recs = load_records(dir / "out.jsonl");
  ASSERT_EQ(recs.size(), 4u);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_FALSE(recs[i].switch_info.has_value());
    EXPECT_TRUE(recs[i].attempted_code);
    EXPECT_EQ(recs[i].correct, i % 4 != 3);
    EXPECT_TRUE(recs[i].non_trivial);
  }
}

TEST(RunBenchmark, RoutingFollowsZeroShotSwitch) {
  test::TempDir dir;
  auto ds = arith_dataset(dir, 6);
  ScriptedProvider provider(test::arith_model().responder());
  run_benchmark({ds}, provider, test::shared_sandbox(), options_for(BenchMethod::pips), dir / "out.jsonl");
  auto recs = load_records(dir / "out.jsonl");
  ASSERT_EQ(recs.size(), 6u);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i].instance_id, "arith-" + std::to_string(i));
    EXPECT_EQ(recs[i].switch_info->routed_to, i % 2 ? "synthesis" : "cot");
    const bool cot_wrong = i % 3 == 2, synthesis_wrong = i % 4 == 3;
    EXPECT_EQ(*recs[i].correct, i % 2 ? !synthesis_wrong : !cot_wrong) << i;
  }
}

TEST(RunBenchmark, ResumeSkipsDoneAndMatchesUninterrupted) {
  test::TempDir dir;
  auto ds = arith_dataset(dir, 8);
  auto run = [&](const fs::path& out, std::optional<std::size_t> stop) {
    ScriptedProvider provider(test::arith_model().responder());
    auto o = options_for(BenchMethod::pot);
    o.stop_after = stop;
    auto s = run_benchmark({ds}, provider, test::shared_sandbox(), o, out);
    return std::make_pair(s, provider.calls());
  };
  auto [full, full_calls] = run(dir / "full.jsonl", std::nullopt);
  auto [part, part_calls] = run(dir / "resumed.jsonl", 3);
  EXPECT_EQ(part.produced, 3u);
  auto [rest, rest_calls] = run(dir / "resumed.jsonl", std::nullopt);
  EXPECT_EQ(rest.skipped, 3u);
  EXPECT_EQ(rest.produced, 5u);
  EXPECT_EQ(part_calls + rest_calls, full_calls);
  EXPECT_EQ(test::read_text(dir / "full.jsonl"), test::read_text(dir / "resumed.jsonl"));
  auto [again, again_calls] = run(dir / "resumed.jsonl", std::nullopt);
  EXPECT_EQ(again.produced, 0u);
  EXPECT_EQ(again_calls, 0u);
}

TEST(RunBenchmark, SplitSelection) {
  test::TempDir dir;
  auto ds = arith_dataset(dir, 10);
  split_calibration(ds, 0.2, 0);
  ScriptedProvider provider(test::arith_model().responder());
  auto o = options_for(BenchMethod::cot);
  o.split = SplitSelection::calibration;
  auto s = run_benchmark({ds}, provider, test::shared_sandbox(), o, dir / "cal.jsonl");
  EXPECT_EQ(s.selected, 2u);
  for (const auto& r : load_records(dir / "cal.jsonl")) EXPECT_EQ(r.split, "calibration");
}

TEST(RunBenchmark, DuplicateIdsAcrossDatasetsRejected) {
  test::TempDir dir;
  auto ds = arith_dataset(dir, 2);
  ScriptedProvider provider(test::arith_model().responder());
  EXPECT_THROW(run_benchmark({ds, ds}, provider, test::shared_sandbox(), options_for(BenchMethod::cot),
                             dir / "x.jsonl"),
               SchemaError);
}

TEST(RunBenchmark, ProviderFailureIsRecordedNotThrown) {
  test::TempDir dir;
  auto ds = arith_dataset(dir, 3);
  ScriptedProvider provider;  // empty script: every call fails
  auto s = run_benchmark({ds}, provider, test::shared_sandbox(), options_for(BenchMethod::cot), dir / "e.jsonl");
  EXPECT_EQ(s.failed, 3u);
  for (const auto& r : load_records(dir / "e.jsonl")) {
    EXPECT_FALSE(r.error.empty());
    EXPECT_EQ(r.correct, false);
  }
}

TEST(RunBenchmark, TrainedModeNeedsModel) {
  auto o = options_for(BenchMethod::pips);
  o.switch_mode = SwitchMode::trained;
  EXPECT_THROW(o.validate(), ConfigError);
  o.switch_model = LogisticModel{std::vector<double>(10, 0.0), 0.0, 0.5, {}};
  EXPECT_NO_THROW(o.validate());
  o.switch_model->weights.resize(3);
  EXPECT_THROW(o.validate(), ConfigError);
}

}  // namespace
}  // namespace pips
