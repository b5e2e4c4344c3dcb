#include "pips/cli/app.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "pips/baselines/baselines.hpp"
#include "pips/bench/dataset.hpp"
#include "pips/bench/records.hpp"
#include "pips/bench/report.hpp"
#include "pips/bench/runner.hpp"
#include "pips/bench/training.hpp"
#include "pips/cli/config.hpp"
#include "pips/core/errors.hpp"
#include "pips/core/serialize.hpp"
#include "pips/evaluator/corpus.hpp"
#include "pips/sandbox/sandbox.hpp"
#include "pips/switch/switch.hpp"
#include "pips/synthesis/synthesis.hpp"

namespace pips {

namespace fs = std::filesystem;

namespace {

struct GlobalFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string cache_mode;
  std::string cache_dir;
  int verbosity = 0;
};

struct SolveFlags {
  std::string input;
  std::string question;
  std::string answer_kind = "free_text";
  std::vector<std::string> options;
  std::vector<std::string> images;
  std::string method = "auto";
  bool trace = false;
  bool json = false;
};

struct BenchFlags {
  std::vector<std::string> datasets;
  std::string method;
  std::string out;
  std::string report;
  std::string csv;
  std::string split = "evaluation";
  bool resume = false;
  bool record_criteria = false;
  bool trace = false;
};

struct TrainFlags {
  std::vector<std::string> results;
  std::string out;
  bool lodo = false;
  bool all_splits = false;
  double l2 = 1e-4;
  std::string calibration_csv;
  int bins = 10;
};

struct AnalyzeFlags {
  std::string input;
  std::string symbols;
  std::string answer_kind = "free_text";
  std::vector<std::string> options;
};

struct SplitFlags {
  std::string dataset;
  std::string out;
};

struct ReportFlags {
  std::vector<std::string> results;
  std::string json;
  std::string csv;
  bool costs = false;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed: " + path.string());
}

AppConfig resolve_config(const GlobalFlags& g) {
  AppConfig config = g.config_path.empty() ? AppConfig{} : load_config(g.config_path);
  apply_overrides(config, g.overrides);
  if (g.seed) config.seed = *g.seed;
  if (!g.cache_mode.empty()) config.set("run.cache_mode", g.cache_mode);
  if (!g.cache_dir.empty()) config.cache_dir = g.cache_dir;
  return config;
}

std::unique_ptr<CachingProvider> make_provider(const AppConfig& config) {
  std::shared_ptr<Provider> live;
  if (config.cache_mode != CacheMode::replay) {
    HttpProviderConfig http{config.provider_base_url, config.api_key_env,
                            config.provider_timeout_seconds};
    RetryPolicy retry;
    retry.max_attempts = config.provider_max_attempts;
    live = std::make_shared<HttpProvider>(http, retry);
  }
  std::shared_ptr<ReplayCache> cache;
  if (config.cache_mode != CacheMode::passthrough) cache = std::make_shared<ReplayCache>(config.cache_dir);
  return std::make_unique<CachingProvider>(live, cache, config.cache_mode);
}

LogisticModel load_switch_model(const fs::path& path) {
  try {
    return logistic_model_from_json(Json::parse(read_file(path)));
  } catch (const Json::exception& e) {
    throw ConfigError("switch model " + path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError("switch model " + path.string() + ": " + e.what());
  }
}

std::string issue_list(const IssueSet& issues) {
  std::vector<std::string> names;
  if (issues.syntax_error) names.push_back("syntax");
  if (issues.placeholder) names.push_back("placeholder");
  if (issues.wrong_return_type) names.push_back("type");
  if (issues.returns_null) names.push_back("returns_null");
  if (issues.trivial) names.push_back("trivial");
  if (issues.example_usage) names.push_back("example_usage");
  if (issues.raw_media_processing) names.push_back("raw_media");
  if (names.empty()) return "none";
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ",") + n;
  return out;
}

void print_trace(std::ostream& out, const std::vector<IterationTrace>& trace) {
  for (const auto& t : trace) {
    out << "iteration " << t.index << ": " << to_string(t.action) << " status=" << to_string(t.run.status)
        << " return=" << (t.run.return_value ? canonical_dump(*t.run.return_value) : std::string("-"))
        << " issues=" << issue_list(t.feedback.issues) << "\n";
  }
}

void print_warnings(std::ostream& err, const SolveResult& result) {
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
}

int cmd_solve(const GlobalFlags& g, const SolveFlags& f, std::ostream& out, std::ostream& err) {
  AppConfig config = resolve_config(g);
  config.validate();

  ReasoningInstance instance;
  if (!f.input.empty()) {
    if (!f.question.empty()) throw ConfigError("give either an instance file or --question, not both");
    Json record;
    try {
      record = Json::parse(read_file(f.input));
    } catch (const Json::exception& e) {
      throw SchemaError(f.input + ": " + e.what());
    }
    instance = parse_instance(record, fs::path(f.input).parent_path());
  } else if (!f.question.empty()) {
    Json record = {{"id", "cli"}, {"task", "cli"}, {"question", f.question},
                   {"answer_kind", f.answer_kind}};
    if (!f.options.empty()) record["options"] = f.options;
    if (!f.images.empty()) record["images"] = f.images;
    instance = parse_instance(record, fs::current_path());
  } else {
    throw ConfigError("solve needs an instance file or --question");
  }

  auto provider = make_provider(config);
  ProcessSandbox sandbox(config.sandbox_config());

  SolveMethod method;
  if (f.method == "auto") {
    CriteriaVector v = score_criteria(*provider, instance, config.scorer_config());
    for (const auto& w : v.parse_warnings) err << "warning: criteria: " << w << "\n";
    SwitchDecision d;
    if (config.switch_mode == SwitchMode::trained) {
      d = decide(load_switch_model(config.switch_model_path), v);
    } else {
      d = {v.scores.back(), zero_shot_decide(v)};
    }
    char line[96];
    std::snprintf(line, sizeof line, "switch: p=%.3f -> %s\n", d.probability,
                  std::string(to_string(d.decision)).c_str());
    out << line;
    method = d.decision == Decision::synthesis ? SolveMethod::synthesis : SolveMethod::cot;
  } else if (f.method == "synthesis") {
    method = SolveMethod::synthesis;
  } else if (f.method == "cot") {
    method = SolveMethod::cot;
  } else if (f.method == "pot") {
    method = SolveMethod::pot;
  } else if (f.method == "pot_retries") {
    method = SolveMethod::pot_retries;
  } else {
    throw ConfigError("unknown method '" + f.method + "'");
  }

  SolveResult result;
  try {
    if (method == SolveMethod::synthesis) {
      SynthesisEngine engine(*provider, sandbox, config.loop_config());
      result = engine.run_loop(instance);
    } else {
      BaselineSolver solver(*provider, sandbox, config.baseline_config());
      result = solver.solve(instance, method);
    }
  } catch (const SolveAborted& e) {
    if (f.trace) print_trace(out, e.partial().trace);
    print_warnings(err, e.partial());
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }

  if (f.json) {
    out << to_json(result, f.trace, false).dump(2) << "\n";
  } else {
    if (f.trace) print_trace(out, result.trace);
    out << (result.final_answer ? "answer: " + result.final_answer->canonical_text : "no answer") << "\n";
  }
  print_warnings(err, result);
  return kExitOk;
}

int cmd_bench(const GlobalFlags& g, const BenchFlags& f, std::ostream& out, std::ostream& err) {
  AppConfig config = resolve_config(g);
  config.validate();

  const fs::path results_path = f.out;
  if (!f.resume && fs::exists(results_path) && fs::file_size(results_path) > 0)
    throw ConfigError(results_path.string() + " already has records; pass --resume or choose another --out");

  BenchOptions options;
  options.method = parse_bench_method(f.method);
  options.split = parse_split_selection(f.split);
  options.concurrency = config.concurrency;
  options.switch_mode = config.switch_mode;
  if (options.method == BenchMethod::pips && config.switch_mode == SwitchMode::trained)
    options.switch_model = load_switch_model(config.switch_model_path);
  options.record_criteria = f.record_criteria;
  options.include_trace = f.trace;
  options.loop = config.loop_config();
  options.baseline = config.baseline_config();
  options.scorer = config.scorer_config();

  std::vector<Dataset> datasets;
  for (const auto& p : f.datasets) {
    Dataset ds = load_dataset(p);
    if (count_tagged(ds, SplitTag::unassigned) == ds.instances.size())
      split_calibration(ds, config.calibration_fraction, config.seed);
    datasets.push_back(std::move(ds));
  }

  auto provider = make_provider(config);
  ProcessSandbox sandbox(config.sandbox_config());
  BenchSummary s = run_benchmark(datasets, *provider, sandbox, options, results_path);
  err << "bench: " << s.selected << " selected, " << s.skipped << " skipped, " << s.produced
      << " produced, " << s.failed << " failed\n";

  std::vector<RunRecord> mine;
  for (auto& r : load_records(results_path)) {
    if (r.method == f.method) mine.push_back(std::move(r));
  }
  for (const auto& r : mine) {
    if (!r.error.empty()) err << "failed: " << r.instance_id << ": " << r.error << "\n";
  }
  try {
    Report rep = build_report(mine);
    out << report_table(rep, f.method);
    if (!f.report.empty()) write_file(f.report, to_json(rep).dump(2) + "\n");
    if (!f.csv.empty()) write_file(f.csv, accuracy_csv(rep));
  } catch (const EmptyInput& e) {
    err << "no report: " << e.what() << "\n";
  }
  return kExitOk;
}

int cmd_train_switch(const TrainFlags& f, std::ostream& out, std::ostream& err) {
  std::vector<RunRecord> records;
  for (const auto& p : f.results) {
    if (!fs::exists(p)) throw Error("results file " + p + " does not exist");
    for (auto& r : load_records(p)) records.push_back(std::move(r));
  }
  TrainingSet set = build_training_set(records, !f.all_splits);
  out << "instances with both outcomes: " << set.instances << " (decisive " << set.decisive
      << ", incomplete " << set.missing << ")\n";

  TrainOptions options;
  options.l2 = f.l2;
  LogisticModel model;
  try {
    model = train_switch(set.samples, options);
  } catch (const DegenerateData& e) {
    err << "error: " << e.what() << "\n"
        << "hint: training needs decisive calibration instances of both kinds. Run bench on the "
           "calibration split with --method pips_no_switch and --method cot, both with "
           "--record-criteria, and pass both results files.\n";
    return kExitFailure;
  }
  std::size_t hits = 0;
  std::vector<std::pair<double, bool>> predictions;
  for (const auto& s : set.samples) {
    SwitchDecision d = decide(model, s.features);
    hits += (d.decision == Decision::synthesis) == s.label;
    predictions.emplace_back(d.probability, s.label);
  }
  char line[128];
  std::snprintf(line, sizeof line, "train accuracy: %.3f on %zu samples\n",
                static_cast<double>(hits) / static_cast<double>(set.samples.size()), set.samples.size());
  out << line;
  write_file(f.out, to_json(model).dump(2) + "\n");
  out << "model written to " << f.out << "\n";

  if (!f.calibration_csv.empty()) write_file(f.calibration_csv, calibration_csv(calibration_curve(predictions, f.bins)));

  if (f.lodo) {
    std::snprintf(line, sizeof line, "%-24s %6s %6s %9s\n", "held_out", "train", "test", "accuracy");
    out << line;
    for (const auto& fold : lodo_eval(set.by_task, options)) {
      const std::string acc = fold.accuracy ? std::to_string(*fold.accuracy).substr(0, 5) : "n/a";
      std::snprintf(line, sizeof line, "%-24s %6zu %6zu %9s\n", fold.held_out.c_str(), fold.train_samples,
                    fold.test_samples, acc.c_str());
      out << line;
      if (!fold.error.empty()) err << "fold " << fold.held_out << ": " << fold.error << "\n";
    }
  }
  return kExitOk;
}

int cmd_analyze(const GlobalFlags& g, const AnalyzeFlags& f, std::ostream& out, std::ostream& err) {
  const fs::path input = f.input;
  if (!fs::exists(input)) throw Error(input.string() + " does not exist");
  AppConfig config = resolve_config(g);

  if (fs::is_directory(input)) {
    ProcessSandbox sandbox(config.sandbox_config());
    auto verdicts = analyze_corpus(sandbox, input, config.limits);
    std::size_t agree = 0;
    std::map<std::string, std::size_t> counts;
    char line[256];
    for (const auto& v : verdicts) {
      const std::string expected = v.entry.expected ? std::string(to_string(*v.entry.expected)) : "none";
      const std::string actual = v.actual ? std::string(to_string(*v.actual)) : "none";
      ++counts[actual];
      agree += v.agrees();
      std::snprintf(line, sizeof line, "%-32s expected=%-12s actual=%-12s %s\n",
                    v.entry.file.filename().string().c_str(), expected.c_str(), actual.c_str(),
                    v.agrees() ? "ok" : "MISMATCH");
      out << line;
    }
    out << "agreement: " << agree << "/" << verdicts.size() << "\n";
    for (const auto& [cat, n] : counts) {
      std::snprintf(line, sizeof line, "  %-12s %.3f\n", cat.c_str(),
                    static_cast<double>(n) / static_cast<double>(verdicts.size()));
      out << line;
    }
    return agree == verdicts.size() ? kExitOk : kExitFailure;
  }

  if (input.extension() == ".jsonl") {
    std::map<std::string, std::vector<RunRecord>> by_method;
    for (auto& r : load_records(input)) by_method[r.method].push_back(std::move(r));
    Json doc = Json::object();
    for (const auto& [method, rs] : by_method) doc[method] = issue_category_rates(rs);
    out << doc.dump(2) << "\n";
    return kExitOk;
  }

  CorpusEntry entry;
  entry.file = input;
  if (!f.symbols.empty()) entry.symbols = f.symbols;
  entry.spec.kind = parse_answer_kind(f.answer_kind);
  entry.spec.options = f.options;
  entry.spec.validate();
  ProcessSandbox sandbox(config.sandbox_config());
  CorpusVerdict v = analyze_file(sandbox, entry, config.limits);
  Json doc = {{"file", input.string()},
              {"run", to_json(v.run)},
              {"issues", to_json(v.issues)},
              {"category", v.actual ? Json(std::string(to_string(*v.actual))) : Json()},
              {"well_formed", is_well_formed(v.issues, v.run)},
              {"non_trivial", is_non_trivial(v.issues, v.run)}};
  out << doc.dump(2) << "\n";
  (void)err;
  return kExitOk;
}

int cmd_split(const GlobalFlags& g, const SplitFlags& f, std::ostream& out) {
  AppConfig config = resolve_config(g);
  if (!(config.calibration_fraction > 0.0 && config.calibration_fraction < 1.0))
    throw ConfigError("run.calibration_fraction must be in (0, 1)");
  Dataset ds = load_dataset(f.dataset);
  split_calibration(ds, config.calibration_fraction, config.seed);

  std::map<std::string, SplitTag> tags;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_task;
  for (const auto& inst : ds.instances) {
    tags[inst.id] = inst.split_tag;
    auto& [cal, eval] = per_task[inst.task_name];
    (inst.split_tag == SplitTag::calibration ? cal : eval) += 1;
  }
  std::ifstream in(f.dataset);
  std::string line, content;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json record = Json::parse(line);
    record["split"] = std::string(to_string(tags.at(record.at("id").get<std::string>())));
    content += canonical_dump(record) + "\n";
  }
  write_file(f.out, content);
  for (const auto& [task, counts] : per_task) {
    out << task << ": " << counts.first << " calibration, " << counts.second << " evaluation\n";
  }
  return kExitOk;
}

int cmd_report(const GlobalFlags& g, const ReportFlags& f, std::ostream& out) {
  std::vector<RunRecord> records;
  for (const auto& p : f.results) {
    if (!fs::exists(p)) throw Error("results file " + p + " does not exist");
    for (auto& r : load_records(p)) records.push_back(std::move(r));
  }
  if (records.empty()) throw EmptyInput("no records in the given results files");
  auto reports = build_reports_by_method(records);
  Json doc = Json::object();
  std::string csv = "method,task,accuracy,nontrivial_rate,total\n";
  for (const auto& [method, rep] : reports) {
    out << report_table(rep, method);
    doc[method] = to_json(rep);
    std::istringstream rows(accuracy_csv(rep));
    std::string row;
    std::getline(rows, row);  // header
    while (std::getline(rows, row)) csv += method + "," + row + "\n";
  }
  if (f.costs) {
    AppConfig config = resolve_config(g);
    CostReport costs = cost_report(records, config.prices);
    out << "costs\n" << cost_table(costs);
    doc["costs"] = to_json(costs);
  }
  if (!f.json.empty()) write_file(f.json, doc.dump(2) + "\n");
  if (!f.csv.empty()) write_file(f.csv, csv);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Program synthesis with per-instance switching between code and chain-of-thought", "pips"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config_path, "TOML-style config file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Config override key=value, applied after the file")
      ->take_all();
  app.add_option("--seed", g.seed, "Seed for calibration splits (run.seed)");
  app.add_option("--cache-mode", g.cache_mode, "record, replay or passthrough (run.cache_mode)");
  app.add_option("--cache-dir", g.cache_dir, "Replay cache directory (run.cache_dir)");
  app.add_flag("-v,--verbose", g.verbosity, "More diagnostics on stderr");

  SolveFlags sf;
  auto* solve = app.add_subcommand("solve", "Solve one instance");
  solve->add_option("input", sf.input, "Instance JSON file (dataset record schema)");
  solve->add_option("--question", sf.question, "Question text instead of an instance file");
  solve->add_option("--answer-kind", sf.answer_kind, "Answer kind for --question")
      ->check(CLI::IsMember({"free_text", "integer", "decimal", "multiple_choice", "boolean"}));
  solve->add_option("--option", sf.options, "Multiple-choice option for --question (repeatable)");
  solve->add_option("--image", sf.images, "Image attachment for --question (repeatable)");
  solve->add_option("--method", sf.method, "auto (switch decides), synthesis, cot, pot or pot_retries")
      ->check(CLI::IsMember({"auto", "synthesis", "cot", "pot", "pot_retries"}));
  solve->add_flag("--trace", sf.trace, "Print one line per iteration");
  solve->add_flag("--json", sf.json, "Print the result as JSON");

  BenchFlags bf;
  auto* bench = app.add_subcommand("bench", "Run a method over datasets and report");
  bench->add_option("datasets", bf.datasets, "Dataset JSONL files")->required()->check(CLI::ExistingFile);
  bench->add_option("--method", bf.method, "pips, pips_no_switch, cot, pot or pot_retries")
      ->required()
      ->check(CLI::IsMember({"pips", "pips_no_switch", "cot", "pot", "pot_retries"}));
  bench->add_option("--out", bf.out, "Results JSONL (appended)")->required();
  bench->add_option("--report", bf.report, "Write the report as JSON");
  bench->add_option("--csv", bf.csv, "Write per-task accuracy as CSV");
  bench->add_option("--split", bf.split, "evaluation, calibration or all")
      ->check(CLI::IsMember({"evaluation", "calibration", "all"}));
  bench->add_flag("--resume", bf.resume, "Skip instances that already have a record");
  bench->add_flag("--record-criteria", bf.record_criteria, "Score and store switch criteria for every instance");
  bench->add_flag("--trace", bf.trace, "Store iteration traces in the records");

  TrainFlags tf;
  auto* train = app.add_subcommand("train-switch", "Train the logistic switch from results files");
  train->add_option("results", tf.results, "Results JSONL files")->required();
  train->add_option("--out", tf.out, "Model JSON path")->required();
  train->add_flag("--lodo", tf.lodo, "Print the leave-one-dataset-out table");
  train->add_flag("--all-splits", tf.all_splits, "Use every split, not only calibration");
  train->add_option("--l2", tf.l2, "L2 strength")->check(CLI::NonNegativeNumber);
  train->add_option("--calibration-csv", tf.calibration_csv, "Write the calibration curve as CSV");
  train->add_option("--bins", tf.bins, "Calibration bins")->check(CLI::PositiveNumber);

  AnalyzeFlags af;
  auto* analyze_cmd = app.add_subcommand("analyze", "Analyze a program, a corpus directory or a results file");
  analyze_cmd->add_option("input", af.input, "Program file, corpus directory with manifest.json, or results JSONL")
      ->required();
  analyze_cmd->add_option("--symbols", af.symbols, "Symbols JSON for a single program");
  analyze_cmd->add_option("--answer-kind", af.answer_kind, "Expected answer kind for a single program")
      ->check(CLI::IsMember({"free_text", "integer", "decimal", "multiple_choice", "boolean"}));
  analyze_cmd->add_option("--option", af.options, "Multiple-choice option (repeatable)");

  SplitFlags spf;
  auto* split = app.add_subcommand("split", "Tag a dataset with calibration/evaluation splits");
  split->add_option("dataset", spf.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  split->add_option("--out", spf.out, "Tagged dataset JSONL")->required();

  ReportFlags rf;
  auto* report = app.add_subcommand("report", "Report accuracy, issue rates and costs from results files");
  report->add_option("results", rf.results, "Results JSONL files")->required();
  report->add_option("--json", rf.json, "Write the reports as JSON");
  report->add_option("--csv", rf.csv, "Write per-task accuracy as CSV");
  report->add_flag("--costs", rf.costs, "Include token and cost averages (prices from config)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    if (*solve) return cmd_solve(g, sf, out, err);
    if (*bench) return cmd_bench(g, bf, out, err);
    if (*train) return cmd_train_switch(tf, out, err);
    if (*analyze_cmd) return cmd_analyze(g, af, out, err);
    if (*split) return cmd_split(g, spf, out);
    if (*report) return cmd_report(g, rf, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace pips
