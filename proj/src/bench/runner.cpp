#include "pips/bench/runner.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <thread>

#include "pips/core/answer.hpp"
#include "pips/core/errors.hpp"
#include "pips/core/serialize.hpp"

namespace pips {

std::string_view to_string(SplitSelection selection) {
  switch (selection) {
    case SplitSelection::evaluation: return "evaluation";
    case SplitSelection::calibration: return "calibration";
    case SplitSelection::all: return "all";
  }
  return "?";
}

SplitSelection parse_split_selection(std::string_view name) {
  if (name == "evaluation") return SplitSelection::evaluation;
  if (name == "calibration") return SplitSelection::calibration;
  if (name == "all") return SplitSelection::all;
  throw ConfigError("unknown split '" + std::string(name) + "' (expected evaluation, calibration or all)");
}

std::string_view to_string(SwitchMode mode) {
  return mode == SwitchMode::zero_shot ? "zero_shot" : "trained";
}

SwitchMode parse_switch_mode(std::string_view name) {
  if (name == "zero_shot") return SwitchMode::zero_shot;
  if (name == "trained") return SwitchMode::trained;
  throw ConfigError("unknown switch mode '" + std::string(name) + "' (expected zero_shot or trained)");
}

void BenchOptions::validate() const {
  if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
  if (method == BenchMethod::pips && switch_mode == SwitchMode::trained) {
    if (!switch_model) throw ConfigError("switch mode 'trained' needs a switch model");
    switch_model->validate();
    if (switch_model->weights.size() != scorer.criteria_count)
      throw ConfigError("switch model has " + std::to_string(switch_model->weights.size()) +
                        " weights but the scorer produces " + std::to_string(scorer.criteria_count));
  }
  loop.validate();
  baseline.validate();
}

namespace {

bool selected(const ReasoningInstance& inst, SplitSelection split) {
  switch (split) {
    case SplitSelection::all: return true;
    case SplitSelection::calibration: return inst.split_tag == SplitTag::calibration;
    case SplitSelection::evaluation:
      // Unsplit datasets are evaluated in full.
      return inst.split_tag != SplitTag::calibration;
  }
  return false;
}

void fill_from_result(RunRecord& rec, const ReasoningInstance& inst, const SolveResult& result,
                      bool include_trace) {
  if (result.final_answer) rec.final_answer = result.final_answer->canonical_text;
  if (inst.gold_answer) {
    rec.correct = result.final_answer &&
                  answers_match(*result.final_answer, *inst.gold_answer, inst.answer_spec);
  }
  rec.well_formed = result.well_formed;
  rec.non_trivial = result.non_trivial;
  rec.attempted_code = result.attempted_code;
  rec.issues = result.final_issues;
  rec.usage += result.usage;
  rec.wall_seconds += result.wall_seconds;
  rec.iterations = static_cast<int>(result.trace.size());
  for (const auto& w : result.warnings) rec.warnings.push_back(w);
  if (include_trace) rec.trace = to_json(result, true, false).at("trace");
}

SolveResult run_method(SolveMethod method, const ReasoningInstance& inst, Provider& provider,
                       Executor& executor, const BenchOptions& options) {
  if (method == SolveMethod::synthesis) {
    SynthesisEngine engine(provider, executor, options.loop);
    return engine.run_loop(inst);
  }
  BaselineSolver solver(provider, executor, options.baseline);
  return solver.solve(inst, method);
}

}  // namespace

RunRecord solve_instance(const ReasoningInstance& inst, Provider& provider, Executor& executor,
                         const BenchOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.instance_id = inst.id;
  rec.task = inst.task_name;
  rec.method = std::string(to_string(options.method));
  rec.split = std::string(to_string(inst.split_tag));
  if (inst.gold_answer) rec.correct = false;

  try {
    std::optional<CriteriaVector> criteria;
    if (options.method == BenchMethod::pips || options.record_criteria) {
      criteria = score_criteria(provider, inst, options.scorer);
      rec.usage += criteria->usage;
      for (const auto& w : criteria->parse_warnings) rec.warnings.push_back("criteria: " + w);
      if (options.record_criteria) rec.criteria = criteria->scores;
    }

    SolveMethod method = SolveMethod::synthesis;
    switch (options.method) {
      case BenchMethod::pips: {
        SwitchInfo info;
        info.criteria = criteria->scores;
        info.mode = std::string(to_string(options.switch_mode));
        Decision d;
        if (options.switch_mode == SwitchMode::trained) {
          SwitchDecision sd = decide(*options.switch_model, *criteria);
          info.probability = sd.probability;
          d = sd.decision;
        } else {
          info.probability = criteria->scores.back();
          d = zero_shot_decide(*criteria);
        }
        info.routed_to = std::string(to_string(d));
        rec.switch_info = std::move(info);
        method = d == Decision::synthesis ? SolveMethod::synthesis : SolveMethod::cot;
        break;
      }
      case BenchMethod::pips_no_switch: method = SolveMethod::synthesis; break;
      case BenchMethod::cot: method = SolveMethod::cot; break;
      case BenchMethod::pot: method = SolveMethod::pot; break;
      case BenchMethod::pot_retries: method = SolveMethod::pot_retries; break;
    }

    try {
      fill_from_result(rec, inst, run_method(method, inst, provider, executor, options),
                       options.include_trace);
    } catch (const SolveAborted& e) {
      fill_from_result(rec, inst, e.partial(), options.include_trace);
      rec.final_answer.reset();
      if (inst.gold_answer) rec.correct = false;
      rec.error = e.what();
    }
  } catch (const Error& e) {
    rec.error = e.what();
  } catch (const std::exception& e) {
    rec.error = std::string("unexpected failure: ") + e.what();
  }
  rec.cost_usd = estimate_cost(rec.usage, options.loop.prices);
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

BenchSummary run_benchmark(const std::vector<Dataset>& datasets, Provider& provider,
                           Executor& executor, const BenchOptions& options,
                           const std::filesystem::path& results_path) {
  options.validate();
  const std::string method_name(to_string(options.method));

  std::set<std::pair<std::string, std::string>> done;
  for (const auto& r : load_records_for_resume(results_path)) done.insert(r.key());

  BenchSummary summary;
  std::vector<const ReasoningInstance*> work;
  std::set<std::string> seen_ids;
  for (const auto& ds : datasets) {
    for (const auto& inst : ds.instances) {
      if (!selected(inst, options.split)) continue;
      if (!seen_ids.insert(inst.id).second)
        throw SchemaError("instance id '" + inst.id + "' appears in more than one dataset");
      ++summary.selected;
      if (done.count({inst.id, method_name})) {
        ++summary.skipped;
        continue;
      }
      work.push_back(&inst);
    }
  }

  std::size_t limit = work.size();
  if (options.stop_after) limit = std::min(limit, *options.stop_after);
  if (limit == 0) return summary;

  ResultsAppender appender(results_path);
  std::vector<std::optional<RunRecord>> slots(limit);
  std::mutex mutex;
  std::size_t next_to_write = 0;
  std::atomic<std::size_t> next_index{0};
  std::exception_ptr write_error;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next_index.fetch_add(1);
      if (i >= limit) return;
      RunRecord rec = solve_instance(*work[i], provider, executor, options);
      std::lock_guard lock(mutex);
      slots[i] = std::move(rec);
      // Commit the contiguous ready prefix so the file order is the work order.
      while (next_to_write < limit && slots[next_to_write]) {
        try {
          appender.append(*slots[next_to_write]);
        } catch (...) {
          if (!write_error) write_error = std::current_exception();
        }
        if (!slots[next_to_write]->error.empty()) ++summary.failed;
        ++summary.produced;
        slots[next_to_write].reset();
        ++next_to_write;
      }
    }
  };

  const std::size_t n_threads = std::min(options.concurrency, limit);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (write_error) std::rethrow_exception(write_error);
  return summary;
}

}  // namespace pips
