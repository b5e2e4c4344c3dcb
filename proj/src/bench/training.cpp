#include "pips/bench/training.hpp"

#include <optional>

namespace pips {

namespace {

struct Pending {
  std::string task;
  std::optional<bool> synthesis_correct;
  std::optional<bool> cot_correct;
  std::optional<std::vector<double>> criteria;
};

}  // namespace

TrainingSet build_training_set(const std::vector<RunRecord>& records, bool calibration_only) {
  std::map<std::string, Pending> by_instance;
  for (const auto& r : records) {
    if (calibration_only && r.split != "calibration") continue;
    Pending& p = by_instance[r.instance_id];
    p.task = r.task;
    if (r.criteria) p.criteria = r.criteria;
    if (r.switch_info && !p.criteria) p.criteria = r.switch_info->criteria;
    // Errored runs carry no outcome.
    if (!r.correct || !r.error.empty()) continue;
    if (r.method == "pips_no_switch" ||
        (r.method == "pips" && r.switch_info && r.switch_info->routed_to == "synthesis")) {
      p.synthesis_correct = *r.correct;
    } else if (r.method == "cot" ||
               (r.method == "pips" && r.switch_info && r.switch_info->routed_to == "cot")) {
      p.cot_correct = *r.correct;
    }
  }

  TrainingSet set;
  for (const auto& [id, p] : by_instance) {
    if (!p.synthesis_correct || !p.cot_correct || !p.criteria) {
      ++set.missing;
      continue;
    }
    ++set.instances;
    if (*p.synthesis_correct == *p.cot_correct) continue;
    ++set.decisive;
    SwitchSample s{*p.criteria, *p.synthesis_correct};
    set.samples.push_back(s);
    set.by_task[p.task].push_back(std::move(s));
  }
  return set;
}

}  // namespace pips
