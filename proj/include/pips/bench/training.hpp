#pragma once

#include <map>
#include <string>
#include <vector>

#include "pips/bench/records.hpp"
#include "pips/switch/switch.hpp"

namespace pips {

struct TrainingSet {
  std::vector<SwitchSample> samples;
  std::map<std::string, std::vector<SwitchSample>> by_task;
  std::size_t instances = 0;     // instances with both outcomes and criteria
  std::size_t decisive = 0;      // exactly one of synthesis / CoT correct
  std::size_t missing = 0;       // instances lacking an outcome or criteria
};

// Pairs each instance's synthesis outcome (pips_no_switch records, or pips
// records routed to synthesis) with its CoT outcome (cot records, or pips
// records routed to CoT). Criteria come from any record of the instance.
// Only decisive instances become samples; label true means synthesis was
// the correct one. With calibration_only, other splits are ignored.
TrainingSet build_training_set(const std::vector<RunRecord>& records, bool calibration_only = true);

}  // namespace pips
