#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pips/core/types.hpp"
#include "pips/provider/provider.hpp"

namespace pips {

inline constexpr std::size_t kCriteriaCount = 10;

struct CriteriaVector {
  std::vector<double> scores = std::vector<double>(kCriteriaCount, 0.5);
  std::vector<std::string> parse_warnings;
  TokenUsage usage;
  // True when no reply parsed and every score fell back to 0.5.
  bool defaulted = false;
};

enum class Decision { synthesis, cot };
std::string_view to_string(Decision decision);

// synthesis iff the last score >= 0.5.
Decision zero_shot_decide(const CriteriaVector& v);

struct TrainingMeta {
  std::size_t samples = 0;
  double l2 = 0.0;
  bool converged = false;
  int steps = 0;
};

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  double threshold = 0.5;
  TrainingMeta training_meta;

  double logit(const std::vector<double>& x) const;
  double probability(const std::vector<double>& x) const;
  void validate() const;
};

Json to_json(const LogisticModel& model);
LogisticModel logistic_model_from_json(const Json& doc);

struct SwitchSample {
  std::vector<double> features;
  bool label = false;  // true: synthesis solved it
};

struct TrainOptions {
  double l2 = 1e-4;
  double gradient_tolerance = 1e-8;
  int max_steps = 10000;
};

// Minimizes  -(1/n) sum log-likelihood + (l2/2) |w|^2  (bias unpenalized) with
// damped Newton steps. The parallel version reduces over fixed-size chunks in
// a fixed order, so its result does not depend on the thread count. Throws
// DegenerateData when either label is missing.
LogisticModel train_switch(const std::vector<SwitchSample>& samples, const TrainOptions& options = {});
LogisticModel train_switch_serial(const std::vector<SwitchSample>& samples,
                                  const TrainOptions& options = {});

// Regularized objective, exposed for oracles.
double switch_objective(const std::vector<SwitchSample>& samples, const std::vector<double>& weights,
                        double bias, double l2);

struct SwitchDecision {
  double probability = 0.5;
  Decision decision = Decision::synthesis;
};

// synthesis iff w.x + b >= logit(threshold), i.e. probability >= threshold.
SwitchDecision decide(const LogisticModel& model, const CriteriaVector& v);
SwitchDecision decide(const LogisticModel& model, const std::vector<double>& features);

// Parses the list after the last "FINAL ANSWER" marker. Returns nullopt when
// the list is missing or does not hold exactly `count` numbers; out-of-range
// values are clamped into [0,1] with a warning.
std::optional<std::vector<double>> parse_criteria_scores(const std::string& text, std::size_t count,
                                                         std::vector<std::string>& warnings);

std::string render_switch_prompt(const ReasoningInstance& instance);
std::string render_algorithmicity_prompt(const ReasoningInstance& instance);

struct ScorerConfig {
  std::string model_id;
  double temperature = 0.0;
  int max_reprompts = 2;
  // Template asset and expected score count, so extra criteria can be plugged in.
  std::string template_name = "switch_criteria";
  std::size_t criteria_count = kCriteriaCount;
};

// Never throws on malformed replies: after max_reprompts re-prompts every score
// defaults to 0.5 with a warning. Provider errors propagate.
CriteriaVector score_criteria(Provider& provider, const ReasoningInstance& instance,
                              const ScorerConfig& config);

struct AlgoVerdict {
  std::array<bool, 10> bits{};
  bool final = false;
  bool consistent_with_rule = true;
  TokenUsage usage;
  std::vector<std::string> warnings;
};

// At least 8 of 10 bits set.
bool algorithmicity_rule(const std::array<bool, 10>& bits);

// The last bracketed list of exactly 11 zeros/ones in the reply.
std::optional<std::array<bool, 11>> parse_algorithmicity_bits(const std::string& text);

// Throws UnclassifiedInstance when no valid list arrives after two re-prompts.
AlgoVerdict classify_algorithmicity(Provider& provider, const ReasoningInstance& instance,
                                    const std::string& model_id, double temperature = 0.0);

struct CalibrationBin {
  double bin_mid = 0.0;
  double empirical_rate = 0.0;
  std::size_t count = 0;
  std::size_t positives = 0;
};

// Equal-width bins over [0,1]; empty bins are omitted. Throws EmptyInput on no
// predictions and DomainError on probabilities outside [0,1] or n_bins < 1.
std::vector<CalibrationBin> calibration_curve(const std::vector<std::pair<double, bool>>& predictions,
                                              int n_bins);
std::string calibration_csv(const std::vector<CalibrationBin>& bins);

struct LodoFold {
  std::string held_out;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  std::optional<double> accuracy;
  std::string error;  // set when the fold could not be trained
};

// Folds in task-name order. Throws DomainError with fewer than two tasks.
std::vector<LodoFold> lodo_eval(const std::map<std::string, std::vector<SwitchSample>>& grouped,
                                const TrainOptions& options = {});
std::vector<LodoFold> lodo_eval_serial(const std::map<std::string, std::vector<SwitchSample>>& grouped,
                                       const TrainOptions& options = {});

}  // namespace pips
