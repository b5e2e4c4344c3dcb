#pragma once

#include <map>
#include <string>
#include <vector>

#include "pips/bench/records.hpp"
#include "pips/provider/provider.hpp"

namespace pips {

struct TaskTally {
  std::size_t total = 0;
  std::size_t graded = 0;  // records with a gold answer
  std::size_t correct = 0;
  std::size_t attempted_code = 0;
  std::size_t non_trivial = 0;  // well_formed and non_trivial
  std::size_t failed = 0;
};

struct Report {
  std::map<std::string, double> per_task_accuracy;
  double harmonic_mean_accuracy = 0.0;
  // Primary category (syntax > placeholder > type > trivial) of each record
  // that attempted code, as a fraction of those records.
  std::map<std::string, double> per_category_issue_rates;
  std::map<std::string, double> nontrivial_rate_per_task;
  std::map<std::string, TaskTally> tallies;
  std::size_t records = 0;
  std::size_t attempted_code = 0;
  TokenUsage total_usage;
  double total_cost_usd = 0.0;
};

// Accuracy is correct / graded per task; tasks without any gold answer are
// left out of accuracy and the harmonic mean. Throws EmptyInput on no records
// or when no task has graded records.
Report build_report(const std::vector<RunRecord>& records);

// One report per method name.
std::map<std::string, Report> build_reports_by_method(const std::vector<RunRecord>& records);

Json to_json(const Report& report);
std::string report_table(const Report& report, const std::string& title);
// task,accuracy,nontrivial_rate,total rows.
std::string accuracy_csv(const Report& report);

// Issue rates over records that attempted code; shared with `analyze`.
std::map<std::string, double> issue_category_rates(const std::vector<RunRecord>& records);

struct MethodCost {
  std::size_t records = 0;
  TokenUsage total_usage;
  double total_cost_usd = 0.0;
  double avg_input_tokens = 0.0;
  double avg_output_tokens = 0.0;
  double avg_cost_usd = 0.0;
};

struct CostReport {
  std::map<std::string, MethodCost> per_method;
  MethodCost overall;
};

// Costs are recomputed from token usage with `prices`.
CostReport cost_report(const std::vector<RunRecord>& records, const PriceSheet& prices);
Json to_json(const CostReport& report);
std::string cost_table(const CostReport& report);

}  // namespace pips
