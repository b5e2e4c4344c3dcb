#include "pips/bench/report.hpp"

#include <cstdio>
#include <sstream>

#include "pips/core/errors.hpp"
#include "pips/core/serialize.hpp"
#include "pips/core/stats.hpp"
#include "pips/evaluator/analyzer.hpp"

namespace pips {

namespace {

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

MethodCost finish(MethodCost c, const PriceSheet& prices) {
  c.total_cost_usd = estimate_cost(c.total_usage, prices);
  if (c.records > 0) {
    const double n = static_cast<double>(c.records);
    c.avg_input_tokens = static_cast<double>(c.total_usage.input_tokens) / n;
    c.avg_output_tokens = static_cast<double>(c.total_usage.output_tokens) / n;
    c.avg_cost_usd = c.total_cost_usd / n;
  }
  return c;
}

Json to_json(const MethodCost& c) {
  return {{"records", c.records},
          {"total_input_tokens", c.total_usage.input_tokens},
          {"total_output_tokens", c.total_usage.output_tokens},
          {"total_cost_usd", c.total_cost_usd},
          {"avg_input_tokens", c.avg_input_tokens},
          {"avg_output_tokens", c.avg_output_tokens},
          {"avg_cost_usd", c.avg_cost_usd}};
}

}  // namespace

std::map<std::string, double> issue_category_rates(const std::vector<RunRecord>& records) {
  std::map<std::string, std::size_t> counts;
  for (auto c : {IssueCategory::syntax, IssueCategory::placeholder, IssueCategory::type,
                 IssueCategory::trivial}) {
    counts[std::string(to_string(c))] = 0;
  }
  std::size_t attempted = 0;
  for (const auto& r : records) {
    if (!r.attempted_code) continue;
    ++attempted;
    if (auto c = primary_category(r.issues)) ++counts[std::string(to_string(*c))];
  }
  std::map<std::string, double> rates;
  for (const auto& [name, n] : counts) rates[name] = ratio(n, attempted);
  return rates;
}

Report build_report(const std::vector<RunRecord>& records) {
  if (records.empty()) throw EmptyInput("no records to report on");
  Report rep;
  rep.records = records.size();
  for (const auto& r : records) {
    TaskTally& t = rep.tallies[r.task];
    ++t.total;
    if (r.correct) {
      ++t.graded;
      if (*r.correct) ++t.correct;
    }
    if (r.attempted_code) {
      ++t.attempted_code;
      ++rep.attempted_code;
    }
    if (r.well_formed && r.non_trivial) ++t.non_trivial;
    if (!r.error.empty()) ++t.failed;
    rep.total_usage += r.usage;
    rep.total_cost_usd += r.cost_usd;
  }
  std::vector<double> accuracies;
  for (const auto& [task, t] : rep.tallies) {
    rep.nontrivial_rate_per_task[task] = ratio(t.non_trivial, t.total);
    if (t.graded == 0) continue;
    const double acc = ratio(t.correct, t.graded);
    rep.per_task_accuracy[task] = acc;
    accuracies.push_back(acc);
  }
  if (accuracies.empty()) throw EmptyInput("no task has graded records");
  rep.harmonic_mean_accuracy = harmonic_mean(accuracies);
  rep.per_category_issue_rates = issue_category_rates(records);
  return rep;
}

std::map<std::string, Report> build_reports_by_method(const std::vector<RunRecord>& records) {
  std::map<std::string, std::vector<RunRecord>> grouped;
  for (const auto& r : records) grouped[r.method].push_back(r);
  std::map<std::string, Report> out;
  for (const auto& [method, rs] : grouped) out.emplace(method, build_report(rs));
  return out;
}

Json to_json(const Report& rep) {
  Json tallies = Json::object();
  for (const auto& [task, t] : rep.tallies) {
    tallies[task] = {{"total", t.total},
                     {"graded", t.graded},
                     {"correct", t.correct},
                     {"attempted_code", t.attempted_code},
                     {"non_trivial", t.non_trivial},
                     {"failed", t.failed}};
  }
  return {{"per_task_accuracy", rep.per_task_accuracy},
          {"harmonic_mean_accuracy", rep.harmonic_mean_accuracy},
          {"per_category_issue_rates", rep.per_category_issue_rates},
          {"nontrivial_rate_per_task", rep.nontrivial_rate_per_task},
          {"tallies", tallies},
          {"records", rep.records},
          {"attempted_code", rep.attempted_code},
          {"total_usage", to_json(rep.total_usage)},
          {"total_cost_usd", rep.total_cost_usd}};
}

std::string report_table(const Report& rep, const std::string& title) {
  std::size_t width = 4;
  for (const auto& [task, _] : rep.tallies) width = std::max(width, task.size());
  std::ostringstream out;
  out << title << "\n";
  char line[256];
  std::snprintf(line, sizeof line, "  %-*s  %8s  %10s  %6s\n", static_cast<int>(width), "task",
                "accuracy", "nontrivial", "n");
  out << line;
  for (const auto& [task, t] : rep.tallies) {
    auto it = rep.per_task_accuracy.find(task);
    const std::string acc = it == rep.per_task_accuracy.end() ? "-" : fixed(it->second);
    std::snprintf(line, sizeof line, "  %-*s  %8s  %10s  %6zu\n", static_cast<int>(width),
                  task.c_str(), acc.c_str(), fixed(rep.nontrivial_rate_per_task.at(task)).c_str(),
                  t.total);
    out << line;
  }
  out << "  harmonic mean accuracy: " << fixed(rep.harmonic_mean_accuracy) << "\n";
  out << "  issue rates over " << rep.attempted_code << " code attempts:";
  for (const auto& [cat, rate] : rep.per_category_issue_rates) out << " " << cat << "=" << fixed(rate);
  out << "\n";
  return out.str();
}

std::string accuracy_csv(const Report& rep) {
  std::ostringstream out;
  out << "task,accuracy,nontrivial_rate,total\n";
  for (const auto& [task, t] : rep.tallies) {
    auto it = rep.per_task_accuracy.find(task);
    out << task << "," << (it == rep.per_task_accuracy.end() ? "" : fixed(it->second, 6)) << ","
        << fixed(rep.nontrivial_rate_per_task.at(task), 6) << "," << t.total << "\n";
  }
  return out.str();
}

CostReport cost_report(const std::vector<RunRecord>& records, const PriceSheet& prices) {
  prices.validate();
  CostReport rep;
  for (const auto& r : records) {
    MethodCost& m = rep.per_method[r.method];
    ++m.records;
    m.total_usage += r.usage;
    ++rep.overall.records;
    rep.overall.total_usage += r.usage;
  }
  for (auto& [_, m] : rep.per_method) m = finish(m, prices);
  rep.overall = finish(rep.overall, prices);
  return rep;
}

Json to_json(const CostReport& rep) {
  Json per = Json::object();
  for (const auto& [method, m] : rep.per_method) per[method] = to_json(m);
  return {{"per_method", per}, {"overall", to_json(rep.overall)}};
}

std::string cost_table(const CostReport& rep) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "  %-16s %8s %12s %12s %12s\n", "method", "records", "avg_in",
                "avg_out", "avg_usd");
  out << line;
  auto row = [&](const std::string& name, const MethodCost& m) {
    std::snprintf(line, sizeof line, "  %-16s %8zu %12.2f %12.2f %12.6f\n", name.c_str(), m.records,
                  m.avg_input_tokens, m.avg_output_tokens, m.avg_cost_usd);
    out << line;
  };
  for (const auto& [method, m] : rep.per_method) row(method, m);
  row("overall", rep.overall);
  return out.str();
}

}  // namespace pips
