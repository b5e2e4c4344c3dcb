#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pips/evaluator/analyzer.hpp"
#include "pips/sandbox/sandbox.hpp"

namespace pips {

// A directory of programs labelled by manifest.json:
//   {"programs": [{"file": "x.py", "symbols": "x.json"?, "answer_kind": "integer"?,
//                  "options": [...]?, "expected": "trivial" | "type" | "syntax" |
//                  "placeholders" | null, "trivial": bool?}, ...]}
// "trivial" labels a hard-coded answer independently of the category;
// it defaults to expected == trivial.
struct CorpusEntry {
  std::filesystem::path file;
  std::optional<std::filesystem::path> symbols;
  AnswerSpec spec;
  std::optional<IssueCategory> expected;
  bool trivial_label = false;
};

struct CorpusVerdict {
  CorpusEntry entry;
  RunOutcome run;
  IssueSet issues;
  std::optional<IssueCategory> actual;

  bool agrees() const { return actual == entry.expected; }
};

std::vector<CorpusEntry> load_corpus_manifest(const std::filesystem::path& dir);
std::optional<IssueCategory> parse_issue_category(const std::string& name);

// Runs and analyzes one program file.
CorpusVerdict analyze_file(Executor& executor, const CorpusEntry& entry, const ExecLimits& limits = {});
std::vector<CorpusVerdict> analyze_corpus(Executor& executor, const std::filesystem::path& dir,
                                          const ExecLimits& limits = {});

}  // namespace pips
