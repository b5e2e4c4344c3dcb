#include <gtest/gtest.h>

#include <set>

#include "pips/core/errors.hpp"
#include "pips/evaluator/analyzer.hpp"
#include "pips/evaluator/corpus.hpp"
#include "test_support.hpp"

namespace pips {
namespace {

ProgramArtifact prog(const std::string& source) { return {source, "solve", 0}; }

AnswerSpec spec_of(AnswerKind kind, std::vector<std::string> options = {}) {
  AnswerSpec s;
  s.kind = kind;
  s.options = std::move(options);
  return s;
}

TEST(CheckSyntax, UnclosedParenOnFirstLine) {
  auto d = check_syntax(prog("return (1"));
  ASSERT_TRUE(d.has_value());
  EXPECT_EQ(d->line, 1);
}

TEST(CheckSyntax, EmptySourceHasDiagnostic) {
  auto d = check_syntax(prog(""));
  ASSERT_TRUE(d.has_value());
  EXPECT_FALSE(d->message.empty());
}

TEST(CheckSyntax, ValidProgram) {
  EXPECT_FALSE(check_syntax(prog("def solve(symbols):\n    return len(symbols)\n")).has_value());
}

TEST(CheckSyntax, MissingColonReportsItsLine) {
  auto d = check_syntax(prog("def solve(s):\n    if s\n        return 1\n"));
  ASSERT_TRUE(d.has_value());
  EXPECT_EQ(d->line, 2);
}

TEST(CheckSyntax, AsyncEntryIsRejected) {
  EXPECT_TRUE(check_syntax(prog("async def solve(s):\n    return 1\n")).has_value());
}

TEST(DetectTrivial, ConstantArithmeticIsTrivial) {
  EXPECT_TRUE(detect_trivial(prog("def solve(symbols):\n    a = 0\n    b = 0\n    return a + b\n")));
}

TEST(DetectTrivial, LiteralReturnIsTrivial) {
  EXPECT_TRUE(detect_trivial(prog("def solve(symbols):\n    return 'brown'\n")));
}

TEST(DetectTrivial, ReadingInputIsNotTrivial) {
  EXPECT_FALSE(detect_trivial(prog("def solve(symbols):\n    return len(symbols['objects'])\n")));
}

TEST(DetectTrivial, BranchOnInputIsNotTrivial) {
  EXPECT_FALSE(detect_trivial(
      prog("def solve(symbols):\n    if symbols['n'] > 2:\n        return 'big'\n    return 'small'\n")));
}

TEST(DetectTrivial, AddingInputDependentReturnFlipsVerdict) {
  const std::string base = "def solve(symbols):\n    a = 0\n    b = 0\n";
  const std::vector<std::string> guards = {"    if symbols['flag']:\n", "    if len(symbols) > 3:\n",
                                           "    for k in symbols:\n"};
  ASSERT_TRUE(detect_trivial(prog(base + "    return a + b\n")));
  for (const auto& guard : guards) {
    const std::string src = base + guard + "        return symbols[\"x\"]\n    return a + b\n";
    EXPECT_FALSE(detect_trivial(prog(src))) << src;
  }
}

TEST(DetectTrivial, InputFreeComputationIsNotTrivial) {
  EXPECT_FALSE(detect_trivial(prog("def solve():\n    return 3 + 4\n")));
  EXPECT_TRUE(detect_trivial(prog("def solve():\n    return 7\n")));
}

TEST(DetectTrivial, UnreadableCodeIsNotTrivial) {
  EXPECT_FALSE(detect_trivial(prog("def solve(s)\n    return 1\n")));
}

TEST(DetectPlaceholders, Examples) {
  EXPECT_TRUE(detect_placeholders(prog("def solve(s):\n    # TODO: count objects\n    return 0\n")));
  EXPECT_TRUE(detect_placeholders(prog("def solve(s):\n    raise NotImplementedError\n")));
  EXPECT_TRUE(detect_placeholders(prog("def helper(x):\n    ...\n\ndef solve(s):\n    return helper(s)\n")));
  EXPECT_TRUE(detect_placeholders(prog("def solve(s):\n    pass\n")));
  EXPECT_TRUE(detect_placeholders(prog("def solve(s):\n    \"\"\"Docstring only.\"\"\"\n")));
  EXPECT_FALSE(detect_placeholders(prog("def solve(s):\n    \"\"\"Counts.\"\"\"\n    return len(s)\n")));
  EXPECT_FALSE(detect_placeholders(prog("def solve(s):\n    todo = s['todo']\n    return todo\n")));
}

TEST(DetectExampleUsage, Examples) {
  EXPECT_TRUE(detect_example_usage(prog("def solve(s):\n    return 1\n\nprint(solve({}))\n")));
  EXPECT_TRUE(detect_example_usage(
      prog("def solve(s):\n    return 1\n\nif __name__ == '__main__':\n    solve({})\n")));
  EXPECT_FALSE(detect_example_usage(
      prog("import math\nLIMIT = 10\n\ndef solve(s):\n    return math.floor(s['x'])\n")));
}

TEST(DetectRawMedia, ImportsOnDenyList) {
  const std::vector<std::string> deny = {"cv2", "PIL"};
  EXPECT_TRUE(detect_raw_media(prog("import cv2\ndef solve(s):\n    return 1\n"), deny));
  EXPECT_TRUE(detect_raw_media(prog("from PIL import Image\ndef solve(s):\n    return 1\n"), deny));
  EXPECT_FALSE(detect_raw_media(prog("import json\ndef solve(s):\n    return 1\n"), deny));
}

TEST(CheckReturn, Examples) {
  auto integer = spec_of(AnswerKind::integer);
  EXPECT_FALSE(check_return(test::ok_run(3), integer).wrong_return_type);
  EXPECT_FALSE(check_return(test::ok_run("3"), integer).wrong_return_type);
  EXPECT_TRUE(check_return(test::ok_run("three"), integer).wrong_return_type);
  EXPECT_TRUE(check_return(test::ok_run(Json::array({1})), integer).wrong_return_type);
  EXPECT_TRUE(check_return(test::ok_run(nullptr), integer).returns_null);
  EXPECT_FALSE(check_return(test::ok_run(nullptr), spec_of(AnswerKind::free_text)).returns_null);
  auto mc = spec_of(AnswerKind::multiple_choice, {"red", "blue"});
  EXPECT_FALSE(check_return(test::ok_run("B"), mc).wrong_return_type);
  EXPECT_TRUE(check_return(test::ok_run("purple"), mc).wrong_return_type);
  EXPECT_TRUE(check_return(test::ok_run(nullptr), mc).returns_null);
  auto mc_none = spec_of(AnswerKind::multiple_choice, {"red", "None"});
  EXPECT_FALSE(check_return(test::ok_run(nullptr), mc_none).returns_null);
  EXPECT_TRUE(check_return(test::ok_run("maybe"), spec_of(AnswerKind::boolean)).wrong_return_type);
}

TEST(Analyze, WellFormedVersusNonTrivial) {
  auto spec = spec_of(AnswerKind::integer);
  auto trivial = prog("def solve(s):\n    return 4\n");
  auto issues = analyze(trivial, test::ok_run(4), spec);
  EXPECT_TRUE(issues.trivial);
  EXPECT_TRUE(is_well_formed(issues, test::ok_run(4)));
  EXPECT_FALSE(is_non_trivial(issues, test::ok_run(4)));

  auto real = prog("def solve(s):\n    return len(s['xs'])\n");
  auto ok = analyze(real, test::ok_run(4), spec);
  EXPECT_FALSE(ok.any());
  EXPECT_TRUE(is_non_trivial(ok, test::ok_run(4)));

  auto crashed = test::failed_run(RunStatus::exception, "KeyError");
  EXPECT_FALSE(is_well_formed(analyze(real, crashed, spec), crashed));
}

TEST(Analyze, NonTrivialImpliesWellFormed) {
  const std::vector<std::string> sources = {
      "def solve(s):\n    return 4\n", "def solve(s):\n    return s['x']\n",
      "def solve(s):\n    pass\n", "def solve(s)\n", "def solve(s):\n    print(1)\n"};
  const std::vector<RunOutcome> runs = {test::ok_run(4), test::ok_run(nullptr), test::ok_run("x"),
                                        test::failed_run(RunStatus::timeout, "t")};
  for (auto kind : {AnswerKind::integer, AnswerKind::free_text}) {
    for (const auto& s : sources) {
      for (const auto& r : runs) {
        auto issues = analyze(prog(s), r, spec_of(kind));
        if (is_non_trivial(issues, r)) EXPECT_TRUE(is_well_formed(issues, r));
      }
    }
  }
}

TEST(PrimaryCategory, Precedence) {
  IssueSet s;
  EXPECT_FALSE(primary_category(s).has_value());
  s.trivial = true;
  EXPECT_EQ(primary_category(s), IssueCategory::trivial);
  s.returns_null = true;
  EXPECT_EQ(primary_category(s), IssueCategory::type);
  s.placeholder = true;
  EXPECT_EQ(primary_category(s), IssueCategory::placeholder);
  s.syntax_error = true;
  EXPECT_EQ(primary_category(s), IssueCategory::syntax);
  EXPECT_EQ(to_string(IssueCategory::placeholder), "placeholders");
}

TEST(AnalyzerCorpus, FullAgreementAndNoTrivialFalsePositives) {
  auto verdicts = analyze_corpus(test::shared_sandbox(), test::source_path("tests/corpus/analyzer"));
  ASSERT_EQ(verdicts.size(), 20u);
  std::set<std::string> categories;
  for (const auto& v : verdicts) {
    EXPECT_TRUE(v.agrees()) << v.entry.file.filename() << " got "
                            << (v.actual ? std::string(to_string(*v.actual)) : "none");
    if (v.issues.trivial) EXPECT_TRUE(v.entry.trivial_label) << v.entry.file.filename();
    if (v.entry.expected) categories.insert(std::string(to_string(*v.entry.expected)));
  }
  EXPECT_EQ(categories.size(), 4u);
}

TEST(AnalyzerCorpus, UnknownCategoryIsSchemaError) {
  test::TempDir dir;
  test::write_text(dir / "manifest.json",
                   R"({"programs": [{"file": "a.py", "expected": "placeholder"}]})");
  EXPECT_THROW(load_corpus_manifest(dir.path()), SchemaError);
}

}  // namespace
}  // namespace pips
