#include <gtest/gtest.h>

#include "pips/baselines/baselines.hpp"
#include "pips/core/errors.hpp"
#include "test_support.hpp"

namespace pips {
namespace {

BaselineConfig config(int retries = 3) {
  BaselineConfig c;
  c.model_id = "mock";
  c.pot_max_retries = retries;
  return c;
}

ReasoningInstance seven() {
  return test::make_instance("q", "arith", "What is 3 + 4?", AnswerKind::integer, "7");
}

TEST(ExtractFinalAnswer, Forms) {
  EXPECT_EQ(extract_final_answer("blah\nFINAL ANSWER: 42"), "42");
  EXPECT_EQ(extract_final_answer("**Final Answer:** Brown**"), "Brown");
  EXPECT_EQ(extract_final_answer("FINAL ANSWER:\n\n  (B)\nmore"), "(B)");
  EXPECT_EQ(extract_final_answer("FINAL ANSWER: 1\nwait\nFINAL ANSWER: 2"), "2");
  EXPECT_FALSE(extract_final_answer("no marker here").has_value());
}

TEST(CotSolve, ParsesMarkerAndNeverExecutes) {
  ScriptedProvider p;
  p.push_text("3 plus 4 is 7.\nFINAL ANSWER: 7");
  test::FakeExecutor exec;
  auto r = BaselineSolver(p, exec, config()).cot_solve(seven());
  ASSERT_TRUE(r.final_answer.has_value());
  EXPECT_EQ(r.final_answer->canonical_text, "7");
  EXPECT_EQ(exec.calls(), 0);
  EXPECT_FALSE(r.attempted_code);
  EXPECT_EQ(r.method, SolveMethod::cot);
  EXPECT_TRUE(r.trace.empty());
}

TEST(CotSolve, RepromptsOnceThenFallsBackToLastLine) {
  ScriptedProvider p;
  p.push_text("I believe it is seven.");
  p.push_text("The sum is\n7\n");
  test::FakeExecutor exec;
  auto r = BaselineSolver(p, exec, config()).cot_solve(seven());
  EXPECT_EQ(p.calls(), 2u);
  ASSERT_TRUE(r.final_answer.has_value());
  EXPECT_EQ(r.final_answer->canonical_text, "7");
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_EQ(r.usage, (TokenUsage{20, 20}));
}

TEST(CotSolve, RepromptAnsweredWithMarker) {
  ScriptedProvider p;
  p.push_text("Thinking...");
  p.push_text("FINAL ANSWER: 7");
  test::FakeExecutor exec;
  auto r = BaselineSolver(p, exec, config()).cot_solve(seven());
  EXPECT_EQ(r.final_answer->canonical_text, "7");
  EXPECT_EQ(p.requests()[1].messages.size(), 3u);
}

TEST(PotSolve, ProgramReturningSevenIsCorrectAndNonTrivial) {
  ScriptedProvider p;
  p.push_text(test::code_reply("def solve():\n    a = 3\n    b = 4\n    return a + b"));
  auto r = BaselineSolver(p, test::shared_sandbox(), config()).pot_solve(seven());
  ASSERT_TRUE(r.final_answer.has_value());
  EXPECT_EQ(r.final_answer->canonical_text, "7");
  EXPECT_TRUE(r.well_formed);
  EXPECT_TRUE(r.non_trivial);
  EXPECT_TRUE(r.attempted_code);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.trace[0].action, TraceAction::initial);
}

TEST(PotSolve, ConstantReturnIsTrivial) {
  ScriptedProvider p;
  p.push_text(test::code_reply("def solve():\n    return 7"));
  auto r = BaselineSolver(p, test::shared_sandbox(), config()).pot_solve(seven());
  EXPECT_EQ(r.final_answer->canonical_text, "7");
  EXPECT_TRUE(r.well_formed);
  EXPECT_FALSE(r.non_trivial);
  EXPECT_TRUE(r.final_issues.trivial);
}

TEST(PotSolve, ProseOnlyGivesNoAnswer) {
  ScriptedProvider p;
  p.push_text("The answer is 7.");
  test::FakeExecutor exec;
  auto r = BaselineSolver(p, exec, config()).pot_solve(seven());
  EXPECT_FALSE(r.final_answer.has_value());
  EXPECT_EQ(exec.calls(), 0);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(PotSolve, ProgramRunsWithoutSymbols) {
  ScriptedProvider p;
  p.push_text(test::code_reply("def solve():\n    return 3 + 4"));
  test::FakeExecutor exec({test::ok_run(7)});
  BaselineSolver(p, exec, config()).pot_solve(seven());
  ASSERT_EQ(exec.inputs().size(), 1u);
  EXPECT_FALSE(exec.inputs()[0].has_value());
}

TEST(PotRetries, StopsAtFirstOkRun) {
  ScriptedProvider p;
  p.push_text(test::code_reply("def solve():\n    return 3 + 4"));
  test::FakeExecutor exec({test::ok_run(7)});
  auto r = BaselineSolver(p, exec, config()).pot_retries_solve(seven());
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(p.calls(), 1u);
}

TEST(PotRetries, RetriesCarryTheError) {
  ScriptedProvider p;
  p.push_text(test::code_reply("def solve():\n    return 1 / 0"));
  p.push_text(test::code_reply("def solve():\n    return 3 + 4"));
  auto r = BaselineSolver(p, test::shared_sandbox(), config()).pot_retries_solve(seven());
  ASSERT_EQ(r.trace.size(), 2u);
  EXPECT_EQ(r.trace[1].action, TraceAction::revised_program);
  EXPECT_EQ(r.final_answer->canonical_text, "7");
  const std::string retry = test::last_user_text(p.requests()[1]);
  EXPECT_NE(retry.find("ZeroDivisionError"), std::string::npos);
  EXPECT_EQ(retry, render_pot_retry_prompt(r.trace[0].run));
}

TEST(PotRetries, AttemptsWithinBounds) {
  for (int max = 1; max <= 4; ++max) {
    for (int first_ok = 1; first_ok <= 5; ++first_ok) {
      ScriptedProvider p;
      test::FakeExecutor exec;
      for (int i = 1; i <= 5; ++i) {
        p.push_text(test::code_reply("def solve():\n    return 3 + 4"));
        exec.push(i == first_ok ? test::ok_run(7) : test::failed_run(RunStatus::exception, "boom"));
      }
      auto r = BaselineSolver(p, exec, config(max)).pot_retries_solve(seven());
      const int attempts = static_cast<int>(r.trace.size());
      ASSERT_GE(attempts, 1);
      ASSERT_LE(attempts, max);
      ASSERT_EQ(attempts, std::min(first_ok, max));
      ASSERT_EQ(exec.calls(), attempts);
    }
  }
}

TEST(PotRetries, SharedAnalyzerVerdicts) {
  ScriptedProvider p;
  p.push_text(test::code_reply("def solve():\n    # TODO compute\n    return 7"));
  test::FakeExecutor exec({test::ok_run(7)});
  auto r = BaselineSolver(p, exec, config()).pot_retries_solve(seven());
  EXPECT_TRUE(r.final_issues.placeholder);
  EXPECT_FALSE(r.well_formed);
}

TEST(BaselineSolver, SynthesisIsNotABaseline) {
  ScriptedProvider p;
  test::FakeExecutor exec;
  EXPECT_THROW(BaselineSolver(p, exec, config()).solve(seven(), SolveMethod::synthesis), DomainError);
}

TEST(BaselinePrompts, QuestionIsSubstituted) {
  EXPECT_NE(render_cot_prompt(seven()).find("What is 3 + 4?"), std::string::npos);
  EXPECT_NE(render_pot_prompt(seven()).find("What is 3 + 4?"), std::string::npos);
  EXPECT_NE(render_pot_retry_prompt(test::failed_run(RunStatus::timeout, "")).find("run status: timeout"),
            std::string::npos);
}

}  // namespace
}  // namespace pips
