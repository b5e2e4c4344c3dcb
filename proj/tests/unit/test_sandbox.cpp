#include <gtest/gtest.h>

#include <chrono>

#include "pips/core/errors.hpp"
#include "pips/evaluator/analyzer.hpp"
#include "pips/sandbox/sandbox.hpp"
#include "test_support.hpp"

namespace pips {
namespace {

using test::shared_sandbox;

RunOutcome exec(const std::string& source, const std::optional<SymbolStore>& symbols = std::nullopt,
                ExecLimits limits = {}) {
  return shared_sandbox().execute({source, "solve", 0}, symbols, limits);
}

SymbolStore fixture_symbols(const std::string& name) {
  return SymbolStore::parse(test::read_text(test::source_path("tests/fixtures/programs/" + name)));
}

TEST(Sandbox, AppendixCountListingReturnsOne) {
  auto run = shared_sandbox().execute(
      {test::read_text(test::source_path("tests/fixtures/programs/clevr_count.py")), "solve", 0},
      fixture_symbols("clevr_count.symbols.json"), {});
  ASSERT_EQ(run.status, RunStatus::ok) << run.exception_text;
  EXPECT_EQ(*run.return_value, Json(1));
}

TEST(Sandbox, AppendixColorListingReturnsBrown) {
  auto run = shared_sandbox().execute(
      {test::read_text(test::source_path("tests/fixtures/programs/clevr_color.py")), "solve", 0},
      fixture_symbols("clevr_color.symbols.json"), {});
  ASSERT_EQ(run.status, RunStatus::ok) << run.exception_text;
  EXPECT_EQ(*run.return_value, Json("brown"));
}

TEST(Sandbox, SymbolsAreBoundAndStdoutCaptured) {
  auto run = exec("def solve(s):\n    print('n =', len(s['xs']))\n    return sum(s['xs'])\n",
                  SymbolStore::parse(R"({"xs": [1, 2, 3]})"));
  ASSERT_EQ(run.status, RunStatus::ok);
  EXPECT_EQ(*run.return_value, Json(6));
  EXPECT_EQ(run.stdout_text, "n = 3\n");
}

TEST(Sandbox, InputFreeEntry) {
  auto run = exec("def solve():\n    return 3 + 4\n");
  ASSERT_EQ(run.status, RunStatus::ok);
  EXPECT_EQ(*run.return_value, Json(7));
}

TEST(Sandbox, ExceptionStatusCarriesTraceback) {
  auto run = exec("def solve():\n    return 1 / 0\n");
  EXPECT_EQ(run.status, RunStatus::exception);
  EXPECT_NE(run.exception_text.find("ZeroDivisionError"), std::string::npos);
  EXPECT_FALSE(run.return_value.has_value());
}

TEST(Sandbox, MissingEntryIsHarnessError) {
  auto run = exec("def other():\n    return 1\n");
  EXPECT_EQ(run.status, RunStatus::harness_error);
  EXPECT_NE(run.exception_text.find("solve"), std::string::npos);
}

TEST(Sandbox, NonSerializableReturnIsHarnessError) {
  auto run = exec("def solve():\n    return object()\n");
  EXPECT_EQ(run.status, RunStatus::harness_error);
}

TEST(Sandbox, NoneReturnIsOk) {
  auto run = exec("def solve():\n    return None\n");
  ASSERT_EQ(run.status, RunStatus::ok);
  EXPECT_TRUE(run.return_value->is_null());
}

TEST(Sandbox, TimeoutIsBoundedByWallLimit) {
  ExecLimits limits;
  limits.wall_seconds = 0.5;
  for (int i = 0; i < 10; ++i) {
    const auto started = std::chrono::steady_clock::now();
    auto run = exec("def solve():\n    while True:\n        pass\n", std::nullopt, limits);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    ASSERT_EQ(run.status, RunStatus::timeout);
    ASSERT_LE(elapsed, limits.wall_seconds + 1.0);
  }
}

TEST(Sandbox, TimeoutKillsForkedChildren) {
  ExecLimits limits;
  limits.wall_seconds = 0.5;
  auto run = exec("import time\ndef solve():\n    time.sleep(30)\n", std::nullopt, limits);
  EXPECT_EQ(run.status, RunStatus::timeout);
}

TEST(Sandbox, MemoryLimitIsResourceExhausted) {
  ExecLimits limits;
  limits.memory_bytes = std::int64_t{256} << 20;
  auto run = exec("def solve():\n    x = bytearray(1 << 30)\n    return len(x)\n", std::nullopt, limits);
  EXPECT_EQ(run.status, RunStatus::resource_exhausted);
}

TEST(Sandbox, DeterministicAcrossRuns) {
  const std::string source =
      "def solve(s):\n    d = {k: len(k) for k in s['words']}\n    print(sorted(d.items()))\n"
      "    return ','.join(sorted(set(s['words'])))\n";
  auto symbols = SymbolStore::parse(R"({"words": ["b", "a", "cc", "a"]})");
  auto first = exec(source, symbols);
  for (int i = 0; i < 3; ++i) {
    auto again = exec(source, symbols);
    ASSERT_EQ(again.status, first.status);
    ASSERT_EQ(*again.return_value, *first.return_value);
    ASSERT_EQ(again.stdout_text, first.stdout_text);
  }
}

TEST(Sandbox, SocketsAreDenied) {
  auto run = exec(
      "import socket\ndef solve():\n    s = socket.socket()\n    s.connect(('127.0.0.1', 9))\n"
      "    return 'connected'\n");
  EXPECT_EQ(run.status, RunStatus::exception);
}

TEST(Sandbox, FilesOutsideScratchCannotBeDeleted) {
  test::TempDir dir;
  const auto victim = dir / "keep.txt";
  test::write_text(victim, "precious");
  auto run = exec("import os\ndef solve():\n    os.remove(" + Json(victim.string()).dump() +
                  ")\n    return 'deleted'\n");
  EXPECT_EQ(run.status, RunStatus::exception);
  EXPECT_TRUE(std::filesystem::exists(victim));
}

TEST(Sandbox, ScratchDirectoryIsWritable) {
  auto run = exec(
      "def solve():\n    with open('tmp.txt', 'w') as f:\n        f.write('x')\n"
      "    return open('tmp.txt').read()\n");
  ASSERT_EQ(run.status, RunStatus::ok) << run.exception_text;
  EXPECT_EQ(*run.return_value, Json("x"));
}

TEST(Sandbox, SubprocessesAreDenied) {
  auto run = exec("import os\ndef solve():\n    return os.system('true')\n");
  EXPECT_EQ(run.status, RunStatus::exception);
}

TEST(Sandbox, CallCounter) {
  const auto before = shared_sandbox().calls();
  exec("def solve():\n    return 1\n");
  EXPECT_EQ(shared_sandbox().calls(), before + 1);
}

TEST(ExecLimits, Validate) {
  ExecLimits l;
  l.wall_seconds = 0;
  EXPECT_THROW(l.validate(), DomainError);
  EXPECT_THROW(exec("def solve():\n    return 1\n", std::nullopt, l), DomainError);
}

TEST(WorkerProtocol, ParsesResult) {
  auto run = parse_worker_result(
      R"({"status":"ok","return":[1,2],"stdout":"hi","exc":"","duration":0.5})");
  EXPECT_EQ(run.status, RunStatus::ok);
  EXPECT_EQ(*run.return_value, Json::parse("[1,2]"));
  EXPECT_EQ(run.stdout_text, "hi");
  EXPECT_THROW(parse_worker_result("garbage"), SchemaError);
  EXPECT_THROW(parse_worker_result(R"({"return": 1})"), SchemaError);
}

}  // namespace
}  // namespace pips
