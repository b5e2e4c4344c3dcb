#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "pips/evaluator/pyast.hpp"
#include "test_support.hpp"

namespace pips {
namespace {

namespace fs = std::filesystem;

// Snippets exercising grammar corners; python3 decides which ones compile.
const std::vector<std::string> kSnippets = {
    "x = 1\n",
    "def f(a, b=2, *args, c, **kw):\n    return a\n",
    "def f(a, /, b):\n    pass\n",
    "lambda x: x + 1\n",
    "x = [i for i in range(3) if i]\n",
    "x = {k: v for k, v in d.items()}\n",
    "with open('a') as f, open('b') as g:\n    pass\n",
    "try:\n    pass\nexcept (A, B) as e:\n    pass\nelse:\n    pass\nfinally:\n    pass\n",
    "match x:\n    case [1, *rest]:\n        pass\n    case {'k': v}:\n        pass\n    case _:\n        pass\n",
    "if (n := 10) > 5:\n    pass\n",
    "print(f'{x!r:>{width}}')\n",
    "x = 1 if y else 2\n",
    "async def f():\n    await g()\n",
    "@dec\nclass A(B, metaclass=M):\n    x: int = 3\n",
    "a, *b = c\n",
    "x = (yield)\n",
    "def f():\n    x = yield from g()\n",
    "global x\n",
    "del a[0], b.c\n",
    "assert x, 'msg'\n",
    "x = not a in b\n",
    "x = a if b else c if d else e\n",
    "s = '''multi\nline'''\n",
    "x = 0x1F + 0o17 + 0b11 + 1_000 + 1e-3 + 2j\n",
    "x = [\n    1,\n    2,\n]\n",
    "x = 1 + \\\n    2\n",
    "return 1\n",
    "break\n",
    "def f(a, a):\n    pass\n",
    "x = (1\n",
    "def f(:\n    pass\n",
    "if x\n    pass\n",
    "  x = 1\n",
    "def f():\nreturn 1\n",
    "x = 1 +\n",
    "class A:\n",
    "f(**kw, *a)\n",
    "x = [1, 2\n",
    "a = 1 = 2\n",
    "f() = 1\n",
    "for x in 1, 2:\n    continue\n",
    "continue\n",
    "nonlocal x\n",
    "def f():\n    nonlocal x\n",
    "x = 'unterminated\n",
    "print 'hello'\n",
    "x = 08\n",
    "def f(*):\n    pass\n",
    "def f(**kw, a):\n    pass\n",
    "if True:\n    pass\n  else:\n    pass\n",
    "x = {**a, 'b': 1}\n",
    "x = [*a, *b]\n",
    "t = 1,\n",
    "def f() -> int:\n    return 1\n",
    "x = a[1:2, ::3]\n",
    "import a.b as c\nfrom . import d\nfrom .e import (f, g)\n",
    "from x import *\n",
    "",
    "\n\n# only a comment\n",
};

struct Verdict {
  bool ok = false;
  int line = 0;
};

std::vector<Verdict> python_verdicts(const std::vector<std::string>& sources) {
  test::TempDir dir;
  Json payload = sources;
  test::write_text(dir / "in.json", payload.dump());
  test::write_text(dir / "check.py",
                   "import json, sys\n"
                   "out = []\n"
                   "for src in json.load(open(sys.argv[1])):\n"
                   "    try:\n"
                   "        compile(src, '<s>', 'exec')\n"
                   "        out.append([True, 0])\n"
                   "    except SyntaxError as e:\n"
                   "        out.append([False, e.lineno or 0])\n"
                   "print(json.dumps(out))\n");
  const std::string cmd =
      "python3 -I " + (dir / "check.py").string() + " " + (dir / "in.json").string();
  std::string output;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, n);
  ::pclose(pipe);
  std::vector<Verdict> out;
  for (const auto& item : Json::parse(output)) out.push_back({item[0].get<bool>(), item[1].get<int>()});
  return out;
}

std::vector<std::string> corpus_sources() {
  std::vector<std::string> out;
  for (const char* dir : {"tests/corpus/analyzer", "tests/fixtures/programs"}) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(test::source_path(dir)))
      if (e.path().extension() == ".py") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(test::read_text(f));
  }
  return out;
}

TEST(ParserCrossCheck, AcceptsExactlyWhatPythonCompiles) {
  std::vector<std::string> sources = kSnippets;
  for (auto& s : corpus_sources()) sources.push_back(std::move(s));
  const auto verdicts = python_verdicts(sources);
  ASSERT_EQ(verdicts.size(), sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    auto ours = py::parse_module(sources[i]);
    EXPECT_EQ(!ours.error.has_value(), verdicts[i].ok) << "source:\n" << sources[i];
    EXPECT_EQ(ours.module.has_value(), !ours.error.has_value());
  }
}

TEST(ParserCrossCheck, ErrorLinesMatchForLineLocalErrors) {
  const std::vector<std::string> sources = {
      "def solve(s):\n    if s\n        return 1\n",
      "x = 1\ny = 2 +\n",
      "def solve(s):\n    return 1\n  x = 2\n",
      "a = 1\nb = 2\nreturn a\n",
      "def f(a, a):\n    pass\n",
  };
  const auto verdicts = python_verdicts(sources);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    auto ours = py::parse_module(sources[i]);
    ASSERT_TRUE(ours.error.has_value()) << sources[i];
    EXPECT_EQ(ours.error->line, verdicts[i].line) << sources[i];
  }
}

}  // namespace
}  // namespace pips
