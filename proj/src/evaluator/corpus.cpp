#include "pips/evaluator/corpus.hpp"

#include <fstream>
#include <sstream>

#include "pips/core/errors.hpp"

namespace pips {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::optional<IssueCategory> parse_issue_category(const std::string& name) {
  for (auto c : {IssueCategory::syntax, IssueCategory::placeholder, IssueCategory::type,
                 IssueCategory::trivial}) {
    if (to_string(c) == name) return c;
  }
  throw SchemaError("unknown issue category '" + name + "'");
}

std::vector<CorpusEntry> load_corpus_manifest(const fs::path& dir) {
  Json manifest;
  try {
    manifest = Json::parse(read_file(dir / "manifest.json"));
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("manifest.json: ") + e.what());
  }
  std::vector<CorpusEntry> out;
  try {
    for (const auto& p : manifest.at("programs")) {
      CorpusEntry e;
      e.file = dir / p.at("file").get<std::string>();
      if (p.contains("symbols") && !p.at("symbols").is_null())
        e.symbols = dir / p.at("symbols").get<std::string>();
      if (p.contains("answer_kind"))
        e.spec.kind = parse_answer_kind(p.at("answer_kind").get<std::string>());
      if (p.contains("options")) e.spec.options = p.at("options").get<std::vector<std::string>>();
      e.spec.validate();
      if (!p.at("expected").is_null()) e.expected = parse_issue_category(p.at("expected").get<std::string>());
      e.trivial_label = p.value("trivial", e.expected == IssueCategory::trivial);
      out.push_back(std::move(e));
    }
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("manifest.json: ") + e.what());
  } catch (const DomainError& e) {
    throw SchemaError(std::string("manifest.json: ") + e.what());
  }
  return out;
}

CorpusVerdict analyze_file(Executor& executor, const CorpusEntry& entry, const ExecLimits& limits) {
  CorpusVerdict v;
  v.entry = entry;
  ProgramArtifact program{read_file(entry.file), "solve", 0};
  std::optional<SymbolStore> symbols;
  if (entry.symbols) symbols = SymbolStore::parse(read_file(*entry.symbols));
  v.run = executor.execute(program, symbols, limits);
  v.issues = analyze(program, v.run, entry.spec);
  v.actual = primary_category(v.issues);
  return v;
}

std::vector<CorpusVerdict> analyze_corpus(Executor& executor, const fs::path& dir,
                                          const ExecLimits& limits) {
  std::vector<CorpusVerdict> out;
  for (const auto& entry : load_corpus_manifest(dir)) out.push_back(analyze_file(executor, entry, limits));
  return out;
}

}  // namespace pips
