#include "pips/bench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "pips/core/answer.hpp"
#include "pips/core/errors.hpp"
#include "pips/core/rng.hpp"

namespace pips {

namespace fs = std::filesystem;

std::string media_type_for(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  throw SchemaError("unsupported image type: " + path.string());
}

ReasoningInstance parse_instance(const Json& record, const fs::path& base_dir) {
  if (!record.is_object()) throw SchemaError("record is not a JSON object");
  auto required_string = [&](const char* key) {
    auto it = record.find(key);
    if (it == record.end() || !it->is_string() || it->get<std::string>().empty())
      throw SchemaError(std::string("missing or empty string field '") + key + "'");
    return it->get<std::string>();
  };

  ReasoningInstance inst;
  inst.id = required_string("id");
  inst.task_name = required_string("task");
  inst.query_text = required_string("question");

  if (auto it = record.find("answer_kind"); it != record.end()) {
    if (!it->is_string()) throw SchemaError("answer_kind must be a string");
    inst.answer_spec.kind = parse_answer_kind(it->get<std::string>());
  }
  if (auto it = record.find("options"); it != record.end()) {
    if (!it->is_array()) throw SchemaError("options must be a list of strings");
    for (const auto& o : *it) {
      if (!o.is_string()) throw SchemaError("options must be a list of strings");
      inst.answer_spec.options.push_back(o.get<std::string>());
    }
  }
  if (auto it = record.find("rel_tol"); it != record.end()) {
    if (!it->is_number()) throw SchemaError("rel_tol must be a number");
    inst.answer_spec.numeric_rel_tol = it->get<double>();
  }
  try {
    inst.answer_spec.validate();
  } catch (const DomainError& e) {
    throw SchemaError(e.what());
  }

  if (auto it = record.find("images"); it != record.end()) {
    if (!it->is_array()) throw SchemaError("images must be a list of paths");
    for (const auto& p : *it) {
      if (!p.is_string()) throw SchemaError("images must be a list of paths");
      fs::path path = base_dir / p.get<std::string>();
      std::ifstream probe(path, std::ios::binary);
      if (!probe) throw SchemaError("image not readable: " + path.string());
      inst.attachments.push_back({path, media_type_for(path)});
    }
  }

  if (auto it = record.find("split"); it != record.end()) {
    if (!it->is_string()) throw SchemaError("split must be a string");
    inst.split_tag = parse_split_tag(it->get<std::string>());
  }

  if (auto it = record.find("answer"); it != record.end() && !it->is_null()) {
    try {
      inst.gold_answer = normalize_answer(*it, inst.answer_spec);
    } catch (const UnparseableAnswer& e) {
      throw SchemaError(std::string("gold answer does not normalize: ") + e.what());
    }
  }
  return inst;
}

Dataset load_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open dataset " + path.string());
  Dataset ds;
  ds.name = path.stem().string();
  ds.source_path = path;
  const fs::path base = path.parent_path();
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Json record = Json::parse(line);
      ReasoningInstance inst = parse_instance(record, base);
      if (!ids.insert(inst.id).second) throw SchemaError("duplicate id '" + inst.id + "'");
      ds.instances.push_back(std::move(inst));
    } catch (const SchemaError& e) {
      throw SchemaError(e.what(), lineno);
    } catch (const Json::exception& e) {
      throw SchemaError(std::string("invalid JSON: ") + e.what(), lineno);
    } catch (const Error& e) {
      throw SchemaError(e.what(), lineno);
    }
  }
  if (ds.instances.empty()) throw SchemaError("dataset " + path.string() + " has no records");
  return ds;
}

void split_calibration(Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DomainError("fraction must be in (0, 1)");
  std::map<std::string, std::vector<std::size_t>> by_task;
  for (std::size_t i = 0; i < dataset.instances.size(); ++i) {
    by_task[dataset.instances[i].task_name].push_back(i);
  }
  for (auto& [task, indices] : by_task) {
    DeterministicRng rng(seed ^ stable_hash(task));
    rng.shuffle(indices);
    // The epsilon keeps products like 0.2 * 10 from rounding up to 3.
    const auto n_cal = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(indices.size()) - 1e-9));
    for (std::size_t k = 0; k < indices.size(); ++k) {
      dataset.instances[indices[k]].split_tag = k < n_cal ? SplitTag::calibration : SplitTag::evaluation;
    }
  }
}

std::size_t count_tagged(const Dataset& dataset, SplitTag tag) {
  return static_cast<std::size_t>(std::count_if(dataset.instances.begin(), dataset.instances.end(),
                                                [&](const auto& i) { return i.split_tag == tag; }));
}

}  // namespace pips
