#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pips/core/types.hpp"

namespace pips {

struct Dataset {
  std::string name;
  std::vector<ReasoningInstance> instances;
  std::filesystem::path source_path;
};

// One JSON object per line:
//   {id, task, question, images?, answer?, answer_kind?, options?, rel_tol?, split?}
// Blank lines are skipped. Image paths are relative to the dataset file and
// must be readable. The dataset name is the file stem. Throws SchemaError
// (with the 1-based line) on malformed records or duplicate ids.
Dataset load_dataset(const std::filesystem::path& path);

// Parses one record; `base_dir` resolves image paths.
ReasoningInstance parse_instance(const Json& record, const std::filesystem::path& base_dir);

// "image/png" etc. from the file extension; throws SchemaError when unknown.
std::string media_type_for(const std::filesystem::path& path);

// Per task: shuffle with a seed derived from (seed, task name), tag the first
// ceil(fraction * n) instances calibration and the rest evaluation.
// Throws DomainError unless 0 < fraction < 1.
void split_calibration(Dataset& dataset, double fraction, std::uint64_t seed);

std::size_t count_tagged(const Dataset& dataset, SplitTag tag);

}  // namespace pips
