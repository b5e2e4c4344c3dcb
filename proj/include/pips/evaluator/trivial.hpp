#pragma once

#include <string_view>

#include "pips/evaluator/pyast.hpp"

namespace pips::py {

// Last top-level def with this name, or null.
const Stmt* find_entry(const Module& module, std::string_view name);

// Constant propagation behind detect_trivial; see analyzer.hpp.
bool is_trivial_entry(const Module& module, std::string_view entry_name);

}  // namespace pips::py
