#pragma once

#include <string>
#include <string_view>

#include "pips/core/symbols.hpp"
#include "pips/core/types.hpp"

namespace pips {

// Normalization pipeline, applied until it reaches a fixed point:
//   trim -> casefold (ASCII) -> strip one trailing period -> unwrap one layer
//   of (), "", '' or ``.
// Numeric kinds then parse a number (UnparseableAnswer when none is found);
// multiple choice maps option text to its label; boolean maps yes/no/true/
// false/1/0 onto "true"/"false".
AnswerValue normalize_answer(std::string_view raw, const AnswerSpec& spec);
AnswerValue normalize_answer(double raw, const AnswerSpec& spec);
AnswerValue normalize_answer(bool raw, const AnswerSpec& spec);

// Accepts any scalar JSON value. null normalizes to "none" for textual kinds
// and is unparseable for numeric kinds. Arrays/objects throw UnparseableAnswer.
AnswerValue normalize_answer(const Json& raw, const AnswerSpec& spec);

// Re-normalizes an already normalized value (used by idempotence checks).
AnswerValue normalize_answer(const AnswerValue& value, const AnswerSpec& spec);

// Symmetric. Numbers compare with relative tolerance spec.numeric_rel_tol and
// an absolute floor of 1e-9; everything else compares canonical_text. A number
// never matches a non-number.
bool answers_match(const AnswerValue& predicted, const AnswerValue& gold, const AnswerSpec& spec);

// Label for option index i: "a", "b", ... (lowercase, post-normalization).
std::string option_label(std::size_t index);

// True when text (after normalization) names one of spec.options by label or
// by full text. Only meaningful for multiple_choice.
bool names_an_option(const AnswerValue& value, const AnswerSpec& spec);

// Shortest round-trip decimal rendering; integral values print without ".0".
std::string format_number(double value);

}  // namespace pips
