#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pips {

struct FencedBlock {
  std::string tag;   // info string after the opening fence, trimmed; may be empty
  std::string body;  // text between the fences, without the fence lines

  friend bool operator==(const FencedBlock&, const FencedBlock&) = default;
};

// All triple-backtick blocks in document order. A fence line starts (after
// optional indentation) with three or more backticks; a block closes on a line
// holding only backticks, at least as many as the opener. An unterminated final
// block runs to the end of the text.
std::vector<FencedBlock> parse_fenced_blocks(std::string_view text);

// Inverse of parse_fenced_blocks for bodies without triple-backtick runs.
std::string render_fenced_blocks(const std::vector<FencedBlock>& blocks);

bool is_json_tag(std::string_view tag);
bool is_python_tag(std::string_view tag);

// Last block tagged json, or untagged with a body that parses as JSON.
std::optional<FencedBlock> last_json_block(const std::vector<FencedBlock>& blocks);
// Last block tagged python/py/python3, or untagged and not JSON.
std::optional<FencedBlock> last_code_block(const std::vector<FencedBlock>& blocks);

}  // namespace pips
