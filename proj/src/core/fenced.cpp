#include "pips/core/fenced.hpp"

#include <json.hpp>

namespace pips {
namespace {

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::size_t leading_backticks(std::string_view s) {
  std::size_t n = 0;
  while (n < s.size() && s[n] == '`') ++n;
  return n;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string join(const std::vector<std::string_view>& lines, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) out.push_back('\n');
    out.append(lines[i]);
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool parses_as_json(const std::string& body) {
  return nlohmann::json::accept(body);
}

}  // namespace

std::vector<FencedBlock> parse_fenced_blocks(std::string_view text) {
  std::vector<FencedBlock> blocks;
  auto lines = split_lines(text);
  std::size_t i = 0;
  while (i < lines.size()) {
    std::string_view line = trim_view(lines[i]);
    std::size_t ticks = leading_backticks(line);
    std::string_view info = trim_view(line.substr(ticks));
    if (ticks < 3 || info.find('`') != std::string_view::npos) {
      ++i;
      continue;
    }
    std::size_t close = i + 1;
    for (; close < lines.size(); ++close) {
      std::string_view candidate = trim_view(lines[close]);
      std::size_t n = leading_backticks(candidate);
      if (n >= ticks && n == candidate.size()) break;
    }
    blocks.push_back({std::string(info), join(lines, i + 1, close)});
    i = close + 1;
  }
  return blocks;
}

std::string render_fenced_blocks(const std::vector<FencedBlock>& blocks) {
  std::string out;
  for (const auto& b : blocks) {
    out += "```" + b.tag + "\n" + b.body + "\n```\n";
  }
  return out;
}

bool is_json_tag(std::string_view tag) { return lower(tag) == "json"; }

bool is_python_tag(std::string_view tag) {
  std::string t = lower(tag);
  return t == "python" || t == "py" || t == "python3";
}

std::optional<FencedBlock> last_json_block(const std::vector<FencedBlock>& blocks) {
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    if (is_json_tag(it->tag)) return *it;
    if (it->tag.empty() && parses_as_json(it->body)) return *it;
  }
  return std::nullopt;
}

std::optional<FencedBlock> last_code_block(const std::vector<FencedBlock>& blocks) {
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    if (is_python_tag(it->tag)) return *it;
    if (it->tag.empty() && !parses_as_json(it->body)) return *it;
  }
  return std::nullopt;
}

}  // namespace pips
