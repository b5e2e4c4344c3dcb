#include "pips/core/prompts.hpp"

namespace pips {

std::string render_template(std::string_view tmpl, const Slots& slots) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = slots.find(tmpl.substr(i + 1, close - i - 1));
        if (it != slots.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

}  // namespace pips
