#pragma once

#include <map>
#include <string>
#include <string_view>

namespace pips {

namespace assets {
// Embedded template text by name; throws std::out_of_range for unknown names.
std::string_view lookup(std::string_view name);
}  // namespace assets

using Slots = std::map<std::string, std::string, std::less<>>;

// Replaces every "{name}" whose name is a key of slots, in one left-to-right
// pass. Substituted text is never rescanned and unknown braces are kept, so
// templates that show JSON examples render unchanged.
std::string render_template(std::string_view tmpl, const Slots& slots);

}  // namespace pips
