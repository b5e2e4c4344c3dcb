#include "pips/core/symbols.hpp"

#include "pips/core/errors.hpp"

namespace pips {

std::string canonical_dump(const Json& value) {
  // nlohmann's object_t is a std::map, so keys already come out sorted
  // bytewise; dump(-1) emits no whitespace and escapes only what JSON requires.
  return value.dump(-1, ' ', false, Json::error_handler_t::strict);
}

SymbolStore::SymbolStore() : SymbolStore(Json::object()) {}

SymbolStore::SymbolStore(Json root) : root_(std::move(root)), canonical_(canonical_dump(root_)) {}

SymbolStore SymbolStore::parse(std::string_view text) {
  try {
    return SymbolStore(Json::parse(text));
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("symbols are not valid JSON: ") + e.what());
  }
}

}  // namespace pips
