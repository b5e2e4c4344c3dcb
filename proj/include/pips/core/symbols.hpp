#pragma once

#include <json.hpp>
#include <string>
#include <string_view>

namespace pips {

using Json = nlohmann::json;

// UTF-8, keys sorted bytewise, no insignificant whitespace, minimal escaping.
// Used for cache keys, worker requests and result files, so the output must
// not change between runs or platforms.
std::string canonical_dump(const Json& value);

// Program input r = c(x): a JSON tree plus its canonical serialization.
class SymbolStore {
 public:
  SymbolStore();
  explicit SymbolStore(Json root);

  // Throws SchemaError when text is not valid JSON.
  static SymbolStore parse(std::string_view text);

  const Json& root() const { return root_; }
  const std::string& canonical_bytes() const { return canonical_; }

  friend bool operator==(const SymbolStore& a, const SymbolStore& b) {
    return a.canonical_ == b.canonical_;
  }

 private:
  Json root_;
  std::string canonical_;
};

}  // namespace pips
