#include "core/json_scan.hpp"

namespace tell {

namespace {

// Index one past the brace closing the object opened at `open`, or npos.
std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false, escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<Json> find_json_object(std::string_view text, std::size_t from, std::size_t* found_at) {
  for (std::size_t pos = text.find('{', from); pos != std::string_view::npos; pos = text.find('{', pos + 1)) {
    std::size_t end = match_brace(text, pos);
    if (end == std::string_view::npos) continue;
    Json j = Json::parse(text.substr(pos, end - pos), nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    if (found_at) *found_at = pos;
    return j;
  }
  return std::nullopt;
}

}  // namespace tell
