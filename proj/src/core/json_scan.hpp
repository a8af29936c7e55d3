#pragma once

#include <optional>
#include <string_view>

#include "core/sample.hpp"

namespace tell {

// First balanced {...} at or after `from` that parses as a JSON object.
// Braces inside string literals are skipped; prose around the object is
// ignored.
std::optional<Json> find_json_object(std::string_view text, std::size_t from = 0,
                                     std::size_t* found_at = nullptr);

}  // namespace tell
