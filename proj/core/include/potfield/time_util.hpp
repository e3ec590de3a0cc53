#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace potfield {

/// Unix seconds (UTC).
using UnixSeconds = std::int64_t;

/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS][Z]" (space separator allowed)
/// or a plain integer of Unix seconds. Returns nullopt on anything else.
std::optional<UnixSeconds> parse_timestamp(std::string_view text);

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_iso8601(UnixSeconds t);

/// "YYYY-MM-DD"
std::string format_date(UnixSeconds t);

}  // namespace potfield
