#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace deeptrend {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

/// Parses the whole of `text` as a double; nullopt on any trailing garbage.
std::optional<double> parse_number(std::string_view text);

std::string_view trim(std::string_view text);

/// 64-bit FNV-1a, used for config fingerprints embedded in outputs.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

} // namespace deeptrend
