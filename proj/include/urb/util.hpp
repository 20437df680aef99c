#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace urb {

std::string to_lower_ascii(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Strict numeric parsing: the whole (trimmed) token must be consumed.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Deterministic decimal formatting for report files.
std::string fmt_double(double v);

// FNV-1a, used to fingerprint configs in stage manifests.
std::uint64_t fnv1a64(std::string_view s);

}  // namespace urb
