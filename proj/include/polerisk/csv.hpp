#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace polerisk::csv {

/// Splits text into lines, accepting LF or CRLF endings. A trailing empty
/// line is dropped.
std::vector<std::string_view> split_lines(std::string_view text);

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_fields(std::string_view line);

/// Quotes a field only when it contains a comma, quote or newline.
std::string escape_field(std::string_view field);

std::string_view trim(std::string_view s);

/// Strict number parsing: the whole (trimmed) field must be consumed.
std::optional<double> parse_double(std::string_view field);
std::optional<long long> parse_int(std::string_view field);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Fixed-point text with at most `decimals` fractional digits, trailing zeros removed.
std::string format_fixed(double value, int decimals);

}  // namespace polerisk::csv
