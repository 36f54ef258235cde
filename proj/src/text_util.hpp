#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rgd::detail {

std::string_view trim(std::string_view s);

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

// RFC 4180 style: quoted fields, doubled quotes, CRLF or LF line ends.
// Throws ParseError on an unterminated quoted field.
std::vector<CsvRecord> read_csv_records(std::string_view content, char delimiter);

std::string csv_escape(std::string_view field, char delimiter);

// ISO-8601 date or date-time, optional fraction and zone designator.
// Returns microseconds since the Unix epoch (UTC), nullopt if unparsable.
std::optional<std::int64_t> parse_iso8601(std::string_view text);

}  // namespace rgd::detail
