#include "text_util.hpp"

#include <charconv>
#include <chrono>

#include "rgd/errors.hpp"

namespace rgd::detail {

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

std::vector<CsvRecord> read_csv_records(std::string_view content, char delimiter) {
  std::vector<CsvRecord> records;
  // Skip a UTF-8 byte order mark.
  if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);

  std::size_t i = 0;
  std::size_t line = 1;
  while (i < content.size()) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool end_of_record = false;
    while (!end_of_record) {
      field.clear();
      if (i < content.size() && content[i] == '"') {
        const std::size_t quote_line = line;
        ++i;
        for (;;) {
          if (i >= content.size()) {
            throw ParseError("unterminated quoted field starting on line " +
                                 std::to_string(quote_line),
                             ParseError::Unit::line, quote_line);
          }
          const char c = content[i++];
          if (c == '"') {
            if (i < content.size() && content[i] == '"') {
              field.push_back('"');
              ++i;
            } else {
              break;
            }
          } else {
            if (c == '\n') ++line;
            field.push_back(c);
          }
        }
        // Anything between the closing quote and the delimiter is kept verbatim.
        while (i < content.size() && content[i] != delimiter && content[i] != '\n' &&
               content[i] != '\r') {
          field.push_back(content[i++]);
        }
      } else {
        while (i < content.size() && content[i] != delimiter && content[i] != '\n' &&
               content[i] != '\r') {
          field.push_back(content[i++]);
        }
      }
      rec.fields.push_back(field);
      if (i >= content.size()) {
        end_of_record = true;
      } else if (content[i] == delimiter) {
        ++i;
      } else {
        if (content[i] == '\r') ++i;
        if (i < content.size() && content[i] == '\n') ++i;
        ++line;
        end_of_record = true;
      }
    }
    const bool blank = rec.fields.size() == 1 && trim(rec.fields[0]).empty();
    if (!blank) records.push_back(std::move(rec));
  }
  return records;
}

std::string csv_escape(std::string_view field, char delimiter) {
  const bool needs_quotes = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) !=
                                std::string_view::npos ||
                            trim(field).size() != field.size();
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  // Exactly `width` decimal digits.
  std::optional<int> digits(std::size_t width) {
    if (pos_ + width > s_.size()) return std::nullopt;
    int value = 0;
    const auto* begin = s_.data() + pos_;
    auto [ptr, ec] = std::from_chars(begin, begin + width, value);
    if (ec != std::errc{} || ptr != begin + width) return std::nullopt;
    pos_ += width;
    return value;
  }

  std::string_view rest_digits() {
    const std::size_t start = pos_;
    while (!done() && s_[pos_] >= '0' && s_[pos_] <= '9') ++pos_;
    return s_.substr(start, pos_ - start);
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::optional<std::int64_t> parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  Cursor c(trim(text));
  const auto y = c.digits(4);
  if (!y || !c.accept('-')) return std::nullopt;
  const auto mo = c.digits(2);
  if (!mo || !c.accept('-')) return std::nullopt;
  const auto d = c.digits(2);
  if (!d) return std::nullopt;
  const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)},
                           day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;

  std::int64_t micros = duration_cast<microseconds>(sys_days{ymd}.time_since_epoch()).count();
  if (c.done()) return micros;
  if (!c.accept('T') && !c.accept(' ')) return std::nullopt;

  const auto hh = c.digits(2);
  if (!hh || !c.accept(':')) return std::nullopt;
  const auto mm = c.digits(2);
  if (!mm) return std::nullopt;
  int ss = 0;
  if (c.accept(':')) {
    const auto s = c.digits(2);
    if (!s) return std::nullopt;
    ss = *s;
  }
  if (*hh > 23 || *mm > 59 || ss > 60) return std::nullopt;
  std::int64_t frac = 0;
  if (c.accept('.') || c.accept(',')) {
    const auto f = c.rest_digits();
    if (f.empty()) return std::nullopt;
    std::int64_t scale = 100000;
    for (std::size_t k = 0; k < f.size() && k < 6; ++k) {
      frac += (f[k] - '0') * scale;
      scale /= 10;
    }
  }
  micros += ((*hh * 60LL + *mm) * 60LL + ss) * 1000000LL + frac;

  if (c.done()) return micros;
  if (c.accept('Z')) return c.done() ? std::optional(micros) : std::nullopt;
  int sign = 0;
  if (c.accept('+')) sign = 1;
  else if (c.accept('-')) sign = -1;
  else return std::nullopt;
  const auto oh = c.digits(2);
  if (!oh) return std::nullopt;
  c.accept(':');
  int om = 0;
  if (!c.done()) {
    const auto m = c.digits(2);
    if (!m) return std::nullopt;
    om = *m;
  }
  if (!c.done()) return std::nullopt;
  micros -= sign * (*oh * 60LL + om) * 60LL * 1000000LL;
  return micros;
}

}  // namespace rgd::detail
