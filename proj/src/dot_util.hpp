#pragma once

#include <string>
#include <string_view>

namespace rgd::detail {

// Double-quoted DOT ID with quotes and backslashes escaped.
inline std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace rgd::detail
