#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rgd::detail {

// Just enough XML for event-log interchange: elements, attributes, text,
// comments, processing instructions, CDATA, a skipped DOCTYPE, and the
// predefined plus numeric character entities. No namespaces, no DTD
// expansion.
struct XmlElement {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<std::unique_ptr<XmlElement>> children;

  const std::string* attribute(std::string_view key) const;
};

// Throws ParseError (byte offset) on malformed input.
std::unique_ptr<XmlElement> parse_xml(std::string_view content);

}  // namespace rgd::detail
