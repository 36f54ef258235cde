#include "xml_reader.hpp"

#include <charconv>

#include "rgd/errors.hpp"

namespace rgd::detail {

const std::string* XmlElement::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

bool is_name_start(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':' || u >= 0x80;
}

bool is_name_char(char c) {
  return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  std::unique_ptr<XmlElement> document() {
    if (s_.starts_with("\xEF\xBB\xBF")) pos_ = 3;
    misc();
    if (pos_ < s_.size() && s_.substr(pos_).starts_with("<!DOCTYPE")) {
      skip_doctype();
      misc();
    }
    if (pos_ >= s_.size() || s_[pos_] != '<') fail("expected root element");
    auto root = element();
    misc();
    if (pos_ != s_.size()) fail("content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("malformed XML at byte " + std::to_string(pos_) + ": " + msg,
                     ParseError::Unit::byte_offset, pos_);
  }

  bool at(std::string_view token) const { return s_.substr(pos_).starts_with(token); }

  void expect(std::string_view token) {
    if (!at(token)) fail("expected '" + std::string(token) + "'");
    pos_ += token.size();
  }

  void skip_space() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }

  void skip_until(std::string_view terminator, const char* what) {
    const auto end = s_.find(terminator, pos_);
    if (end == std::string_view::npos) fail(std::string("unterminated ") + what);
    pos_ = end + terminator.size();
  }

  // Whitespace, comments and processing instructions outside the root.
  void misc() {
    for (;;) {
      skip_space();
      if (at("<?")) {
        skip_until("?>", "processing instruction");
      } else if (at("<!--")) {
        skip_until("-->", "comment");
      } else {
        return;
      }
    }
  }

  void skip_doctype() {
    int depth = 0;
    while (pos_ < s_.size()) {
      const char c = s_[pos_++];
      if (c == '[') ++depth;
      else if (c == ']') --depth;
      else if (c == '>' && depth == 0) return;
    }
    fail("unterminated DOCTYPE");
  }

  std::string name() {
    if (pos_ >= s_.size() || !is_name_start(s_[pos_])) fail("expected a name");
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_name_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  void entity(std::string& out) {
    const std::size_t amp = pos_;
    ++pos_;
    const auto semi = s_.find(';', pos_);
    if (semi == std::string_view::npos || semi - pos_ > 10) {
      pos_ = amp;
      fail("unterminated entity reference");
    }
    const auto ref = s_.substr(pos_, semi - pos_);
    if (ref == "lt") out.push_back('<');
    else if (ref == "gt") out.push_back('>');
    else if (ref == "amp") out.push_back('&');
    else if (ref == "quot") out.push_back('"');
    else if (ref == "apos") out.push_back('\'');
    else if (ref.starts_with('#')) {
      unsigned long cp = 0;
      const bool hex = ref.size() > 1 && (ref[1] == 'x' || ref[1] == 'X');
      const auto digits = ref.substr(hex ? 2 : 1);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp,
                                       hex ? 16 : 10);
      if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size() ||
          cp > 0x10FFFF) {
        pos_ = amp;
        fail("bad character reference");
      }
      append_utf8(out, cp);
    } else {
      pos_ = amp;
      fail("unknown entity '&" + std::string(ref) + ";'");
    }
    pos_ = semi + 1;
  }

  std::string attribute_value() {
    if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) {
      fail("expected quoted attribute value");
    }
    const char quote = s_[pos_++];
    std::string value;
    for (;;) {
      if (pos_ >= s_.size()) fail("unterminated attribute value");
      const char c = s_[pos_];
      if (c == quote) {
        ++pos_;
        return value;
      }
      if (c == '<') fail("'<' in attribute value");
      if (c == '&') {
        entity(value);
      } else {
        value.push_back(c);
        ++pos_;
      }
    }
  }

  std::unique_ptr<XmlElement> element() {
    expect("<");
    auto el = std::make_unique<XmlElement>();
    el->name = name();
    for (;;) {
      const std::size_t before = pos_;
      skip_space();
      if (at("/>")) {
        pos_ += 2;
        return el;
      }
      if (at(">")) {
        ++pos_;
        break;
      }
      if (pos_ == before) fail("expected whitespace before attribute");
      auto key = name();
      skip_space();
      expect("=");
      skip_space();
      auto value = attribute_value();
      for (const auto& [k, _] : el->attributes) {
        if (k == key) fail("duplicate attribute '" + key + "'");
      }
      el->attributes.emplace_back(std::move(key), std::move(value));
    }
    content(*el);
    return el;
  }

  void content(XmlElement& el) {
    std::string ignored_text;
    for (;;) {
      if (pos_ >= s_.size()) fail("unclosed element <" + el.name + ">");
      if (at("</")) {
        pos_ += 2;
        const auto closing = name();
        if (closing != el.name) fail("mismatched closing tag </" + closing + "> for <" + el.name + ">");
        skip_space();
        expect(">");
        return;
      }
      if (at("<!--")) {
        skip_until("-->", "comment");
      } else if (at("<![CDATA[")) {
        skip_until("]]>", "CDATA section");
      } else if (at("<?")) {
        skip_until("?>", "processing instruction");
      } else if (at("<")) {
        el.children.push_back(element());
      } else if (s_[pos_] == '&') {
        entity(ignored_text);
        ignored_text.clear();
      } else {
        ++pos_;
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::unique_ptr<XmlElement> parse_xml(std::string_view content) {
  return Parser(content).document();
}

}  // namespace rgd::detail
