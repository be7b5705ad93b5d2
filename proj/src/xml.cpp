#include "expbatch/xml.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace expbatch::xml {

namespace {

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
         c == '.';
}

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_ws(s[b])) ++b;
  while (e > b && is_ws(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  XmlDoc parse() {
    skip_declaration();
    skip_misc();
    if (eof()) fail(ErrorKind::XmlSyntaxError, "no root element");
    XmlDoc doc;
    doc.root = parse_element();
    skip_misc();
    if (!eof()) {
      if (peek() == '<')
        fail(ErrorKind::XmlSyntaxError, "content after root element");
      fail(ErrorKind::XmlSyntaxError, "text outside root element");
    }
    return doc;
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  bool starts_with(const char* s) const {
    return text_.compare(pos_, std::string::traits_type::length(s), s) == 0;
  }

  char advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void advance_n(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) advance();
  }

  [[noreturn]] void fail(ErrorKind kind, const std::string& what) const {
    std::ostringstream os;
    os << what << " at line " << line_ << ", column " << col_;
    throw Error(kind, os.str());
  }

  void skip_ws() {
    while (!eof() && is_ws(peek())) advance();
  }

  void skip_declaration() {
    skip_ws();
    if (starts_with("<?xml")) {
      while (!eof() && !starts_with("?>")) advance();
      if (eof()) fail(ErrorKind::XmlSyntaxError, "unterminated declaration");
      advance_n(2);
    }
  }

  // Whitespace and comments between markup.
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<!--")) {
        skip_comment();
        continue;
      }
      return;
    }
  }

  void skip_comment() {
    advance_n(4);
    while (!eof() && !starts_with("-->")) advance();
    if (eof()) fail(ErrorKind::XmlSyntaxError, "unterminated comment");
    advance_n(3);
  }

  void check_markup_kind() {
    // Called at '<'. Rejects the unsupported constructs with a precise code.
    if (starts_with("<![CDATA["))
      fail(ErrorKind::UnsupportedFeature, "CDATA sections are not supported");
    if (starts_with("<!DOCTYPE"))
      fail(ErrorKind::UnsupportedFeature, "DTDs are not supported");
    if (starts_with("<?"))
      fail(ErrorKind::UnsupportedFeature,
           "processing instructions are not supported");
  }

  std::string parse_name() {
    if (eof()) fail(ErrorKind::XmlSyntaxError, "expected a name");
    if (peek() == ':')
      fail(ErrorKind::UnsupportedFeature, "namespaces are not supported");
    if (!is_name_start(peek()))
      fail(ErrorKind::XmlSyntaxError, "invalid name start character");
    std::string name;
    while (!eof() && (is_name_char(peek()) || peek() == ':')) {
      if (peek() == ':')
        fail(ErrorKind::UnsupportedFeature, "namespaces are not supported");
      name += advance();
    }
    return name;
  }

  std::string parse_reference() {
    // At '&'. Returns the decoded text.
    advance();
    std::string ent;
    while (!eof() && peek() != ';' && ent.size() < 12) ent += advance();
    if (eof() || peek() != ';')
      fail(ErrorKind::XmlSyntaxError, "unterminated entity reference");
    advance();
    if (ent == "amp") return "&";
    if (ent == "lt") return "<";
    if (ent == "gt") return ">";
    if (ent == "quot") return "\"";
    if (ent == "apos") return "'";
    if (ent.size() > 1 && ent[0] == '#') {
      long code = 0;
      try {
        code = (ent[1] == 'x') ? std::stol(ent.substr(2), nullptr, 16)
                               : std::stol(ent.substr(1), nullptr, 10);
      } catch (const std::exception&) {
        fail(ErrorKind::XmlSyntaxError, "bad character reference &" + ent + ";");
      }
      if (code <= 0 || code > 0x10FFFF)
        fail(ErrorKind::XmlSyntaxError, "bad character reference &" + ent + ";");
      return encode_utf8(static_cast<unsigned long>(code));
    }
    fail(ErrorKind::XmlSyntaxError, "unknown entity &" + ent + ";");
  }

  static std::string encode_utf8(unsigned long cp) {
    std::string out;
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return out;
  }

  std::string parse_attr_value() {
    if (eof() || (peek() != '"' && peek() != '\''))
      fail(ErrorKind::XmlSyntaxError, "expected quoted attribute value");
    char quote = advance();
    std::string value;
    for (;;) {
      if (eof())
        fail(ErrorKind::XmlSyntaxError, "unterminated attribute value");
      if (peek() == quote) {
        advance();
        return value;
      }
      if (peek() == '<')
        fail(ErrorKind::XmlSyntaxError, "'<' in attribute value");
      if (peek() == '&')
        value += parse_reference();
      else
        value += advance();
    }
  }

  XmlElement parse_element() {
    check_markup_kind();
    if (peek() != '<') fail(ErrorKind::XmlSyntaxError, "expected '<'");
    advance();
    XmlElement el;
    el.tag = parse_name();
    for (;;) {
      skip_ws();
      if (eof()) fail(ErrorKind::XmlSyntaxError, "unterminated start tag");
      if (peek() == '/') {
        advance();
        if (eof() || peek() != '>')
          fail(ErrorKind::XmlSyntaxError, "malformed empty-element tag");
        advance();
        return el;
      }
      if (peek() == '>') {
        advance();
        parse_content(el);
        return el;
      }
      std::string name = parse_name();
      for (const auto& [existing, _] : el.attrs)
        if (existing == name)
          fail(ErrorKind::XmlSyntaxError, "duplicate attribute '" + name + "'");
      skip_ws();
      if (eof() || peek() != '=')
        fail(ErrorKind::XmlSyntaxError, "expected '=' after attribute name");
      advance();
      skip_ws();
      el.attrs.emplace_back(name, parse_attr_value());
    }
  }

  void parse_content(XmlElement& el) {
    std::string text;
    for (;;) {
      if (eof())
        fail(ErrorKind::XmlSyntaxError,
             "unterminated element <" + el.tag + ">");
      if (peek() == '<') {
        if (starts_with("<!--")) {
          skip_comment();
          continue;
        }
        if (starts_with("</")) {
          advance_n(2);
          std::string closing = parse_name();
          if (closing != el.tag)
            fail(ErrorKind::XmlSyntaxError, "mismatched closing tag </" +
                                                closing + "> for <" + el.tag +
                                                ">");
          skip_ws();
          if (eof() || peek() != '>')
            fail(ErrorKind::XmlSyntaxError, "malformed closing tag");
          advance();
          el.text = trim(text);
          return;
        }
        check_markup_kind();
        el.children.push_back(parse_element());
      } else if (peek() == '&') {
        text += parse_reference();
      } else {
        text += advance();
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Canonical serialization

std::string escape_text(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string escape_attr(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void serialize_element(const XmlElement& el, int depth, std::string& out) {
  const std::string indent(2 * depth, ' ');
  out += indent;
  out += '<';
  out += el.tag;

  auto sorted = el.attrs;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [name, value] : sorted) {
    out += ' ';
    out += name;
    out += "=\"";
    out += escape_attr(value);
    out += '"';
  }

  if (el.children.empty() && el.text.empty()) {
    out += "/>\n";
    return;
  }
  if (el.children.empty()) {
    out += '>';
    out += escape_text(el.text);
    out += "</";
    out += el.tag;
    out += ">\n";
    return;
  }
  out += ">\n";
  if (!el.text.empty()) {
    out += std::string(2 * (depth + 1), ' ');
    out += escape_text(el.text);
    out += '\n';
  }
  for (const auto& child : el.children) serialize_element(child, depth + 1, out);
  out += indent;
  out += "</";
  out += el.tag;
  out += ">\n";
}

// ---------------------------------------------------------------------------
// Path resolution

bool step_matches(const XmlElement& el, const XmlPathStep& step) {
  if (el.tag != step.tag) return false;
  if (step.pred == XmlPathStep::Pred::AttrEquals) {
    const std::string* v = el.find_attr(step.attr_name);
    return v != nullptr && *v == step.attr_value;
  }
  return true;  // index predicates are positional, handled by the caller
}

// Index paths: child indices from the root (empty path = root itself).
using IndexPath = std::vector<std::size_t>;

const XmlElement& at_index_path(const XmlDoc& doc, const IndexPath& ip) {
  const XmlElement* el = &doc.root;
  for (std::size_t i : ip) el = &el->children[i];
  return *el;
}

XmlElement& at_index_path(XmlDoc& doc, const IndexPath& ip) {
  XmlElement* el = &doc.root;
  for (std::size_t i : ip) el = &el->children[i];
  return *el;
}

std::vector<IndexPath> resolve_index_paths(const XmlDoc& doc,
                                           const XmlPath& path) {
  if (path.steps.empty())
    throw Error(ErrorKind::InvalidPath, "empty XML path");

  std::vector<IndexPath> current;
  const XmlPathStep& first = path.steps.front();
  if (step_matches(doc.root, first) &&
      (first.pred != XmlPathStep::Pred::Index || first.index == 1)) {
    current.push_back({});
  }

  for (std::size_t s = 1; s < path.steps.size(); ++s) {
    const XmlPathStep& step = path.steps[s];
    std::vector<IndexPath> next;
    for (const IndexPath& ip : current) {
      const XmlElement& parent = at_index_path(doc, ip);
      int nth = 0;
      for (std::size_t i = 0; i < parent.children.size(); ++i) {
        const XmlElement& child = parent.children[i];
        if (child.tag != step.tag) continue;
        if (step.pred == XmlPathStep::Pred::Index) {
          ++nth;
          if (nth != step.index) continue;
        } else if (!step_matches(child, step)) {
          continue;
        }
        IndexPath extended = ip;
        extended.push_back(i);
        next.push_back(std::move(extended));
      }
    }
    current = std::move(next);
    if (current.empty()) break;
  }
  return current;
}

IndexPath resolve_unique(const XmlDoc& doc, const XmlPath& path) {
  auto matches = resolve_index_paths(doc, path);
  if (matches.empty())
    throw Error(ErrorKind::NoMatch, "no node matches path " + path.str());
  if (matches.size() > 1)
    throw Error(ErrorKind::AmbiguousPath,
                "path " + path.str() + " matches " +
                    std::to_string(matches.size()) + " nodes");
  return matches.front();
}

}  // namespace

// ---------------------------------------------------------------------------
// XmlElement

const std::string* XmlElement::find_attr(const std::string& name) const {
  for (const auto& [n, v] : attrs)
    if (n == name) return &v;
  return nullptr;
}

void XmlElement::set_attr(const std::string& name, const std::string& value) {
  for (auto& [n, v] : attrs) {
    if (n == name) {
      v = value;
      return;
    }
  }
  attrs.emplace_back(name, value);
}

std::size_t XmlElement::element_count() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c.element_count();
  return n;
}

// ---------------------------------------------------------------------------
// XmlPath

XmlPath XmlPath::parse(const std::string& text) {
  auto bad = [&](const std::string& why) -> Error {
    return Error(ErrorKind::InvalidPath, "bad path '" + text + "': " + why);
  };
  if (text.empty() || text[0] != '/') throw bad("must start with '/'");

  XmlPath path;
  std::size_t i = 1;
  while (i <= text.size()) {
    std::size_t start = i;
    while (i < text.size() && text[i] != '/' && text[i] != '[') ++i;
    std::string tag = text.substr(start, i - start);
    if (tag.empty()) throw bad("empty step");
    if (!is_name_start(tag[0])) throw bad("bad tag '" + tag + "'");
    for (char c : tag)
      if (!is_name_char(c)) throw bad("bad tag '" + tag + "'");

    XmlPathStep step;
    step.tag = tag;
    if (i < text.size() && text[i] == '[') {
      std::size_t close = text.find(']', i);
      if (close == std::string::npos) throw bad("unterminated predicate");
      std::string pred = text.substr(i + 1, close - i - 1);
      if (pred.empty()) throw bad("empty predicate");
      if (pred[0] == '@') {
        std::size_t eq = pred.find('=');
        if (eq == std::string::npos) throw bad("predicate missing '='");
        std::string name = pred.substr(1, eq - 1);
        std::string quoted = pred.substr(eq + 1);
        if (name.empty()) throw bad("predicate missing attribute name");
        if (quoted.size() < 2 || quoted.front() != '\'' ||
            quoted.back() != '\'')
          throw bad("predicate value must be single-quoted");
        step.pred = XmlPathStep::Pred::AttrEquals;
        step.attr_name = name;
        step.attr_value = quoted.substr(1, quoted.size() - 2);
      } else {
        for (char c : pred)
          if (!std::isdigit(static_cast<unsigned char>(c)))
            throw bad("bad index predicate [" + pred + "]");
        int n = std::stoi(pred);
        if (n < 1) throw bad("index predicates are 1-based");
        step.pred = XmlPathStep::Pred::Index;
        step.index = n;
      }
      i = close + 1;
    }
    path.steps.push_back(std::move(step));

    if (i == text.size()) break;
    if (text[i] != '/') throw bad("expected '/'");
    ++i;
    if (i == text.size()) throw bad("trailing '/'");
  }
  if (path.steps.empty()) throw bad("no steps");
  return path;
}

std::string XmlPath::str() const {
  std::string out;
  for (const auto& step : steps) {
    out += '/';
    out += step.tag;
    if (step.pred == XmlPathStep::Pred::AttrEquals) {
      out += "[@" + step.attr_name + "='" + step.attr_value + "']";
    } else if (step.pred == XmlPathStep::Pred::Index) {
      out += "[" + std::to_string(step.index) + "]";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transform

Transform Transform::set_attr(XmlPath path, std::string attr,
                              std::string value) {
  if (attr.empty())
    throw Error(ErrorKind::InvariantError, "set_attr with empty attribute");
  Transform t;
  t.kind = Kind::SetAttr;
  t.path = std::move(path);
  t.attr = std::move(attr);
  t.value = std::move(value);
  return t;
}

Transform Transform::add_child(XmlPath parent, std::string tag,
                               std::map<std::string, std::string> attrs) {
  if (tag.empty() || !is_name_start(tag[0]))
    throw Error(ErrorKind::InvariantError, "add_child with bad tag '" + tag + "'");
  for (char c : tag)
    if (!is_name_char(c))
      throw Error(ErrorKind::InvariantError,
                  "add_child with bad tag '" + tag + "'");
  Transform t;
  t.kind = Kind::AddChild;
  t.path = std::move(parent);
  t.tag = std::move(tag);
  t.attrs = std::move(attrs);
  return t;
}

Transform Transform::remove_node(XmlPath path) {
  Transform t;
  t.kind = Kind::RemoveNode;
  t.path = std::move(path);
  return t;
}

std::string Transform::str() const {
  switch (kind) {
    case Kind::SetAttr:
      return "set_attr(" + path.str() + ", " + attr + ", " + value + ")";
    case Kind::AddChild:
      return "add_child(" + path.str() + ", " + tag + ")";
    case Kind::RemoveNode:
      return "remove_node(" + path.str() + ")";
  }
  return "transform";
}

// ---------------------------------------------------------------------------
// Public operations

XmlDoc parse_xml(const std::string& text) { return Parser(text).parse(); }

std::string serialize_xml(const XmlDoc& doc) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  serialize_element(doc.root, 0, out);
  return out;
}

std::vector<const XmlElement*> resolve_path(const XmlDoc& doc,
                                            const XmlPath& path) {
  std::vector<const XmlElement*> nodes;
  for (const IndexPath& ip : resolve_index_paths(doc, path))
    nodes.push_back(&at_index_path(doc, ip));
  return nodes;
}

XmlDoc apply_transform(const XmlDoc& doc, const Transform& t) {
  XmlDoc result = doc;
  switch (t.kind) {
    case Transform::Kind::SetAttr: {
      IndexPath ip = resolve_unique(result, t.path);
      at_index_path(result, ip).set_attr(t.attr, t.value);
      break;
    }
    case Transform::Kind::AddChild: {
      IndexPath ip = resolve_unique(result, t.path);
      XmlElement child;
      child.tag = t.tag;
      for (const auto& [name, value] : t.attrs)
        child.attrs.emplace_back(name, value);
      at_index_path(result, ip).children.push_back(std::move(child));
      break;
    }
    case Transform::Kind::RemoveNode: {
      IndexPath ip = resolve_unique(result, t.path);
      if (ip.empty())
        throw Error(ErrorKind::RemoveRoot,
                    "cannot remove the root element (" + t.path.str() + ")");
      IndexPath parent_ip(ip.begin(), ip.end() - 1);
      XmlElement& parent = at_index_path(result, parent_ip);
      parent.children.erase(parent.children.begin() +
                            static_cast<std::ptrdiff_t>(ip.back()));
      break;
    }
  }
  return result;
}

}  // namespace expbatch::xml
