#include "expbatch/toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace expbatch::toml {

namespace {

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }

  char advance() {
    char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::ParseError,
                "TOML line " + std::to_string(line) + ": " + what);
  }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r'))
      advance();
  }

  // Spaces, newlines and comments; used inside arrays.
  void skip_filler() {
    for (;;) {
      skip_spaces();
      if (!eof() && peek() == '#') {
        while (!eof() && peek() != '\n') advance();
        continue;
      }
      if (!eof() && peek() == '\n') {
        advance();
        continue;
      }
      return;
    }
  }

  void expect_line_end() {
    skip_spaces();
    if (eof()) return;
    if (peek() == '#') {
      while (!eof() && peek() != '\n') advance();
    }
    if (!eof()) {
      if (peek() != '\n') fail("unexpected trailing content");
      advance();
    }
  }
};

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_key_segment(Cursor& c) {
  std::string key;
  while (!c.eof() && is_bare_key_char(c.peek())) key += c.advance();
  if (key.empty()) c.fail("expected a key");
  return key;
}

std::string parse_dotted_key(Cursor& c) {
  std::string key = parse_key_segment(c);
  while (!c.eof() && c.peek() == '.') {
    c.advance();
    key += '.';
    key += parse_key_segment(c);
  }
  return key;
}

std::string parse_basic_string(Cursor& c) {
  c.advance();  // opening quote
  std::string out;
  for (;;) {
    if (c.eof()) c.fail("unterminated string");
    char ch = c.advance();
    if (ch == '"') return out;
    if (ch == '\n') c.fail("newline in string");
    if (ch == '\\') {
      if (c.eof()) c.fail("unterminated escape");
      char esc = c.advance();
      switch (esc) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: c.fail(std::string("unsupported escape \\") + esc);
      }
    } else {
      out += ch;
    }
  }
}

Value parse_value(Cursor& c);

Value parse_array(Cursor& c) {
  c.advance();  // '['
  Value v;
  v.kind = Value::Kind::Array;
  for (;;) {
    c.skip_filler();
    if (c.eof()) c.fail("unterminated array");
    if (c.peek() == ']') {
      c.advance();
      return v;
    }
    v.array.push_back(parse_value(c));
    c.skip_filler();
    if (c.eof()) c.fail("unterminated array");
    if (c.peek() == ',') {
      c.advance();
      continue;
    }
    if (c.peek() == ']') {
      c.advance();
      return v;
    }
    c.fail("expected ',' or ']' in array");
  }
}

Value parse_value(Cursor& c) {
  if (c.eof()) c.fail("expected a value");
  char ch = c.peek();
  Value v;
  if (ch == '"') {
    v.kind = Value::Kind::String;
    v.str = parse_basic_string(c);
    return v;
  }
  if (ch == '[') return parse_array(c);
  if (ch == '-' || ch == '+' || std::isdigit(static_cast<unsigned char>(ch))) {
    std::string num;
    if (ch == '-' || ch == '+') num += c.advance();
    while (!c.eof() && std::isdigit(static_cast<unsigned char>(c.peek())))
      num += c.advance();
    if (!c.eof() &&
        (c.peek() == '.' || c.peek() == 'e' || c.peek() == 'E'))
      c.fail("floating-point values are not supported");
    if (num.empty() || num == "-" || num == "+") c.fail("bad number");
    v.kind = Value::Kind::Integer;
    try {
      v.integer = std::stoll(num);
    } catch (const std::exception&) {
      c.fail("integer out of range: " + num);
    }
    return v;
  }
  if (std::isalpha(static_cast<unsigned char>(ch))) {
    std::string word;
    while (!c.eof() && std::isalpha(static_cast<unsigned char>(c.peek())))
      word += c.advance();
    if (word == "true" || word == "false") {
      v.kind = Value::Kind::Boolean;
      v.boolean = (word == "true");
      return v;
    }
    c.fail("bare value '" + word + "' (strings must be quoted)");
  }
  c.fail(std::string("unexpected character '") + ch + "'");
}

}  // namespace

Document Document::parse(const std::string& text) {
  Document doc;
  Cursor c{text};
  std::string prefix;

  while (!c.eof()) {
    c.skip_spaces();
    if (c.eof()) break;
    char ch = c.peek();
    if (ch == '\n') {
      c.advance();
      continue;
    }
    if (ch == '#') {
      while (!c.eof() && c.peek() != '\n') c.advance();
      continue;
    }
    if (ch == '[') {
      c.advance();
      if (!c.eof() && c.peek() == '[')
        c.fail("arrays of tables are not supported");
      c.skip_spaces();
      prefix = parse_dotted_key(c);
      c.skip_spaces();
      if (c.eof() || c.peek() != ']') c.fail("unterminated table header");
      c.advance();
      c.expect_line_end();
      continue;
    }
    std::string key = parse_dotted_key(c);
    c.skip_spaces();
    if (c.eof() || c.peek() != '=') c.fail("expected '=' after key '" + key + "'");
    c.advance();
    c.skip_spaces();
    Value value = parse_value(c);
    c.expect_line_end();

    std::string full = prefix.empty() ? key : prefix + "." + key;
    if (doc.entries_.count(full)) c.fail("duplicate key '" + full + "'");
    doc.entries_.emplace(std::move(full), std::move(value));
  }
  return doc;
}

Document Document::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse(buffer.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

bool Document::contains(const std::string& key) const {
  return entries_.count(key) > 0;
}

const Value* Document::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::optional<std::string> Document::get_string(const std::string& key) const {
  const Value* v = find(key);
  if (!v) return std::nullopt;
  if (v->kind != Value::Kind::String)
    throw Error(ErrorKind::SchemaError, "'" + key + "' must be a string");
  return v->str;
}

std::optional<std::int64_t> Document::get_integer(
    const std::string& key) const {
  const Value* v = find(key);
  if (!v) return std::nullopt;
  if (v->kind != Value::Kind::Integer)
    throw Error(ErrorKind::SchemaError, "'" + key + "' must be an integer");
  return v->integer;
}

std::optional<bool> Document::get_boolean(const std::string& key) const {
  const Value* v = find(key);
  if (!v) return std::nullopt;
  if (v->kind != Value::Kind::Boolean)
    throw Error(ErrorKind::SchemaError, "'" + key + "' must be a boolean");
  return v->boolean;
}

const Value* Document::get_array(const std::string& key) const {
  const Value* v = find(key);
  if (!v) return nullptr;
  if (v->kind != Value::Kind::Array)
    throw Error(ErrorKind::SchemaError, "'" + key + "' must be an array");
  return v;
}

std::vector<std::string> Document::get_string_array(
    const std::string& key) const {
  const Value* v = get_array(key);
  if (!v) return {};
  std::vector<std::string> out;
  for (const Value& item : v->array) {
    if (item.kind != Value::Kind::String)
      throw Error(ErrorKind::SchemaError,
                  "'" + key + "' must be an array of strings");
    out.push_back(item.str);
  }
  return out;
}

std::vector<std::string> Document::children(const std::string& prefix) const {
  std::set<std::string> names;
  std::string p = prefix.empty() ? "" : prefix + ".";
  for (const auto& [key, _] : entries_) {
    if (key.rfind(p, 0) != 0) continue;
    std::string rest = key.substr(p.size());
    std::size_t dot = rest.find('.');
    names.insert(dot == std::string::npos ? rest : rest.substr(0, dot));
  }
  return {names.begin(), names.end()};
}

}  // namespace expbatch::toml
