#ifndef EXPBATCH_XML_HPP
#define EXPBATCH_XML_HPP

// Template-file engine: a strict parser for the XML subset used by
// experiment inputs, a canonical serializer whose bytes are stable across
// round trips, path addressing of the form /tag/tag[@attr='v']/tag[n],
// and the three mutations applied during input generation.
//
// Supported XML: elements, attributes, text, comments (discarded).
// Rejected outright: namespaces (any ':' in a name), DTD, CDATA and
// processing instructions other than the leading declaration. A bare
// `xmlns` attribute is carried through as plain data; no namespace
// semantics are applied.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "expbatch/error.hpp"

namespace expbatch::xml {

struct XmlElement {
  std::string tag;
  // Insertion order preserved; serialization sorts by name.
  std::vector<std::pair<std::string, std::string>> attrs;
  // Concatenation of the element's direct text, ASCII-trimmed.
  std::string text;
  std::vector<XmlElement> children;

  const std::string* find_attr(const std::string& name) const;
  void set_attr(const std::string& name, const std::string& value);
  std::size_t element_count() const;  // this node plus all descendants

  bool operator==(const XmlElement&) const = default;
};

struct XmlDoc {
  XmlElement root;
  bool operator==(const XmlDoc&) const = default;
};

// One step of a path: a tag plus an optional predicate.
struct XmlPathStep {
  enum class Pred { None, AttrEquals, Index };
  std::string tag;
  Pred pred = Pred::None;
  std::string attr_name;   // Pred::AttrEquals
  std::string attr_value;  // Pred::AttrEquals
  int index = 0;           // Pred::Index, 1-based

  bool operator==(const XmlPathStep&) const = default;
};

struct XmlPath {
  std::vector<XmlPathStep> steps;

  // Grammar: ('/' tag predicate?)+ with predicate [@name='value'] or [n].
  static XmlPath parse(const std::string& text);
  std::string str() const;

  bool operator==(const XmlPath&) const = default;
};

struct Transform {
  enum class Kind { SetAttr, AddChild, RemoveNode };

  Kind kind = Kind::SetAttr;
  XmlPath path;  // target node, or the parent for AddChild
  std::string attr;
  std::string value;
  std::string tag;
  std::map<std::string, std::string> attrs;

  static Transform set_attr(XmlPath path, std::string attr, std::string value);
  static Transform add_child(XmlPath parent, std::string tag,
                             std::map<std::string, std::string> attrs);
  static Transform remove_node(XmlPath path);

  std::string str() const;

  bool operator==(const Transform&) const = default;
};

// Errors: XmlSyntaxError with line/column; UnsupportedFeature for
// namespaces, DTD, CDATA and processing instructions.
XmlDoc parse_xml(const std::string& text);

// Canonical form: declaration line, 2-space indent, attributes sorted by
// name, self-closing childless/textless elements, LF endings, trailing
// newline. serialize(parse(serialize(d))) == serialize(d).
std::string serialize_xml(const XmlDoc& doc);

// All nodes matched by the path. An empty result is not an error.
std::vector<const XmlElement*> resolve_path(const XmlDoc& doc,
                                            const XmlPath& path);

// Returns a new document. SetAttr/RemoveNode require exactly one match,
// AddChild requires exactly one parent: NoMatch / AmbiguousPath otherwise
// (both carry the path text). Removing the root is RemoveRoot.
XmlDoc apply_transform(const XmlDoc& doc, const Transform& t);

}  // namespace expbatch::xml

#endif  // EXPBATCH_XML_HPP
