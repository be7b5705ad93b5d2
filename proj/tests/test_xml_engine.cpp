#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <random>
#include <sstream>

#include "expbatch/xml.hpp"

using namespace expbatch;
using namespace expbatch::xml;

namespace {

XmlDoc parse(const std::string& s) { return parse_xml(s); }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::IoError;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> lines;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// Random documents for the fixpoint property.
XmlElement random_element(std::mt19937_64& rng, int depth) {
  static const char* tags[] = {"alpha", "beta", "gamma", "delta"};
  static const char* attr_names[] = {"a", "b", "zz", "m-n", "x_y"};
  static const char* values[] = {"1", "two", "a b", "<&>\"'", "0.5", ""};
  XmlElement el;
  el.tag = tags[rng() % 4];
  int n_attrs = rng() % 4;
  for (int i = 0; i < n_attrs; ++i)
    el.set_attr(attr_names[rng() % 5], values[rng() % 6]);
  if (rng() % 3 == 0) el.text = values[rng() % 6];
  // Trimmed text is the parser's canonical form; mirror it here.
  while (!el.text.empty() && (el.text.front() == ' ')) el.text.erase(0, 1);
  while (!el.text.empty() && (el.text.back() == ' ')) el.text.pop_back();
  if (depth < 3) {
    int n_children = rng() % (depth == 0 ? 4 : 3);
    for (int i = 0; i < n_children; ++i)
      el.children.push_back(random_element(rng, depth + 1));
  }
  return el;
}

}  // namespace

TEST_CASE("parse minimal document") {
  XmlDoc doc = parse("<a x=\"1\"/>");
  CHECK(doc.root.tag == "a");
  REQUIRE(doc.root.find_attr("x") != nullptr);
  CHECK(*doc.root.find_attr("x") == "1");
  CHECK(doc.root.children.empty());
}

TEST_CASE("parse nested structure") {
  XmlDoc doc = parse("<a><b/><b/></a>");
  REQUIRE(doc.root.children.size() == 2);
  CHECK(doc.root.children[0].tag == "b");
  CHECK(doc.root.children[1].tag == "b");
}

TEST_CASE("parse text, comments and entities") {
  XmlDoc doc = parse("<a><!-- note --><b>hi &amp; &lt;bye&gt;</b></a>");
  REQUIRE(doc.root.children.size() == 1);
  CHECK(doc.root.children[0].text == "hi & <bye>");

  XmlDoc decl = parse("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<a/>");
  CHECK(decl.root.tag == "a");

  XmlDoc num = parse("<a t=\"&#65;&#x42;\"/>");
  CHECK(*num.root.find_attr("t") == "AB");
}

TEST_CASE("parse rejects unsupported features") {
  CHECK(kind_of([] { parse("<a><!DOCTYPE foo></a>"); }) ==
        ErrorKind::UnsupportedFeature);
  CHECK(kind_of([] { parse("<!DOCTYPE html><a/>"); }) ==
        ErrorKind::UnsupportedFeature);
  CHECK(kind_of([] { parse("<a><![CDATA[x]]></a>"); }) ==
        ErrorKind::UnsupportedFeature);
  CHECK(kind_of([] { parse("<a><?pi data?></a>"); }) ==
        ErrorKind::UnsupportedFeature);
  CHECK(kind_of([] { parse("<ns:a/>"); }) == ErrorKind::UnsupportedFeature);
  CHECK(kind_of([] { parse("<a xmlns:x=\"u\"/>"); }) ==
        ErrorKind::UnsupportedFeature);
}

TEST_CASE("plain xmlns attribute passes through as data") {
  XmlDoc doc = parse("<svg xmlns=\"http://www.w3.org/2000/svg\"/>");
  CHECK(*doc.root.find_attr("xmlns") == "http://www.w3.org/2000/svg");
}

TEST_CASE("parse errors carry line and column") {
  try {
    parse("<a>\n  <b>\n</a>");
    FAIL("expected XmlSyntaxError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::XmlSyntaxError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK(kind_of([] { parse(""); }) == ErrorKind::XmlSyntaxError);
  CHECK(kind_of([] { parse("<a x=\"1\" x=\"2\"/>"); }) ==
        ErrorKind::XmlSyntaxError);
  CHECK(kind_of([] { parse("<a/><b/>"); }) == ErrorKind::XmlSyntaxError);
  CHECK(kind_of([] { parse("<a>&bogus;</a>"); }) == ErrorKind::XmlSyntaxError);
}

TEST_CASE("canonical serialization sorts attributes") {
  XmlDoc doc = parse("<a z=\"1\" a=\"2\"/>");
  CHECK(serialize_xml(doc) ==
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<a a=\"2\" z=\"1\"/>\n");
}

TEST_CASE("canonical serialization shapes") {
  CHECK(serialize_xml(parse("<a></a>")) ==
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<a/>\n");
  CHECK(serialize_xml(parse("<a>text</a>")) ==
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<a>text</a>\n");
  CHECK(serialize_xml(parse("<a><b/></a>")) ==
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<a>\n  <b/>\n</a>\n");
  // Text plus children: text hoisted onto its own indented line.
  CHECK(serialize_xml(parse("<a>hi<b/></a>")) ==
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<a>\n  hi\n  <b/>\n</a>\n");
}

TEST_CASE("canonical fixpoint on random documents") {
  std::mt19937_64 rng(20260810);
  for (int i = 0; i < 200; ++i) {
    XmlDoc doc;
    doc.root = random_element(rng, 0);
    std::string once = serialize_xml(doc);
    std::string twice = serialize_xml(parse_xml(once));
    REQUIRE(once == twice);
  }
}

TEST_CASE("resolve_path basics") {
  XmlDoc doc = parse("<a><b/><b x=\"1\"/><c><b/></c></a>");
  CHECK(resolve_path(doc, XmlPath::parse("/a/b")).size() == 2);
  CHECK(resolve_path(doc, XmlPath::parse("/a/c/b")).size() == 1);
  CHECK(resolve_path(doc, XmlPath::parse("/a/d")).empty());
  CHECK(resolve_path(doc, XmlPath::parse("/z/b")).empty());

  auto second = resolve_path(doc, XmlPath::parse("/a/b[2]"));
  REQUIRE(second.size() == 1);
  CHECK(second[0]->find_attr("x") != nullptr);

  auto by_attr = resolve_path(doc, XmlPath::parse("/a/b[@x='1']"));
  REQUIRE(by_attr.size() == 1);
  CHECK(by_attr[0]->find_attr("x") != nullptr);
  CHECK(resolve_path(doc, XmlPath::parse("/a/b[@x='2']")).empty());
}

TEST_CASE("path parse and render round trip") {
  for (const char* text :
       {"/a", "/a/b", "/a/b[2]", "/a/b[@x='1']/c", "/a/b[@m-n='a b']"}) {
    CHECK(XmlPath::parse(text).str() == text);
  }
  CHECK_THROWS_AS(XmlPath::parse(""), Error);
  CHECK_THROWS_AS(XmlPath::parse("a/b"), Error);
  CHECK_THROWS_AS(XmlPath::parse("/a/"), Error);
  CHECK_THROWS_AS(XmlPath::parse("/a[b]"), Error);
  CHECK_THROWS_AS(XmlPath::parse("/a[0]"), Error);
}

TEST_CASE("apply_transform set_attr") {
  XmlDoc doc = parse("<experiment><population size=\"4\"/></experiment>");
  XmlDoc out = apply_transform(
      doc, Transform::set_attr(XmlPath::parse("/experiment/population"),
                               "size", "8"));
  auto nodes = resolve_path(out, XmlPath::parse("/experiment/population"));
  REQUIRE(nodes.size() == 1);
  CHECK(*nodes[0]->find_attr("size") == "8");
  // Original untouched (value semantics).
  CHECK(*resolve_path(doc, XmlPath::parse("/experiment/population"))[0]
             ->find_attr("size") == "4");
}

TEST_CASE("apply_transform add_child and remove_node") {
  XmlDoc doc = parse("<a><b/></a>");
  XmlDoc grown = apply_transform(
      doc, Transform::add_child(XmlPath::parse("/a"), "probe", {{"k", "v"}}));
  CHECK(grown.root.element_count() == doc.root.element_count() + 1);
  CHECK(grown.root.children.back().tag == "probe");

  XmlDoc shrunk =
      apply_transform(doc, Transform::remove_node(XmlPath::parse("/a/b")));
  CHECK(shrunk.root.children.empty());
  CHECK(shrunk.root.element_count() == 1);
}

TEST_CASE("remove subtree decreases element count by subtree size") {
  XmlDoc doc = parse("<a><b><c/><c/></b><d/></a>");
  std::size_t before = doc.root.element_count();
  XmlDoc out =
      apply_transform(doc, Transform::remove_node(XmlPath::parse("/a/b")));
  CHECK(before - out.root.element_count() == 3);
}

TEST_CASE("transform error paths") {
  XmlDoc doc = parse("<a><b/><b/></a>");
  CHECK(kind_of([&] {
          apply_transform(doc, Transform::set_attr(XmlPath::parse("/a/b"),
                                                   "x", "1"));
        }) == ErrorKind::AmbiguousPath);
  CHECK(kind_of([&] {
          apply_transform(doc, Transform::set_attr(XmlPath::parse("/a/c"),
                                                   "x", "1"));
        }) == ErrorKind::NoMatch);
  CHECK(kind_of([&] {
          apply_transform(doc, Transform::remove_node(XmlPath::parse("/a")));
        }) == ErrorKind::RemoveRoot);

  try {
    apply_transform(doc, Transform::set_attr(XmlPath::parse("/a/b"), "x", "1"));
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("/a/b") != std::string::npos);
  }
}

TEST_CASE("set_attr locality: only the target start-tag line changes") {
  XmlDoc doc = parse(
      "<root><left x=\"1\"><deep/></left><right y=\"2\"/></root>");
  XmlDoc out = apply_transform(
      doc, Transform::set_attr(XmlPath::parse("/root/left"), "x", "99"));
  auto before = split_lines(serialize_xml(doc));
  auto after = split_lines(serialize_xml(out));
  REQUIRE(before.size() == after.size());
  int differing = 0;
  std::size_t where = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (before[i] != after[i]) {
      ++differing;
      where = i;
    }
  }
  CHECK(differing == 1);
  CHECK(after[where].find("<left") != std::string::npos);
}

TEST_CASE("path determinism") {
  XmlDoc doc = parse("<a><b/><b/><c/></a>");
  XmlPath path = XmlPath::parse("/a/b");
  auto first = resolve_path(doc, path);
  for (int i = 0; i < 10; ++i) CHECK(resolve_path(doc, path) == first);
}
