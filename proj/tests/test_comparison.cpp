#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "expbatch/compare.hpp"
#include "expbatch/xml.hpp"

using namespace expbatch;
using namespace expbatch::compare;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::IoError;
}

stats::BatchSummaryTable log8_table(double scale) {
  stats::BatchSummaryTable table;
  table.reducer_name = "final_row";
  table.column_name = "cumulative_blocks";
  table.criteria = {{"1", 1}, {"2", 2}, {"4", 4}, {"8", 8}};
  for (int i = 0; i < 4; ++i) {
    table.values.push_back(scale * (1 << i));
    table.spreads.push_back(0.5);
  }
  return table;
}

}  // namespace

TEST_CASE("comparison renders one series per batch") {
  ComparisonSet set;
  set.entries.emplace_back("rate05", log8_table(5.0));
  set.entries.emplace_back("rate10", log8_table(10.0));
  std::string svg =
      compare_batches(set, {"comparison", "criteria", "blocks"});

  xml::XmlDoc doc = xml::parse_xml(svg);
  int polylines = 0;
  std::function<void(const xml::XmlElement&)> walk =
      [&](const xml::XmlElement& el) {
        if (el.tag == "polyline") ++polylines;
        for (const auto& child : el.children) walk(child);
      };
  walk(doc.root);
  CHECK(polylines == 2);

  // Legend preserves the labels verbatim, in order.
  std::size_t a = svg.find(">rate05</text>");
  std::size_t b = svg.find(">rate10</text>");
  REQUIRE(a != std::string::npos);
  REQUIRE(b != std::string::npos);
  CHECK(a < b);

  // Deterministic bytes.
  CHECK(svg == compare_batches(set, {"comparison", "criteria", "blocks"}));
}

TEST_CASE("too few batches") {
  ComparisonSet set;
  set.entries.emplace_back("only", log8_table(1.0));
  CHECK(kind_of([&] { compare_batches(set, {"c", "x", "y"}); }) ==
        ErrorKind::TooFewBatches);
}

TEST_CASE("criteria mismatch names the first divergence") {
  ComparisonSet set;
  set.entries.emplace_back("a", log8_table(1.0));
  stats::BatchSummaryTable log4 = log8_table(1.0);
  log4.criteria.pop_back();
  log4.values.pop_back();
  log4.spreads.pop_back();
  set.entries.emplace_back("b", log4);
  CHECK(kind_of([&] { compare_batches(set, {"c", "x", "y"}); }) ==
        ErrorKind::CriteriaMismatch);

  stats::BatchSummaryTable shifted = log8_table(1.0);
  shifted.criteria[2].label = "5";
  shifted.criteria[2].scalar = 5;
  ComparisonSet set2;
  set2.entries.emplace_back("a", log8_table(1.0));
  set2.entries.emplace_back("b", shifted);
  try {
    compare_batches(set2, {"c", "x", "y"});
    FAIL("expected CriteriaMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CriteriaMismatch);
    CHECK(std::string(e.what()).find("position 2") != std::string::npos);
  }
}
