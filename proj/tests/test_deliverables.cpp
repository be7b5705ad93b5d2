#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "expbatch/plot.hpp"
#include "expbatch/xml.hpp"
#include "test_util.hpp"

using namespace expbatch;
using namespace expbatch::plot;

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

PlotSpec demo_spec() {
  PlotSpec spec;
  spec.title = "demo";
  spec.x_label = "tick";
  spec.y_label = "value";
  Series s;
  s.name = "series-a";
  for (int i = 0; i <= 10; ++i) {
    s.x.push_back(i);
    s.y.push_back(i * i);
  }
  spec.series.push_back(s);
  return spec;
}

// All polyline point counts in an SVG, via the project's own XML parser.
std::vector<std::size_t> polyline_point_counts(const std::string& svg) {
  std::vector<std::size_t> counts;
  std::function<void(const xml::XmlElement&)> walk =
      [&](const xml::XmlElement& el) {
        if (el.tag == "polyline") {
          const std::string* points = el.find_attr("points");
          REQUIRE(points != nullptr);
          std::size_t n = points->empty() ? 0 : 1;
          for (char c : *points)
            if (c == ' ') ++n;
          counts.push_back(n);
        }
        for (const auto& child : el.children) walk(child);
      };
  walk(xml::parse_xml(svg).root);
  return counts;
}

double min_polyline_y(const std::string& svg) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(const xml::XmlElement&)> walk =
      [&](const xml::XmlElement& el) {
        if (el.tag == "polyline") {
          const std::string& points = *el.find_attr("points");
          std::size_t pos = 0;
          while (pos < points.size()) {
            std::size_t comma = points.find(',', pos);
            std::size_t space = points.find(' ', comma);
            if (space == std::string::npos) space = points.size();
            best = std::min(best,
                            std::stod(points.substr(comma + 1, space - comma)));
            pos = space + 1;
          }
        }
        for (const auto& child : el.children) walk(child);
      };
  walk(xml::parse_xml(svg).root);
  return best;
}

}  // namespace

TEST_CASE("linegraph emits one polyline per series with full point counts") {
  PlotSpec spec = demo_spec();
  Series second;
  second.name = "series-b";
  second.x = {0, 5, 10};
  second.y = {50, 20, 80};
  spec.series.push_back(second);

  std::string svg = render_linegraph(spec);
  auto counts = polyline_point_counts(svg);
  REQUIRE(counts.size() == 2);
  CHECK(counts[0] == 11);
  CHECK(counts[1] == 3);
}

TEST_CASE("two-point series renders two coordinate pairs") {
  PlotSpec spec;
  spec.title = "tiny";
  Series s;
  s.name = "s";
  s.x = {0, 1};
  s.y = {3, 4};
  spec.series.push_back(s);
  auto counts = polyline_point_counts(render_linegraph(spec));
  REQUIRE(counts.size() == 1);
  CHECK(counts[0] == 2);
}

TEST_CASE("deterministic bytes") {
  PlotSpec spec = demo_spec();
  CHECK(render_linegraph(spec) == render_linegraph(spec));
}

TEST_CASE("svg re-parses under the project parser and uses the element subset") {
  std::string svg = render_linegraph(demo_spec());
  xml::XmlDoc doc = xml::parse_xml(svg);
  CHECK(doc.root.tag == "svg");
  std::function<void(const xml::XmlElement&)> walk =
      [&](const xml::XmlElement& el) {
        CHECK((el.tag == "svg" || el.tag == "rect" || el.tag == "line" ||
               el.tag == "polyline" || el.tag == "polygon" ||
               el.tag == "text" || el.tag == "g"));
        for (const auto& child : el.children) walk(child);
      };
  walk(doc.root);
}

TEST_CASE("scale correctness: max maps to the top plot boundary") {
  std::string svg = render_linegraph(demo_spec());
  // Top margin is 48; the maximum y value must land within 1 px.
  CHECK(std::abs(min_polyline_y(svg) - 48.0) <= 1.0);
}

TEST_CASE("error paths: empty, short and non-finite series") {
  PlotSpec empty;
  empty.title = "none";
  CHECK(kind_of([&] { render_linegraph(empty); }) == ErrorKind::EmptySeries);

  PlotSpec one_point;
  Series s;
  s.name = "s";
  s.x = {1};
  s.y = {1};
  one_point.series.push_back(s);
  CHECK(kind_of([&] { render_linegraph(one_point); }) ==
        ErrorKind::EmptySeries);

  PlotSpec nan_spec = demo_spec();
  nan_spec.series[0].y[3] = std::nan("");
  CHECK(kind_of([&] { render_linegraph(nan_spec); }) ==
        ErrorKind::NonFiniteValue);
}

TEST_CASE("band rendering adds a polygon and extends the domain") {
  PlotSpec spec = demo_spec();
  spec.show_band = true;
  for (std::size_t i = 0; i < spec.series[0].x.size(); ++i)
    spec.series[0].spread.push_back(5.0);
  std::string svg = render_linegraph(spec);
  CHECK(svg.find("<polygon") != std::string::npos);
  CHECK(svg.find("fill-opacity") != std::string::npos);
}

TEST_CASE("summary linegraph: numeric criteria map to scalar x") {
  stats::BatchSummaryTable table;
  table.reducer_name = "final_row";
  table.column_name = "cumulative_blocks";
  table.criteria = {{"1", 1}, {"2", 2}, {"4", 4}, {"8", 8}};
  table.values = {5, 10, 20, 40};
  table.spreads = {1, 2, 3, 4};
  std::string svg = render_summary_linegraph(
      table, {"summary", "population_size", "blocks"});
  auto counts = polyline_point_counts(svg);
  REQUIRE(counts.size() == 1);
  CHECK(counts[0] == 4);
  // Error bars present as line elements beyond the two axis lines.
  xml::XmlDoc doc = xml::parse_xml(svg);
  int lines = 0;
  std::function<void(const xml::XmlElement&)> walk =
      [&](const xml::XmlElement& el) {
        if (el.tag == "line") ++lines;
        for (const auto& child : el.children) walk(child);
      };
  walk(doc.root);
  CHECK(lines > 12);  // 4 error bars * 3 segments + axes + ticks
}

TEST_CASE("summary linegraph: zero spreads still emit error bars") {
  stats::BatchSummaryTable table;
  table.reducer_name = "final_row";
  table.column_name = "v";
  table.criteria = {{"1", 1}, {"2", 2}};
  table.values = {5, 10};
  table.spreads = {0, 0};
  std::string svg = render_summary_linegraph(table, {"s", "x", "y"});
  CHECK(polyline_point_counts(svg) == std::vector<std::size_t>{2});
  CHECK(xml::parse_xml(svg).root.tag == "svg");
}

TEST_CASE("summary linegraph: set labels become ordinal ticks") {
  stats::BatchSummaryTable table;
  table.reducer_name = "final_row";
  table.column_name = "v";
  table.criteria = {{"small", std::nullopt}, {"medium", std::nullopt},
                    {"large", std::nullopt}};
  table.values = {1, 2, 3};
  table.spreads = {0.1, 0.1, 0.1};
  std::string svg = render_summary_linegraph(table, {"s", "arena", "v"});
  CHECK(svg.find(">small</text>") != std::string::npos);
  CHECK(svg.find(">medium</text>") != std::string::npos);
  CHECK(svg.find(">large</text>") != std::string::npos);
}

TEST_CASE("imagize produces one frame per row plus a manifest") {
  testutil::TempDir tmp("imagize");
  auto csv_path = tmp.path / "data.csv";
  std::string body = "tick,v\n";
  for (int i = 1; i <= 100; ++i)
    body += std::to_string(i) + "," + std::to_string(i % 7) + "\n";
  testutil::write_file(csv_path, body);

  FrameManifest manifest = imagize_csv(csv_path, "v", tmp.path / "frames", 10,
                                       {"ffmpeg", "-i",
                                        "{frames_dir}/frame-%06d.svg",
                                        "{output}"});
  REQUIRE(manifest.frames.size() == 100);
  CHECK(manifest.frames.front() == "frame-000000.svg");
  CHECK(manifest.frames.back() == "frame-000099.svg");
  CHECK(std::filesystem::exists(tmp.path / "frames" / "frame-000099.svg"));
  CHECK(std::filesystem::exists(tmp.path / "frames" / "frames.json"));
  CHECK(manifest.frames_per_second == 10);
  REQUIRE(manifest.stitch_command.size() == 4);
  CHECK(manifest.stitch_command[2] ==
        (tmp.path / "frames").string() + "/frame-%06d.svg");
  CHECK(manifest.stitch_command[3] ==
        (tmp.path / "frames" / "video.mp4").string());

  // Frames re-parse.
  xml::XmlDoc frame = xml::parse_xml(
      testutil::read_file(tmp.path / "frames" / "frame-000000.svg"));
  CHECK(frame.root.tag == "svg");
}

TEST_CASE("imagize with an all-zero column divides nothing by zero") {
  testutil::TempDir tmp("imagize0");
  auto csv_path = tmp.path / "data.csv";
  testutil::write_file(csv_path, "tick,v\n1,0\n2,0\n3,0\n");
  FrameManifest manifest = imagize_csv(csv_path, "v", tmp.path / "frames");
  CHECK(manifest.frames.size() == 3);
  std::string frame =
      testutil::read_file(tmp.path / "frames" / "frame-000001.svg");
  CHECK(frame.find("width=\"0.000\"") != std::string::npos);
}

TEST_CASE("imagize error paths") {
  testutil::TempDir tmp("imagizeerr");
  auto csv_path = tmp.path / "data.csv";
  testutil::write_file(csv_path, "tick,v\n1,2\n");
  CHECK(kind_of([&] { imagize_csv(csv_path, "zz", tmp.path / "f"); }) ==
        ErrorKind::UnknownColumn);

  testutil::write_file(csv_path, "tick,v\n");
  CHECK(kind_of([&] { imagize_csv(csv_path, "v", tmp.path / "f"); }) ==
        ErrorKind::EmptyCsv);
}
