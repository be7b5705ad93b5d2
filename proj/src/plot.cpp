#include "expbatch/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "expbatch/csv.hpp"
#include "expbatch/xml.hpp"

namespace expbatch::plot {

namespace {

namespace fs = std::filesystem;
using xml::XmlDoc;
using xml::XmlElement;

const char* kPalette[8] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                           "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 24.0;
constexpr double kMarginTop = 48.0;
constexpr double kMarginBottom = 56.0;

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct AxisScale {
  double lo = 0.0;
  double hi = 1.0;
  double px_lo = 0.0;  // pixel of lo
  double px_hi = 1.0;  // pixel of hi

  double map(double v) const {
    if (hi == lo) return (px_lo + px_hi) / 2.0;
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

// Nice-number steps: 10^floor(log10(range/4)) scaled to {1,2,5,10}, ticks
// kept inside [lo,hi].
std::vector<double> nice_ticks(double lo, double hi) {
  if (hi == lo) return {lo};
  const double raw = (hi - lo) / 4.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step;
  if (norm < 1.5)
    step = mag;
  else if (norm < 3.0)
    step = 2.0 * mag;
  else if (norm < 7.0)
    step = 5.0 * mag;
  else
    step = 10.0 * mag;

  const double eps = (hi - lo) * 1e-9;
  std::vector<double> ticks;
  const long long k0 = static_cast<long long>(std::ceil((lo - eps) / step));
  for (long long k = k0;; ++k) {
    const double v = static_cast<double>(k) * step;
    if (v > hi + eps) break;
    ticks.push_back(v == 0.0 ? 0.0 : v);  // normalize -0
  }
  return ticks;
}

XmlElement make(const std::string& tag,
                std::initializer_list<std::pair<const char*, std::string>>
                    attrs) {
  XmlElement el;
  el.tag = tag;
  for (const auto& [name, value] : attrs) el.attrs.emplace_back(name, value);
  return el;
}

XmlElement text_at(double x, double y, const std::string& body,
                   const std::string& anchor, const std::string& size) {
  XmlElement t = make("text", {{"x", fmt3(x)},
                               {"y", fmt3(y)},
                               {"font-family", "sans-serif"},
                               {"font-size", size},
                               {"text-anchor", anchor},
                               {"fill", "#000000"}});
  t.text = body;
  return t;
}

XmlElement line_seg(double x1, double y1, double x2, double y2,
                    const std::string& stroke, const std::string& width) {
  return make("line", {{"x1", fmt3(x1)},
                       {"y1", fmt3(y1)},
                       {"x2", fmt3(x2)},
                       {"y2", fmt3(y2)},
                       {"stroke", stroke},
                       {"stroke-width", width}});
}

void check_series(const PlotSpec& spec) {
  if (spec.series.empty())
    throw Error(ErrorKind::EmptySeries, "plot has no series");
  for (const Series& s : spec.series) {
    if (s.x.size() < 2)
      throw Error(ErrorKind::EmptySeries,
                  "series '" + s.name + "' has fewer than 2 points");
    if (s.y.size() != s.x.size() ||
        (!s.spread.empty() && s.spread.size() != s.x.size()))
      throw Error(ErrorKind::InvariantError,
                  "series '" + s.name + "' has mismatched x/y/spread lengths");
    for (double v : s.x)
      if (!std::isfinite(v))
        throw Error(ErrorKind::NonFiniteValue,
                    "series '" + s.name + "' has a non-finite x value");
    for (double v : s.y)
      if (!std::isfinite(v))
        throw Error(ErrorKind::NonFiniteValue,
                    "series '" + s.name + "' has a non-finite y value");
    for (double v : s.spread)
      if (!std::isfinite(v))
        throw Error(ErrorKind::NonFiniteValue,
                    "series '" + s.name + "' has a non-finite spread value");
  }
}

enum class SpreadStyle { None, Band, Bars };

struct EngineOptions {
  SpreadStyle spread_style = SpreadStyle::None;
  std::vector<std::string> x_tick_labels;  // categorical x when nonempty
};

std::string render_chart(const PlotSpec& spec, const EngineOptions& options) {
  check_series(spec);

  const double w = spec.width;
  const double h = spec.height;
  const double plot_left = kMarginLeft;
  const double plot_right = w - kMarginRight;
  const double plot_top = kMarginTop;
  const double plot_bottom = h - kMarginBottom;

  double xlo = spec.series[0].x[0], xhi = xlo;
  double ylo = spec.series[0].y[0], yhi = ylo;
  const bool spreads_shown = options.spread_style != SpreadStyle::None;
  for (const Series& s : spec.series) {
    for (double v : s.x) {
      xlo = std::min(xlo, v);
      xhi = std::max(xhi, v);
    }
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      double lo = s.y[i], hi = s.y[i];
      if (spreads_shown && !s.spread.empty()) {
        lo -= s.spread[i];
        hi += s.spread[i];
      }
      ylo = std::min(ylo, lo);
      yhi = std::max(yhi, hi);
    }
  }

  AxisScale xs{xlo, xhi, plot_left, plot_right};
  AxisScale ys{ylo, yhi, plot_bottom, plot_top};  // max data -> top boundary

  XmlDoc doc;
  doc.root = make("svg", {{"xmlns", "http://www.w3.org/2000/svg"},
                          {"width", std::to_string(spec.width)},
                          {"height", std::to_string(spec.height)},
                          {"viewBox", "0 0 " + std::to_string(spec.width) +
                                          " " + std::to_string(spec.height)}});
  doc.root.children.push_back(make("rect", {{"x", "0"},
                                            {"y", "0"},
                                            {"width", std::to_string(spec.width)},
                                            {"height", std::to_string(spec.height)},
                                            {"fill", "#ffffff"}}));

  // Axes and ticks.
  XmlElement axes = make("g", {{"stroke", "none"}});
  axes.children.push_back(
      line_seg(plot_left, plot_bottom, plot_right, plot_bottom, "#000000", "1"));
  axes.children.push_back(
      line_seg(plot_left, plot_bottom, plot_left, plot_top, "#000000", "1"));

  if (!options.x_tick_labels.empty()) {
    for (std::size_t i = 0; i < options.x_tick_labels.size(); ++i) {
      const double px = xs.map(static_cast<double>(i + 1));
      axes.children.push_back(
          line_seg(px, plot_bottom, px, plot_bottom + 5, "#000000", "1"));
      axes.children.push_back(text_at(px, plot_bottom + 20,
                                      options.x_tick_labels[i], "middle",
                                      "12"));
    }
  } else {
    for (double tick : nice_ticks(xlo, xhi)) {
      const double px = xs.map(tick);
      axes.children.push_back(
          line_seg(px, plot_bottom, px, plot_bottom + 5, "#000000", "1"));
      axes.children.push_back(
          text_at(px, plot_bottom + 20, fmt3(tick), "middle", "12"));
    }
  }
  for (double tick : nice_ticks(ylo, yhi)) {
    const double py = ys.map(tick);
    axes.children.push_back(
        line_seg(plot_left - 5, py, plot_left, py, "#000000", "1"));
    axes.children.push_back(
        text_at(plot_left - 8, py + 4, fmt3(tick), "end", "12"));
  }
  doc.root.children.push_back(std::move(axes));

  // Series.
  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const Series& s = spec.series[si];
    const std::string color = kPalette[si % 8];
    XmlElement group = make("g", {{"fill", "none"}});

    if (options.spread_style == SpreadStyle::Band && !s.spread.empty()) {
      std::string points;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (i) points += ' ';
        points += fmt3(xs.map(s.x[i])) + "," + fmt3(ys.map(s.y[i] + s.spread[i]));
      }
      for (std::size_t i = s.x.size(); i-- > 0;) {
        points += ' ';
        points += fmt3(xs.map(s.x[i])) + "," + fmt3(ys.map(s.y[i] - s.spread[i]));
      }
      group.children.push_back(make("polygon", {{"points", points},
                                                {"fill", color},
                                                {"fill-opacity", "0.25"},
                                                {"stroke", "none"}}));
    }

    if (options.spread_style == SpreadStyle::Bars && !s.spread.empty()) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double px = xs.map(s.x[i]);
        const double upper = ys.map(s.y[i] + s.spread[i]);
        const double lower = ys.map(s.y[i] - s.spread[i]);
        group.children.push_back(line_seg(px, lower, px, upper, color, "1"));
        group.children.push_back(
            line_seg(px - 3, upper, px + 3, upper, color, "1"));
        group.children.push_back(
            line_seg(px - 3, lower, px + 3, lower, color, "1"));
      }
    }

    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) points += ' ';
      points += fmt3(xs.map(s.x[i])) + "," + fmt3(ys.map(s.y[i]));
    }
    group.children.push_back(make("polyline", {{"points", points},
                                               {"fill", "none"},
                                               {"stroke", color},
                                               {"stroke-width", "1.5"}}));
    doc.root.children.push_back(std::move(group));
  }

  // Legend.
  XmlElement legend = make("g", {{"stroke", "none"}});
  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const double lx = plot_right - 150.0;
    const double ly = plot_top + 10.0 + 18.0 * static_cast<double>(si);
    legend.children.push_back(make("rect", {{"x", fmt3(lx)},
                                            {"y", fmt3(ly)},
                                            {"width", "12"},
                                            {"height", "12"},
                                            {"fill", kPalette[si % 8]}}));
    legend.children.push_back(
        text_at(lx + 18, ly + 10, spec.series[si].name, "start", "12"));
  }
  doc.root.children.push_back(std::move(legend));

  // Title and axis labels.
  doc.root.children.push_back(text_at(w / 2, 26, spec.title, "middle", "16"));
  doc.root.children.push_back(
      text_at((plot_left + plot_right) / 2, h - 16, spec.x_label, "middle",
              "13"));
  XmlElement ylab = text_at(18, (plot_top + plot_bottom) / 2, spec.y_label,
                            "middle", "13");
  ylab.set_attr("transform", "rotate(-90 18 " +
                                 fmt3((plot_top + plot_bottom) / 2) + ")");
  doc.root.children.push_back(std::move(ylab));

  return xml::serialize_xml(doc);
}

}  // namespace

namespace detail {

std::string render_with_error_bars(
    const PlotSpec& spec, const std::vector<std::string>& x_tick_labels) {
  EngineOptions options;
  options.spread_style = SpreadStyle::Bars;
  options.x_tick_labels = x_tick_labels;
  return render_chart(spec, options);
}

}  // namespace detail

std::string render_linegraph(const PlotSpec& spec) {
  EngineOptions options;
  options.spread_style = spec.show_band ? SpreadStyle::Band : SpreadStyle::None;
  return render_chart(spec, options);
}

std::string render_summary_linegraph(const stats::BatchSummaryTable& table,
                                     const PlotTitles& titles) {
  if (table.criteria.empty())
    throw Error(ErrorKind::EmptySeries, "summary table is empty");

  bool numeric = true;
  for (const auto& c : table.criteria)
    if (!c.scalar) numeric = false;

  PlotSpec spec;
  spec.title = titles.title;
  spec.x_label = titles.x_label;
  spec.y_label = titles.y_label;

  Series s;
  s.name = table.column_name.empty() ? "value" : table.column_name;
  for (std::size_t i = 0; i < table.criteria.size(); ++i) {
    s.x.push_back(numeric ? static_cast<double>(*table.criteria[i].scalar)
                          : static_cast<double>(i + 1));
    s.y.push_back(table.values[i]);
    s.spread.push_back(table.spreads[i]);
  }
  spec.series.push_back(std::move(s));

  EngineOptions options;
  options.spread_style = SpreadStyle::Bars;
  if (!numeric)
    for (const auto& c : table.criteria) options.x_tick_labels.push_back(c.label);
  return render_chart(spec, options);
}

FrameManifest imagize_csv(const fs::path& csv_path,
                          const std::string& value_column,
                          const fs::path& out_dir, int frames_per_second,
                          const std::vector<std::string>& stitch_template) {
  csv::Table table = csv::read_file(csv_path);
  if (table.rows.empty())
    throw Error(ErrorKind::EmptyCsv, csv_path.string() + " has no data rows");
  const std::size_t col = table.column_index(value_column);

  double global_max = 0.0;
  for (const auto& row : table.rows) global_max = std::max(global_max, row[col]);

  fs::create_directories(out_dir);
  FrameManifest manifest;
  manifest.frames_per_second = frames_per_second;

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double value = table.rows[i][col];
    const double tick = table.rows[i][0];
    double fraction = global_max > 0.0 ? value / global_max : 0.0;
    fraction = std::clamp(fraction, 0.0, 1.0);

    XmlDoc doc;
    doc.root = make("svg", {{"xmlns", "http://www.w3.org/2000/svg"},
                            {"width", "400"},
                            {"height", "100"},
                            {"viewBox", "0 0 400 100"}});
    doc.root.children.push_back(make("rect", {{"x", "0"},
                                              {"y", "0"},
                                              {"width", "400"},
                                              {"height", "100"},
                                              {"fill", "#ffffff"},
                                              {"stroke", "#808080"}}));
    doc.root.children.push_back(make("rect", {{"x", "10"},
                                              {"y", "45"},
                                              {"width", "380"},
                                              {"height", "30"},
                                              {"fill", "#eeeeee"},
                                              {"stroke", "#808080"}}));
    doc.root.children.push_back(
        make("rect", {{"x", "10"},
                      {"y", "45"},
                      {"width", fmt3(fraction * 380.0)},
                      {"height", "30"},
                      {"fill", kPalette[0]},
                      {"stroke", "none"}}));
    doc.root.children.push_back(
        text_at(10, 30,
                table.columns[0] + " " + fmt_g(tick) + ": " + value_column +
                    " = " + fmt_g(value),
                "start", "13"));

    char name[32];
    std::snprintf(name, sizeof name, "frame-%06zu.svg", i);
    std::string body = xml::serialize_xml(doc);
    std::ofstream out(out_dir / name, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error(ErrorKind::IoError,
                  "cannot write " + (out_dir / name).string());
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    out.close();
    if (!out)
      throw Error(ErrorKind::IoError,
                  "short write to " + (out_dir / name).string());
    manifest.frames.push_back(name);
  }

  for (const std::string& element : stitch_template) {
    std::string rendered = element;
    auto replace_all = [&](const std::string& token, const std::string& with) {
      std::size_t pos = 0;
      while ((pos = rendered.find(token, pos)) != std::string::npos) {
        rendered.replace(pos, token.size(), with);
        pos += with.size();
      }
    };
    replace_all("{frames_dir}", out_dir.string());
    replace_all("{output}", (out_dir / "video.mp4").string());
    manifest.stitch_command.push_back(std::move(rendered));
  }

  nlohmann::json j;
  j["fps"] = manifest.frames_per_second;
  j["frames"] = manifest.frames;
  if (!manifest.stitch_command.empty())
    j["stitch_command"] = manifest.stitch_command;
  std::string body = j.dump(2) + "\n";
  std::ofstream out(out_dir / "frames.json", std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorKind::IoError,
                "cannot write " + (out_dir / "frames.json").string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));

  return manifest;
}

}  // namespace expbatch::plot
