#ifndef EXPBATCH_PLOT_HPP
#define EXPBATCH_PLOT_HPP

// Stage 4: SVG deliverables. Charts are emitted through the XML engine's
// canonical serializer, so repeated rendering is byte-identical and every
// deliverable re-parses under the project's own parser. Only rect, line,
// polyline, polygon, text and g elements are used.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "expbatch/error.hpp"
#include "expbatch/stats.hpp"

namespace expbatch::plot {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> spread;  // empty = no spread data
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 800;
  int height = 600;
  std::vector<Series> series;
  bool show_band = false;  // translucent y +/- spread band
};

// Axes carry about five nice-number ticks; numbers are printed with three
// decimal places. Errors: EmptySeries (no series, or one shorter than 2
// points), NonFiniteValue.
std::string render_linegraph(const PlotSpec& spec);

struct PlotTitles {
  std::string title;
  std::string x_label;
  std::string y_label;
};

// Inter-experiment summary: x = criteria scalars (ordinal positions 1..n
// with label ticks for non-numeric criteria), y = reduced values, vertical
// error bars of +/- spread.
std::string render_summary_linegraph(const stats::BatchSummaryTable& table,
                                     const PlotTitles& titles);

namespace detail {
// Shared engine entry for summary-style charts: per-point vertical error
// bars instead of a band; categorical x ticks when labels are supplied.
std::string render_with_error_bars(const PlotSpec& spec,
                                   const std::vector<std::string>& x_tick_labels);
}  // namespace detail

struct FrameManifest {
  std::vector<std::string> frames;  // file names, ordered by frame index
  int frames_per_second = 10;
  std::vector<std::string> stitch_command;  // empty = none configured
};

// One bar-meter SVG per CSV row, frame-<index 6-digit>.svg, plus a
// frames.json manifest in out_dir. The stitch command template has
// {frames_dir} and {output} substituted but is never executed here.
FrameManifest imagize_csv(const std::filesystem::path& csv_path,
                          const std::string& value_column,
                          const std::filesystem::path& out_dir,
                          int frames_per_second = 10,
                          const std::vector<std::string>& stitch_template = {});

}  // namespace expbatch::plot

#endif  // EXPBATCH_PLOT_HPP
