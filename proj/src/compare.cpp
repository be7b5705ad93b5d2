#include "expbatch/compare.hpp"

namespace expbatch::compare {

std::string compare_batches(const ComparisonSet& set,
                            const plot::PlotTitles& titles) {
  if (set.entries.size() < 2)
    throw Error(ErrorKind::TooFewBatches,
                "comparison needs at least 2 batches, got " +
                    std::to_string(set.entries.size()));

  const stats::BatchSummaryTable& first = set.entries[0].second;
  for (std::size_t b = 1; b < set.entries.size(); ++b) {
    const stats::BatchSummaryTable& other = set.entries[b].second;
    if (other.criteria.size() != first.criteria.size())
      throw Error(ErrorKind::CriteriaMismatch,
                  "batch '" + set.entries[b].first + "' has " +
                      std::to_string(other.criteria.size()) +
                      " criteria values, batch '" + set.entries[0].first +
                      "' has " + std::to_string(first.criteria.size()));
    for (std::size_t i = 0; i < first.criteria.size(); ++i) {
      if (other.criteria[i].label != first.criteria[i].label)
        throw Error(ErrorKind::CriteriaMismatch,
                    "criteria diverge at position " + std::to_string(i) +
                        ": '" + first.criteria[i].label + "' vs '" +
                        other.criteria[i].label + "'");
    }
  }

  bool numeric = true;
  for (const auto& c : first.criteria)
    if (!c.scalar) numeric = false;

  plot::PlotSpec spec;
  spec.title = titles.title;
  spec.x_label = titles.x_label;
  spec.y_label = titles.y_label;
  for (const auto& [label, table] : set.entries) {
    plot::Series s;
    s.name = label;
    for (std::size_t i = 0; i < table.criteria.size(); ++i) {
      s.x.push_back(numeric ? static_cast<double>(*table.criteria[i].scalar)
                            : static_cast<double>(i + 1));
      s.y.push_back(table.values[i]);
      s.spread.push_back(table.spreads[i]);
    }
    spec.series.push_back(std::move(s));
  }

  std::vector<std::string> x_tick_labels;
  if (!numeric)
    for (const auto& c : first.criteria) x_tick_labels.push_back(c.label);
  return plot::detail::render_with_error_bars(spec, x_tick_labels);
}

}  // namespace expbatch::compare
