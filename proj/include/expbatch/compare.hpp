#ifndef EXPBATCH_COMPARE_HPP
#define EXPBATCH_COMPARE_HPP

// Stage 5: side-by-side comparison of summary tables from separate
// batches, e.g. two controllers swept over the same criteria.

#include <string>
#include <utility>
#include <vector>

#include "expbatch/plot.hpp"
#include "expbatch/stats.hpp"

namespace expbatch::compare {

struct ComparisonSet {
  // (batch label, its summary table); labels become legend entries.
  std::vector<std::pair<std::string, stats::BatchSummaryTable>> entries;
};

// One series per batch over a shared x domain, error bars per point.
// TooFewBatches below 2 entries; CriteriaMismatch when the tables'
// criteria labels differ (reports the first divergence). No interpolation
// across mismatched domains, ever.
std::string compare_batches(const ComparisonSet& set,
                            const plot::PlotTitles& titles);

}  // namespace expbatch::compare

#endif  // EXPBATCH_COMPARE_HPP
