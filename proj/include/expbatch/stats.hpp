#ifndef EXPBATCH_STATS_HPP
#define EXPBATCH_STATS_HPP

// Stage 3: per-cell statistics across the runs of each experiment, then a
// one-row-per-experiment summary across the batch.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "expbatch/core_model.hpp"
#include "expbatch/csv.hpp"
#include "expbatch/error.hpp"
#include "expbatch/executor.hpp"

namespace expbatch::stats {

// R x C cells from K same-shaped run matrices.
struct RunResultTensor {
  std::string output_name;
  std::vector<std::string> column_names;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<double>> runs;  // runs[k] is row-major R*C

  double at(std::size_t k, std::size_t r, std::size_t c) const {
    return runs[k][r * cols + c];
  }
};

struct StatsBundle {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t run_count = 0;
  std::vector<std::string> column_names;
  // Row-major R*C matrices.
  std::vector<double> mean, stddev, min, max, ci95_half;
};

// 95% interval half-width uses the normal approximation.
inline constexpr double kCi95Factor = 1.96;

struct Reducer {
  enum class Kind { FinalRow, MeanOverTime, MaxOverTime };
  Kind kind = Kind::FinalRow;
  std::string column;  // empty = resolve to the last column at use site

  // Accepts "final_row:col", "mean_over_time:col", "max_over_time:col";
  // the ":col" part may be omitted.
  static Reducer parse(const std::string& text);
  std::string name() const;
};

struct BatchSummaryTable {
  std::vector<CriteriaValue> criteria;
  std::vector<double> values;
  std::vector<double> spreads;
  std::string reducer_name;
  std::string column_name;
};

struct ExpOutputs {
  std::map<std::string, RunResultTensor> tensors;  // by output name
  std::vector<int> skipped_runs;  // run indices excluded (status != ok)
};

// Loads each expected CSV from every ok run of the experiment. Run output
// directories follow the canonical layout under exp_output_dir. Errors:
// NoSuccessfulRuns (fewer than min_successful ok runs), MissingOutput,
// ShapeMismatch (names the offending run), CsvParseError.
ExpOutputs load_run_outputs(const std::filesystem::path& exp_output_dir,
                            const std::vector<executor::RunOutcome>& outcomes,
                            int exp_index,
                            const std::vector<std::string>& expected,
                            int min_successful = 1);

// mean, sample stddev (K-1 denominator, 0 when K==1), min, max and
// ci95_half = 1.96 * stddev / sqrt(K), per cell.
StatsBundle compute_cell_stats(const RunResultTensor& t);

// Collapses a bundle to one (value, spread) per the reducer rule.
std::pair<double, double> reduce_experiment(const StatsBundle& bundle,
                                            const Reducer& reducer);

// One row per experiment in criteria order. LengthMismatch when counts
// disagree.
BatchSummaryTable collate_batch(
    const BatchManifest& manifest,
    const std::vector<std::pair<double, double>>& per_exp,
    const Reducer& reducer, const std::string& column_name);

// summary-<reducer>-<column>.csv with header criteria,value,spread.
std::filesystem::path write_summary_csv(const BatchSummaryTable& table,
                                        const std::filesystem::path& dir);
BatchSummaryTable read_summary_csv(const std::filesystem::path& path);

// <stem>.mean.csv, .stddev.csv, .min.csv, .max.csv, .ci95.csv next to each
// other in `dir`, same header as the source CSV. Returns the paths.
std::vector<std::filesystem::path> write_stats_csvs(
    const StatsBundle& bundle, const std::string& output_name,
    const std::filesystem::path& dir);

}  // namespace expbatch::stats

#endif  // EXPBATCH_STATS_HPP
