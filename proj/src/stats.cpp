#include "expbatch/stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace expbatch::stats {

namespace {

namespace fs = std::filesystem;

std::string stem_of(const std::string& output_name) {
  std::size_t dot = output_name.rfind('.');
  return dot == std::string::npos ? output_name : output_name.substr(0, dot);
}

csv::Table bundle_matrix_to_table(const StatsBundle& bundle,
                                  const std::vector<double>& matrix) {
  csv::Table table;
  table.columns = bundle.column_names;
  table.rows.reserve(bundle.rows);
  for (std::size_t r = 0; r < bundle.rows; ++r) {
    std::vector<double> row(bundle.cols);
    for (std::size_t c = 0; c < bundle.cols; ++c)
      row[c] = matrix[r * bundle.cols + c];
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

Reducer Reducer::parse(const std::string& text) {
  Reducer r;
  std::size_t colon = text.find(':');
  std::string kind = text.substr(0, colon);
  if (colon != std::string::npos) r.column = text.substr(colon + 1);
  if (kind == "final_row")
    r.kind = Kind::FinalRow;
  else if (kind == "mean_over_time")
    r.kind = Kind::MeanOverTime;
  else if (kind == "max_over_time")
    r.kind = Kind::MaxOverTime;
  else
    throw Error(ErrorKind::UsageError,
                "unknown reducer '" + kind +
                    "' (expected final_row, mean_over_time or max_over_time)");
  return r;
}

std::string Reducer::name() const {
  switch (kind) {
    case Kind::FinalRow: return "final_row";
    case Kind::MeanOverTime: return "mean_over_time";
    case Kind::MaxOverTime: return "max_over_time";
  }
  return "final_row";
}

ExpOutputs load_run_outputs(const fs::path& exp_output_dir,
                            const std::vector<executor::RunOutcome>& outcomes,
                            int exp_index,
                            const std::vector<std::string>& expected,
                            int min_successful) {
  ExpOutputs result;
  std::vector<int> ok_runs;
  for (const auto& o : outcomes) {
    if (o.exp_index != exp_index) continue;
    if (o.status == executor::RunStatus::Ok)
      ok_runs.push_back(o.run_index);
    else
      result.skipped_runs.push_back(o.run_index);
  }
  std::sort(ok_runs.begin(), ok_runs.end());
  std::sort(result.skipped_runs.begin(), result.skipped_runs.end());
  if (ok_runs.empty() ||
      ok_runs.size() < static_cast<std::size_t>(min_successful))
    throw Error(ErrorKind::NoSuccessfulRuns,
                "experiment " + std::to_string(exp_index) + " has " +
                    std::to_string(ok_runs.size()) + " successful runs, " +
                    std::to_string(min_successful) + " required");

  for (const std::string& name : expected) {
    RunResultTensor tensor;
    tensor.output_name = name;
    for (std::size_t i = 0; i < ok_runs.size(); ++i) {
      int run_index = ok_runs[i];
      fs::path path = exp_output_dir / run_dir_name(run_index) / name;
      if (!fs::exists(path))
        throw Error(ErrorKind::MissingOutput,
                    "run " + std::to_string(run_index) + " of experiment " +
                        std::to_string(exp_index) + " produced no " + name);
      csv::Table table = csv::read_file(path);
      if (i == 0) {
        tensor.column_names = table.columns;
        tensor.rows = table.rows.size();
        tensor.cols = table.columns.size();
      } else if (table.columns != tensor.column_names ||
                 table.rows.size() != tensor.rows) {
        throw Error(ErrorKind::ShapeMismatch,
                    path.string() + ": shape differs from run " +
                        std::to_string(ok_runs[0]) + " (" +
                        std::to_string(table.rows.size()) + "x" +
                        std::to_string(table.columns.size()) + " vs " +
                        std::to_string(tensor.rows) + "x" +
                        std::to_string(tensor.cols) + ")");
      }
      std::vector<double> flat;
      flat.reserve(tensor.rows * tensor.cols);
      for (const auto& row : table.rows)
        flat.insert(flat.end(), row.begin(), row.end());
      tensor.runs.push_back(std::move(flat));
    }
    result.tensors.emplace(name, std::move(tensor));
  }
  return result;
}

StatsBundle compute_cell_stats(const RunResultTensor& t) {
  if (t.runs.empty())
    throw Error(ErrorKind::InvariantError, "tensor has no runs");
  StatsBundle b;
  b.rows = t.rows;
  b.cols = t.cols;
  b.run_count = t.runs.size();
  b.column_names = t.column_names;
  const std::size_t cells = t.rows * t.cols;
  const double k = static_cast<double>(b.run_count);
  b.mean.resize(cells);
  b.stddev.resize(cells);
  b.min.resize(cells);
  b.max.resize(cells);
  b.ci95_half.resize(cells);

  for (std::size_t cell = 0; cell < cells; ++cell) {
    double sum = 0.0;
    double lo = t.runs[0][cell];
    double hi = t.runs[0][cell];
    for (const auto& run : t.runs) {
      double v = run[cell];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double mean = sum / k;
    double sq = 0.0;
    for (const auto& run : t.runs) {
      double d = run[cell] - mean;
      sq += d * d;
    }
    const double stddev = b.run_count > 1 ? std::sqrt(sq / (k - 1.0)) : 0.0;
    b.mean[cell] = mean;
    b.stddev[cell] = stddev;
    b.min[cell] = lo;
    b.max[cell] = hi;
    b.ci95_half[cell] = kCi95Factor * stddev / std::sqrt(k);
  }
  return b;
}

std::pair<double, double> reduce_experiment(const StatsBundle& bundle,
                                            const Reducer& reducer) {
  if (bundle.rows == 0)
    throw Error(ErrorKind::InvariantError, "bundle has no rows to reduce");
  std::size_t col = bundle.cols;
  for (std::size_t i = 0; i < bundle.column_names.size(); ++i)
    if (bundle.column_names[i] == reducer.column) col = i;
  if (col == bundle.cols)
    throw Error(ErrorKind::UnknownColumn,
                "no column named '" + reducer.column + "'");

  auto cell = [&](const std::vector<double>& m, std::size_t row) {
    return m[row * bundle.cols + col];
  };

  switch (reducer.kind) {
    case Reducer::Kind::FinalRow: {
      std::size_t last = bundle.rows - 1;
      return {cell(bundle.mean, last), cell(bundle.stddev, last)};
    }
    case Reducer::Kind::MeanOverTime: {
      double value = 0.0, spread = 0.0;
      for (std::size_t r = 0; r < bundle.rows; ++r) {
        value += cell(bundle.mean, r);
        spread += cell(bundle.stddev, r);
      }
      double n = static_cast<double>(bundle.rows);
      return {value / n, spread / n};
    }
    case Reducer::Kind::MaxOverTime: {
      std::size_t best = 0;
      for (std::size_t r = 1; r < bundle.rows; ++r)
        if (cell(bundle.mean, r) > cell(bundle.mean, best)) best = r;
      return {cell(bundle.mean, best), cell(bundle.stddev, best)};
    }
  }
  throw Error(ErrorKind::InvariantError, "unreachable reducer kind");
}

BatchSummaryTable collate_batch(
    const BatchManifest& manifest,
    const std::vector<std::pair<double, double>>& per_exp,
    const Reducer& reducer, const std::string& column_name) {
  if (per_exp.size() != manifest.experiments.size())
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(per_exp.size()) + " summaries for " +
                    std::to_string(manifest.experiments.size()) +
                    " experiments");
  BatchSummaryTable table;
  table.reducer_name = reducer.name();
  table.column_name = column_name;
  for (std::size_t i = 0; i < per_exp.size(); ++i) {
    table.criteria.push_back(manifest.values[i]);
    table.values.push_back(per_exp[i].first);
    table.spreads.push_back(per_exp[i].second);
  }
  return table;
}

std::filesystem::path write_summary_csv(const BatchSummaryTable& table,
                                        const std::filesystem::path& dir) {
  fs::create_directories(dir);
  fs::path path =
      dir / ("summary-" + table.reducer_name + "-" + table.column_name + ".csv");
  std::string body = "criteria,value,spread\n";
  char buf[64];
  for (std::size_t i = 0; i < table.criteria.size(); ++i) {
    body += table.criteria[i].label;
    std::snprintf(buf, sizeof buf, ",%.9g,%.9g\n", table.values[i],
                  table.spreads[i]);
    body += buf;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.close();
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
  return path;
}

BatchSummaryTable read_summary_csv(const std::filesystem::path& path) {
  // File name carries reducer and column: summary-<reducer>-<column>.csv.
  std::string stem = path.stem().string();
  BatchSummaryTable table;
  if (stem.rfind("summary-", 0) == 0) {
    std::string rest = stem.substr(8);
    std::size_t dash = rest.find('-');
    if (dash != std::string::npos) {
      table.reducer_name = rest.substr(0, dash);
      table.column_name = rest.substr(dash + 1);
    }
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "criteria,value,spread")
    throw Error(ErrorKind::CsvParseError,
                path.string() + ": expected header criteria,value,spread");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t c1 = line.find(',');
    std::size_t c2 = c1 == std::string::npos ? std::string::npos
                                             : line.find(',', c1 + 1);
    if (c2 == std::string::npos)
      throw Error(ErrorKind::CsvParseError,
                  path.string() + ":" + std::to_string(line_no) +
                      ": expected 3 fields");
    CriteriaValue value;
    value.label = line.substr(0, c1);
    bool numeric = !value.label.empty();
    for (char ch : value.label)
      if (!std::isdigit(static_cast<unsigned char>(ch))) numeric = false;
    if (numeric) value.scalar = std::stoll(value.label);
    table.criteria.push_back(std::move(value));
    try {
      table.values.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
      table.spreads.push_back(std::stod(line.substr(c2 + 1)));
    } catch (const std::exception&) {
      throw Error(ErrorKind::CsvParseError,
                  path.string() + ":" + std::to_string(line_no) +
                      ": bad number");
    }
  }
  if (table.criteria.empty())
    throw Error(ErrorKind::CsvParseError, path.string() + ": no rows");
  return table;
}

std::vector<std::filesystem::path> write_stats_csvs(
    const StatsBundle& bundle, const std::string& output_name,
    const std::filesystem::path& dir) {
  fs::create_directories(dir);
  const std::string stem = stem_of(output_name);
  const std::pair<const char*, const std::vector<double>*> parts[] = {
      {"mean", &bundle.mean},
      {"stddev", &bundle.stddev},
      {"min", &bundle.min},
      {"max", &bundle.max},
      {"ci95", &bundle.ci95_half},
  };
  std::vector<fs::path> written;
  for (const auto& [suffix, matrix] : parts) {
    fs::path path = dir / (stem + "." + suffix + ".csv");
    csv::write_file(bundle_matrix_to_table(bundle, *matrix), path);
    written.push_back(std::move(path));
  }
  return written;
}

}  // namespace expbatch::stats
