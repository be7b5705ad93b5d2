#ifndef EXPBATCH_PIPELINE_HPP
#define EXPBATCH_PIPELINE_HPP

// The pipeline driver: flag parsing, prerequisite gating and the five
// stages run in ascending order. Re-running any stage with an unchanged
// configuration rewrites byte-identical artifacts; the report itself goes
// to stdout (and optionally a JSON file), never into the batch tree.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "expbatch/error.hpp"
#include "expbatch/query.hpp"
#include "expbatch/stats.hpp"

namespace expbatch::pipeline {

enum class ExecEnv { Local, Slurm, Pbs };

struct CompareInput {
  std::string label;
  std::filesystem::path batch_root;
};

struct PipelineConfig {
  std::set<int> stages{1, 2, 3, 4};
  std::filesystem::path template_path;
  std::string query_text;
  std::optional<query::ResearchQuery> parsed_query;
  int n_runs = 4;
  std::uint64_t base_seed = 0;
  std::string platform_name = "mockplat";
  ExecEnv exec_env = ExecEnv::Local;
  int parallelism = 1;
  std::filesystem::path batch_root;
  std::optional<std::filesystem::path> project_manifest_path;
  stats::Reducer reducer;  // empty column = use the last data column
  std::vector<CompareInput> compare_inputs;
  std::filesystem::path compare_out = ".";
  bool dry_run = false;
  std::optional<std::filesystem::path> report_json_path;
  std::optional<std::string> imagize_column;
  int min_successful_runs = 1;
  // Binary to self-invoke for the built-in mock platform; the CLI fills
  // this with its own path.
  std::filesystem::path self_exe;
};

struct ParsedCli {
  std::optional<PipelineConfig> config;  // absent when help was requested
  std::string help_text;
};

// Flags are validated exhaustively before any filesystem effect:
// UsageError names the offending flag; query-DSL errors surface verbatim.
ParsedCli parse_cli(const std::vector<std::string>& args);

enum class StageStatus { Skipped, Ok, Failed };

struct StageReport {
  int stage = 0;
  StageStatus status = StageStatus::Skipped;
  double seconds = 0.0;
  int artifacts = 0;
  std::string error;
};

struct PipelineReport {
  std::vector<StageReport> stages;  // always 5 entries, stage 1..5
  bool all_ok() const;
};

// Runs the requested stages in ascending order. Each stage checks its
// prerequisite artifacts first (stage 2: manifest.json, stage 3:
// exec-outcomes.json, stage 4: statistics CSVs, stage 5: two or more
// summary CSVs) and fails with PrerequisiteMissing otherwise. A failed
// stage aborts the rest of the invocation.
PipelineReport run_pipeline(const PipelineConfig& cfg);

void print_report(const PipelineReport& report, std::ostream& out);
void write_report_json(const PipelineReport& report,
                       const std::filesystem::path& path);

}  // namespace expbatch::pipeline

#endif  // EXPBATCH_PIPELINE_HPP
