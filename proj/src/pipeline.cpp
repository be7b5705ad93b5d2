#include "expbatch/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "expbatch/compare.hpp"
#include "expbatch/core_model.hpp"
#include "expbatch/executor.hpp"
#include "expbatch/generator.hpp"
#include "expbatch/platform.hpp"
#include "expbatch/plot.hpp"
#include "expbatch/project.hpp"

namespace expbatch::pipeline {

namespace {

namespace fs = std::filesystem;

void write_text_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.close();
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

std::set<int> parse_stage_list(const std::string& text) {
  std::set<int> stages;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string token = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (token.empty() || token.size() > 1 || token[0] < '1' || token[0] > '5')
      throw Error(ErrorKind::UsageError,
                  "--pipeline: '" + token + "' is not a stage in 1..5");
    stages.insert(token[0] - '0');
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (stages.empty())
    throw Error(ErrorKind::UsageError, "--pipeline: no stages given");
  return stages;
}

// Shared run context so stages agree on the platform and target column
// without re-deriving them.
struct RunContext {
  const PipelineConfig& cfg;
  DirectoryLayout layout;
  project::ProjectConfig project;
  bool has_project = false;

  explicit RunContext(const PipelineConfig& cfg_) : cfg(cfg_) {
    if (!cfg.batch_root.empty()) layout = layout_for(cfg.batch_root);
    if (cfg.project_manifest_path) {
      project = project::load_project(*cfg.project_manifest_path);
      has_project = true;
    }
  }

  platform::PlatformDef platform_def() const {
    if (cfg.platform_name == platform::kMockPlatformName) {
      if (cfg.self_exe.empty())
        throw Error(ErrorKind::PlatformError,
                    "mock platform needs the path to the main binary");
      return platform::builtin_mockplat(cfg.self_exe);
    }
    if (!has_project || !project.platforms_dir)
      throw Error(ErrorKind::PlatformError,
                  "platform '" + cfg.platform_name +
                      "' needs a project manifest with a platforms_dir");
    return platform::load_platform_manifest(
        *project.platforms_dir / (cfg.platform_name + ".toml"));
  }

  std::map<std::string, query::VariableDefinition> variable_defs() const {
    std::map<std::string, query::VariableDefinition> defs;
    if (cfg.platform_name == platform::kMockPlatformName)
      defs = project::builtin_mock_variables();
    if (has_project)
      for (const auto& [name, def] : project.variables) defs[name] = def;
    return defs;
  }

  std::string resolve_column(const std::vector<std::string>& columns) const {
    if (!cfg.reducer.column.empty()) return cfg.reducer.column;
    if (columns.empty())
      throw Error(ErrorKind::UnknownColumn, "output has no columns");
    return columns.back();
  }
};

[[noreturn]] void missing_prerequisite(int stage, const std::string& what) {
  throw Error(ErrorKind::PrerequisiteMissing,
              "stage " + std::to_string(stage) + " needs " + what);
}

// ---------------------------------------------------------------------------
// Stages

int run_stage1(RunContext& ctx) {
  const PipelineConfig& cfg = ctx.cfg;
  if (!cfg.parsed_query)
    throw Error(ErrorKind::UsageError, "stage 1 needs --batch-criteria");

  query::BoundVariable bound =
      query::bind_variable(*cfg.parsed_query, ctx.variable_defs());
  for (const std::string& warning : bound.warnings)
    std::cerr << "warning: " << warning << "\n";

  generator::GenerationRequest req;
  req.template_path = cfg.template_path;
  req.bound = std::move(bound);
  req.runs_per_experiment = cfg.n_runs;
  req.base_seed = cfg.base_seed;
  req.batch_transforms = ctx.has_project ? ctx.project.batch_transforms
                                         : std::vector<xml::Transform>{};
  req.layout = ctx.layout;
  req.platform_name = cfg.platform_name;

  fs::create_directories(ctx.layout.batch_root);
  BatchManifest manifest = generator::generate_batch(req);
  int inputs = 0;
  for (const auto& exp : manifest.experiments)
    inputs += static_cast<int>(exp.runs.size());
  return inputs + 1;  // run inputs plus manifest.json
}

int run_stage2(RunContext& ctx) {
  const PipelineConfig& cfg = ctx.cfg;
  const fs::path manifest_path = ctx.layout.batch_root / "manifest.json";
  if (!fs::exists(manifest_path))
    missing_prerequisite(2, manifest_path.string());

  BatchManifest manifest = read_manifest(manifest_path);
  platform::PlatformDef def = ctx.platform_def();
  executor::ExecPlan plan = executor::make_exec_plan(manifest, def);

  if (cfg.exec_env == ExecEnv::Local) {
    executor::ExecutionOptions options;
    options.parallelism = cfg.parallelism;
    if (ctx.has_project) options.env_passthrough = ctx.project.env_passthrough;
    std::vector<executor::RunOutcome> outcomes =
        executor::execute_local(plan, options);
    executor::write_outcomes(outcomes, ctx.layout);
    int ok = 0;
    for (const auto& o : outcomes)
      if (o.status == executor::RunStatus::Ok) ++ok;
    if (ok != static_cast<int>(outcomes.size()))
      std::cerr << "warning: " << outcomes.size() - ok << " of "
                << outcomes.size() << " runs did not finish cleanly\n";
    return static_cast<int>(outcomes.size());
  }

  const bool slurm = cfg.exec_env == ExecEnv::Slurm;
  executor::ClusterOptions opts =
      ctx.has_project ? ctx.project.cluster : executor::ClusterOptions{};
  std::string script = slurm
                           ? executor::render_slurm_script(plan, opts, ctx.layout)
                           : executor::render_pbs_script(plan, opts, ctx.layout);
  fs::create_directories(ctx.layout.exp_output_root);
  fs::path script_path = ctx.layout.exp_output_root /
                         (slurm ? "slurm-array.sh" : "pbs-array.sh");
  write_text_file(script_path, script);

  executor::SubmissionResult result = executor::submit(
      script_path, slurm ? "sbatch" : "qsub", cfg.dry_run);
  if (result.dry_run) {
    std::string joined;
    for (const auto& arg : result.command)
      joined += (joined.empty() ? "" : " ") + arg;
    std::cerr << "dry run: would submit with: " << joined << "\n";
  } else if (result.job_id) {
    std::cerr << "submitted job " << *result.job_id << "\n";
  }
  return 1;  // the script
}

int run_stage3(RunContext& ctx) {
  const PipelineConfig& cfg = ctx.cfg;
  const fs::path manifest_path = ctx.layout.batch_root / "manifest.json";
  if (!fs::exists(manifest_path))
    missing_prerequisite(3, manifest_path.string());
  const fs::path outcomes_path =
      ctx.layout.exp_output_root / "exec-outcomes.json";
  if (!fs::exists(outcomes_path))
    missing_prerequisite(3, outcomes_path.string());

  BatchManifest manifest = read_manifest(manifest_path);
  std::vector<executor::RunOutcome> outcomes =
      executor::read_outcomes(outcomes_path);
  platform::PlatformDef def = ctx.platform_def();
  if (def.expected_outputs.empty())
    throw Error(ErrorKind::SchemaError,
                "platform '" + def.name + "' declares no expected outputs");

  int artifacts = 0;
  std::string column;
  std::vector<std::pair<double, double>> per_exp;
  for (const auto& exp : manifest.experiments) {
    const std::string dir_name =
        experiment_dir_name(exp.index, exp.criteria_value.label);
    stats::ExpOutputs loaded = stats::load_run_outputs(
        ctx.layout.exp_output_root / dir_name, outcomes, exp.index,
        def.expected_outputs, cfg.min_successful_runs);
    for (int skipped : loaded.skipped_runs)
      std::cerr << "warning: experiment " << exp.index << " run " << skipped
                << " excluded (not ok)\n";

    const fs::path stats_dir = ctx.layout.statistics_root / dir_name;
    bool first_output = true;
    for (const std::string& name : def.expected_outputs) {
      const stats::RunResultTensor& tensor = loaded.tensors.at(name);
      stats::StatsBundle bundle = stats::compute_cell_stats(tensor);
      artifacts +=
          static_cast<int>(stats::write_stats_csvs(bundle, name, stats_dir).size());
      if (first_output) {
        if (column.empty()) column = ctx.resolve_column(bundle.column_names);
        stats::Reducer reducer = cfg.reducer;
        reducer.column = column;
        per_exp.push_back(stats::reduce_experiment(bundle, reducer));
        first_output = false;
      }
    }
  }

  stats::BatchSummaryTable table =
      stats::collate_batch(manifest, per_exp, cfg.reducer, column);
  stats::write_summary_csv(table, ctx.layout.statistics_root);
  return artifacts + 1;
}

int run_stage4(RunContext& ctx) {
  const PipelineConfig& cfg = ctx.cfg;
  const fs::path manifest_path = ctx.layout.batch_root / "manifest.json";
  if (!fs::exists(manifest_path))
    missing_prerequisite(4, manifest_path.string());
  BatchManifest manifest = read_manifest(manifest_path);
  platform::PlatformDef def = ctx.platform_def();
  if (def.expected_outputs.empty())
    throw Error(ErrorKind::SchemaError,
                "platform '" + def.name + "' declares no expected outputs");
  const std::string& output_name = def.expected_outputs.front();
  const std::string stem = output_name.substr(0, output_name.rfind('.'));

  int artifacts = 0;
  std::string column;
  for (const auto& exp : manifest.experiments) {
    const std::string dir_name =
        experiment_dir_name(exp.index, exp.criteria_value.label);
    const fs::path mean_path =
        ctx.layout.statistics_root / dir_name / (stem + ".mean.csv");
    const fs::path ci_path =
        ctx.layout.statistics_root / dir_name / (stem + ".ci95.csv");
    if (!fs::exists(mean_path)) missing_prerequisite(4, mean_path.string());
    if (!fs::exists(ci_path)) missing_prerequisite(4, ci_path.string());

    csv::Table mean = csv::read_file(mean_path);
    csv::Table ci = csv::read_file(ci_path);
    if (column.empty()) column = ctx.resolve_column(mean.columns);
    const std::size_t col = mean.column_index(column);
    if (mean.rows.size() < 2)
      throw Error(ErrorKind::EmptySeries,
                  mean_path.string() + " has fewer than 2 rows");

    plot::PlotSpec spec;
    spec.title = dir_name + ": " + column;
    spec.x_label = mean.columns.empty() ? "tick" : mean.columns[0];
    spec.y_label = column;
    spec.show_band = true;
    plot::Series series;
    series.name = "mean (95% ci)";
    for (std::size_t r = 0; r < mean.rows.size(); ++r) {
      series.x.push_back(mean.rows[r][0]);
      series.y.push_back(mean.rows[r][col]);
      series.spread.push_back(ci.rows[r][col]);
    }
    spec.series.push_back(std::move(series));

    const fs::path out_dir = ctx.layout.deliverables_root / dir_name;
    fs::create_directories(out_dir);
    write_text_file(out_dir / (stem + "-" + column + ".svg"),
                    plot::render_linegraph(spec));
    ++artifacts;

    if (cfg.imagize_column) {
      plot::FrameManifest frames = plot::imagize_csv(
          mean_path, *cfg.imagize_column, out_dir / ("frames-" + column),
          ctx.has_project ? ctx.project.video_fps : 10,
          ctx.has_project ? ctx.project.stitch_command
                          : std::vector<std::string>{});
      artifacts += static_cast<int>(frames.frames.size()) + 1;
    }
  }

  stats::Reducer reducer = cfg.reducer;
  reducer.column = column;
  const fs::path summary_path =
      ctx.layout.statistics_root /
      ("summary-" + reducer.name() + "-" + column + ".csv");
  if (!fs::exists(summary_path)) missing_prerequisite(4, summary_path.string());
  stats::BatchSummaryTable table = stats::read_summary_csv(summary_path);
  plot::PlotTitles titles;
  titles.title = manifest.query_text + ": " + reducer.name() + " of " + column;
  titles.x_label = manifest.variable_name;
  titles.y_label = column;
  fs::create_directories(ctx.layout.deliverables_root);
  write_text_file(ctx.layout.deliverables_root /
                      ("summary-" + reducer.name() + "-" + column + ".svg"),
                  plot::render_summary_linegraph(table, titles));
  return artifacts + 1;
}

int run_stage5(RunContext& ctx) {
  const PipelineConfig& cfg = ctx.cfg;
  if (cfg.compare_inputs.size() < 2)
    throw Error(ErrorKind::TooFewBatches,
                "stage 5 needs at least two --compare entries");

  // Resolve the summary file name from the first batch, then require the
  // same name everywhere.
  std::string file_name;
  if (!cfg.reducer.column.empty()) {
    file_name =
        "summary-" + cfg.reducer.name() + "-" + cfg.reducer.column + ".csv";
  } else {
    const fs::path stats_dir =
        layout_for(cfg.compare_inputs[0].batch_root).statistics_root;
    std::vector<std::string> candidates;
    if (fs::is_directory(stats_dir))
      for (const auto& entry : fs::directory_iterator(stats_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("summary-", 0) == 0 && name.ends_with(".csv"))
          candidates.push_back(name);
      }
    if (candidates.empty())
      missing_prerequisite(5, "a summary CSV under " + stats_dir.string());
    if (candidates.size() > 1)
      throw Error(ErrorKind::UsageError,
                  "multiple summary CSVs under " + stats_dir.string() +
                      "; disambiguate with --reducer kind:column");
    file_name = candidates.front();
  }

  compare::ComparisonSet set;
  for (const CompareInput& input : cfg.compare_inputs) {
    const fs::path path =
        layout_for(input.batch_root).statistics_root / file_name;
    if (!fs::exists(path)) missing_prerequisite(5, path.string());
    set.entries.emplace_back(input.label, stats::read_summary_csv(path));
  }

  const stats::BatchSummaryTable& first = set.entries[0].second;
  plot::PlotTitles titles;
  titles.title = "comparison: " + first.reducer_name + " of " + first.column_name;
  titles.x_label = "criteria";
  titles.y_label = first.column_name;
  std::string svg = compare::compare_batches(set, titles);

  fs::create_directories(cfg.compare_out);
  write_text_file(cfg.compare_out / ("comparison-" + first.column_name + "-" +
                                     first.reducer_name + ".svg"),
                  svg);
  return 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// CLI parsing

ParsedCli parse_cli(const std::vector<std::string>& args) {
  CLI::App app{"Research-query driven batch experiment pipeline"};
  app.name("expbatch");

  std::string pipeline_text = "1,2,3,4";
  std::string template_path;
  std::string criteria;
  int n_runs = 4;
  std::uint64_t seed = 0;
  std::string platform_name = "mockplat";
  std::string exec_env = "local";
  int parallelism =
      std::max(1u, std::thread::hardware_concurrency());
  std::string batch_root;
  std::string project_path;
  std::string reducer_text = "final_row";
  std::vector<std::string> compare_texts;
  std::string compare_out = ".";
  bool dry_run = false;
  std::string report_json;
  std::string imagize_column;
  int min_runs = 1;

  app.add_option("--pipeline", pipeline_text,
                 "Stages to run: comma-separated subset of 1..5")
      ->capture_default_str();
  app.add_option("--template", template_path,
                 "Template XML input file (stage 1)");
  app.add_option("--batch-criteria", criteria,
                 "Research query, e.g. population_size.Log8 "
                 "(<name>.Log<N> | <name>.Linear<N>.C<K> | <name>.Set{a,b})");
  app.add_option("--n-runs", n_runs, "Runs per experiment")
      ->capture_default_str();
  app.add_option("--seed", seed, "Base seed for per-run seed derivation")
      ->capture_default_str();
  app.add_option("--platform", platform_name,
                 "Platform name (built-in: mockplat)")
      ->capture_default_str();
  app.add_option("--exec-env", exec_env, "One of: local, slurm, pbs")
      ->capture_default_str();
  app.add_option("--parallelism", parallelism,
                 "Maximum concurrent runs for --exec-env local")
      ->capture_default_str();
  app.add_option("--batch-root", batch_root, "Batch output tree root");
  app.add_option("--project", project_path, "Project manifest (TOML)");
  app.add_option("--reducer", reducer_text,
                 "Summary reducer: final_row|mean_over_time|max_over_time"
                 "[:column]")
      ->capture_default_str();
  app.add_option("--compare", compare_texts,
                 "Stage 5 input: label=batch_root (repeat twice or more)");
  app.add_option("--compare-out", compare_out,
                 "Directory for the stage 5 comparison SVG")
      ->capture_default_str();
  app.add_flag("--dry-run", dry_run,
               "Render cluster scripts without submitting");
  app.add_option("--report-json", report_json,
                 "Write the machine-readable stage report to this path");
  app.add_option("--imagize", imagize_column,
                 "Also imagize this column into per-tick SVG frames (stage 4)");
  app.add_option("--min-runs", min_runs,
                 "Minimum successful runs an experiment needs in stage 3")
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    ParsedCli parsed;
    parsed.help_text = app.help();
    return parsed;
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorKind::UsageError, e.what());
  }

  PipelineConfig cfg;
  cfg.stages = parse_stage_list(pipeline_text);
  cfg.template_path = template_path;
  cfg.query_text = criteria;
  if (n_runs < 1)
    throw Error(ErrorKind::UsageError, "--n-runs must be >= 1");
  cfg.n_runs = n_runs;
  cfg.base_seed = seed;
  cfg.platform_name = platform_name;
  if (exec_env == "local")
    cfg.exec_env = ExecEnv::Local;
  else if (exec_env == "slurm")
    cfg.exec_env = ExecEnv::Slurm;
  else if (exec_env == "pbs")
    cfg.exec_env = ExecEnv::Pbs;
  else
    throw Error(ErrorKind::UsageError,
                "--exec-env must be local, slurm or pbs, got '" + exec_env +
                    "'");
  if (parallelism < 1)
    throw Error(ErrorKind::UsageError, "--parallelism must be >= 1");
  cfg.parallelism = parallelism;
  cfg.batch_root = batch_root;
  if (!project_path.empty()) cfg.project_manifest_path = project_path;
  cfg.reducer = stats::Reducer::parse(reducer_text);
  for (const std::string& text : compare_texts) {
    std::size_t eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
      throw Error(ErrorKind::UsageError,
                  "--compare expects label=path, got '" + text + "'");
    cfg.compare_inputs.push_back({text.substr(0, eq), text.substr(eq + 1)});
  }
  cfg.compare_out = compare_out;
  cfg.dry_run = dry_run;
  if (!report_json.empty()) cfg.report_json_path = report_json;
  if (!imagize_column.empty()) cfg.imagize_column = imagize_column;
  if (min_runs < 1)
    throw Error(ErrorKind::UsageError, "--min-runs must be >= 1");
  cfg.min_successful_runs = min_runs;

  // Cross-flag validation, before any filesystem effect.
  bool needs_root = false;
  for (int s : cfg.stages)
    if (s >= 1 && s <= 4) needs_root = true;
  if (needs_root && cfg.batch_root.empty())
    throw Error(ErrorKind::UsageError,
                "--batch-root is required for stages 1-4");
  if (cfg.stages.count(1)) {
    if (cfg.template_path.empty())
      throw Error(ErrorKind::UsageError, "stage 1 requires --template");
    if (cfg.query_text.empty())
      throw Error(ErrorKind::UsageError, "stage 1 requires --batch-criteria");
  }
  if (!cfg.query_text.empty())
    cfg.parsed_query = query::parse_query(cfg.query_text);
  if (cfg.stages.count(5) && cfg.compare_inputs.size() < 2)
    throw Error(ErrorKind::UsageError,
                "stage 5 requires at least two --compare label=path entries");

  ParsedCli parsed;
  parsed.config = std::move(cfg);
  return parsed;
}

// ---------------------------------------------------------------------------
// Orchestration

bool PipelineReport::all_ok() const {
  for (const auto& s : stages)
    if (s.status == StageStatus::Failed) return false;
  return true;
}

PipelineReport run_pipeline(const PipelineConfig& cfg) {
  PipelineReport report;
  report.stages.resize(5);
  for (int i = 0; i < 5; ++i) report.stages[i].stage = i + 1;

  std::optional<RunContext> ctx;
  try {
    ctx.emplace(cfg);
  } catch (const std::exception& e) {
    for (int stage = 1; stage <= 5; ++stage) {
      if (cfg.stages.count(stage)) {
        report.stages[stage - 1].status = StageStatus::Failed;
        report.stages[stage - 1].error = e.what();
        break;
      }
    }
    return report;
  }
  bool aborted = false;
  for (int stage = 1; stage <= 5; ++stage) {
    if (!cfg.stages.count(stage)) continue;
    StageReport& sr = report.stages[stage - 1];
    if (aborted) continue;  // remains Skipped
    const auto start = std::chrono::steady_clock::now();
    try {
      switch (stage) {
        case 1: sr.artifacts = run_stage1(*ctx); break;
        case 2: sr.artifacts = run_stage2(*ctx); break;
        case 3: sr.artifacts = run_stage3(*ctx); break;
        case 4: sr.artifacts = run_stage4(*ctx); break;
        case 5: sr.artifacts = run_stage5(*ctx); break;
      }
      sr.status = StageStatus::Ok;
    } catch (const std::exception& e) {
      sr.status = StageStatus::Failed;
      sr.error = e.what();
      aborted = true;
    }
    sr.seconds = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  }
  return report;
}

void print_report(const PipelineReport& report, std::ostream& out) {
  char buf[64];
  for (const auto& s : report.stages) {
    out << "stage " << s.stage << ": ";
    switch (s.status) {
      case StageStatus::Skipped:
        out << "skipped\n";
        break;
      case StageStatus::Ok:
        std::snprintf(buf, sizeof buf, "ok (%d artifacts, %.3f s)\n",
                      s.artifacts, s.seconds);
        out << buf;
        break;
      case StageStatus::Failed:
        out << "failed: " << s.error << "\n";
        break;
    }
  }
}

void write_report_json(const PipelineReport& report,
                       const std::filesystem::path& path) {
  nlohmann::json j;
  j["ok"] = report.all_ok();
  j["stages"] = nlohmann::json::array();
  for (const auto& s : report.stages) {
    nlohmann::json js;
    js["stage"] = s.stage;
    js["status"] = s.status == StageStatus::Ok       ? "ok"
                   : s.status == StageStatus::Failed ? "failed"
                                                     : "skipped";
    js["seconds"] = s.seconds;
    js["artifacts"] = s.artifacts;
    if (!s.error.empty()) js["error"] = s.error;
    j["stages"].push_back(std::move(js));
  }
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace expbatch::pipeline
