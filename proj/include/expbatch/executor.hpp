#ifndef EXPBATCH_EXECUTOR_HPP
#define EXPBATCH_EXECUTOR_HPP

// Stage 2: turns a batch manifest into an execution plan, runs it locally
// under a bounded process pool, or renders SLURM/PBS array-job scripts.
// Cluster execution is compile-to-script: the scripts are deterministic,
// auditable artifacts; submission is a thin sbatch/qsub wrapper.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "expbatch/core_model.hpp"
#include "expbatch/error.hpp"
#include "expbatch/platform.hpp"

namespace expbatch::executor {

struct RunTask {
  int exp_index = 0;
  int run_index = 0;
  std::vector<std::string> command;  // argv, no shell interpretation
  std::filesystem::path working_dir;
  std::filesystem::path output_dir;
  int timeout_seconds = 3600;
};

struct ExecPlan {
  std::vector<RunTask> tasks;  // ordered by (exp_index, run_index)
};

enum class RunStatus { Ok, Failed, Timeout };

struct RunOutcome {
  int exp_index = 0;
  int run_index = 0;
  int exit_code = -1;
  double duration_seconds = 0.0;
  std::filesystem::path stdout_path;
  std::filesystem::path stderr_path;
  RunStatus status = RunStatus::Failed;
};

const char* to_string(RunStatus s);
RunStatus run_status_from_string(const std::string& s);

struct ClusterOptions {
  std::string job_name = "expbatch";
  std::string time_limit = "01:00:00";  // H...H:MM:SS
  int tasks_per_node = 1;
  std::optional<std::string> account;
  std::vector<std::string> extra_directives;
};

void check_cluster_options(const ClusterOptions& opts);

// One task per (experiment, run), commands rendered from the platform
// launch template, relative paths made absolute so tasks survive the cd
// into their working directory. MissingInput lists every absent file.
ExecPlan make_exec_plan(const BatchManifest& manifest,
                        const platform::PlatformDef& def);

struct ExecutionOptions {
  int parallelism = 1;
  // When set, child processes see exactly these variables (values taken
  // from the current environment); otherwise the environment is inherited.
  std::optional<std::vector<std::string>> env_passthrough;
};

// Runs every task with at most `parallelism` live children, captures
// stdout/stderr to <output_dir>/stdout.log and stderr.log, kills on
// timeout. Failures never abort the rest; spawn failures become outcomes
// with exit code -1. Outcomes are returned in task order.
std::vector<RunOutcome> execute_local(const ExecPlan& plan,
                                      const ExecutionOptions& options);

// Deterministic bash array-job scripts. EmptyPlan when there is nothing
// to run.
std::string render_slurm_script(const ExecPlan& plan,
                                const ClusterOptions& opts,
                                const DirectoryLayout& layout);
std::string render_pbs_script(const ExecPlan& plan, const ClusterOptions& opts,
                              const DirectoryLayout& layout);

struct SubmissionResult {
  std::optional<std::string> job_id;
  std::vector<std::string> command;  // what ran (or would have run)
  bool dry_run = false;
};

// dry_run records the command without spawning anything. Otherwise invokes
// `<submitter> <script_path>` and extracts the first digit run in stdout as
// the job id. SubmitterNotFound / SubmitFailed on the obvious conditions.
SubmissionResult submit(const std::filesystem::path& script_path,
                        const std::string& submitter, bool dry_run);

// exec-outcomes.json under exp_output_root. Durations are deliberately not
// persisted: generated trees must be byte-stable across re-runs.
std::filesystem::path write_outcomes(const std::vector<RunOutcome>& outcomes,
                                     const DirectoryLayout& layout);
std::vector<RunOutcome> read_outcomes(const std::filesystem::path& path);

// Small argv runner used by submit and the test suites.
struct CommandResult {
  int exit_code = -1;
  std::string stdout_text;
  std::string stderr_text;
};
CommandResult run_command_capture(const std::vector<std::string>& argv);

}  // namespace expbatch::executor

#endif  // EXPBATCH_EXECUTOR_HPP
