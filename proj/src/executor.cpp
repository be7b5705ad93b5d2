#include "expbatch/executor.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace expbatch::executor {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Child process plumbing

std::vector<char*> to_argv(const std::vector<std::string>& args,
                           std::vector<std::string>& storage) {
  storage = args;
  std::vector<char*> argv;
  argv.reserve(storage.size() + 1);
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return argv;
}

// Builds an envp restricted to the passthrough list.
std::vector<char*> to_envp(const std::vector<std::string>& names,
                           std::vector<std::string>& storage) {
  storage.clear();
  for (const auto& name : names) {
    const char* value = std::getenv(name.c_str());
    if (value) storage.push_back(name + "=" + value);
  }
  std::vector<char*> envp;
  envp.reserve(storage.size() + 1);
  for (auto& s : storage) envp.push_back(s.data());
  envp.push_back(nullptr);
  return envp;
}

struct SpawnRequest {
  const std::vector<std::string>& argv;
  fs::path working_dir;       // empty = inherit
  fs::path stdout_path;       // empty = inherit
  fs::path stderr_path;       // empty = inherit
  int stdout_pipe_fd = -1;    // exclusive with stdout_path
  const std::optional<std::vector<std::string>>* env = nullptr;
};

pid_t spawn_child(const SpawnRequest& req) {
  pid_t pid = fork();
  if (pid < 0) return -1;
  if (pid > 0) return pid;

  // Child. Only async-signal-safe calls from here on.
  if (!req.working_dir.empty()) {
    if (chdir(req.working_dir.c_str()) != 0) _exit(126);
  }
  if (!req.stdout_path.empty()) {
    int fd = open(req.stdout_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0 || dup2(fd, STDOUT_FILENO) < 0) _exit(126);
    close(fd);
  } else if (req.stdout_pipe_fd >= 0) {
    if (dup2(req.stdout_pipe_fd, STDOUT_FILENO) < 0) _exit(126);
    close(req.stdout_pipe_fd);
  }
  if (!req.stderr_path.empty()) {
    int fd = open(req.stderr_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0 || dup2(fd, STDERR_FILENO) < 0) _exit(126);
    close(fd);
  }

  std::vector<std::string> arg_storage;
  std::vector<char*> argv = to_argv(req.argv, arg_storage);
  if (req.env && req.env->has_value()) {
    std::vector<std::string> env_storage;
    std::vector<char*> envp = to_envp(**req.env, env_storage);
    execvpe(argv[0], argv.data(), envp.data());
  } else {
    execvp(argv[0], argv.data());
  }
  _exit(127);  // exec failed
}

// Waits for the child, killing it at the deadline. Returns (exit_code,
// timed_out); signal deaths map to 128+signo.
std::pair<int, bool> wait_with_timeout(pid_t pid, int timeout_seconds) {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::seconds(timeout_seconds);
  bool killed = false;
  for (;;) {
    int status = 0;
    pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) {
      if (WIFEXITED(status)) return {WEXITSTATUS(status), killed};
      if (WIFSIGNALED(status)) return {128 + WTERMSIG(status), killed};
      return {-1, killed};
    }
    if (r < 0) return {-1, killed};
    if (!killed && clock::now() >= deadline) {
      kill(pid, SIGKILL);
      killed = true;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

RunOutcome run_one(const RunTask& task, const ExecutionOptions& options) {
  RunOutcome outcome;
  outcome.exp_index = task.exp_index;
  outcome.run_index = task.run_index;
  outcome.stdout_path = task.output_dir / "stdout.log";
  outcome.stderr_path = task.output_dir / "stderr.log";

  std::error_code ec;
  fs::create_directories(task.output_dir, ec);
  fs::create_directories(task.working_dir, ec);

  const auto start = std::chrono::steady_clock::now();
  SpawnRequest req{task.command, task.working_dir, outcome.stdout_path,
                   outcome.stderr_path};
  req.env = &options.env_passthrough;
  pid_t pid = spawn_child(req);
  if (pid < 0) {
    outcome.exit_code = -1;
    outcome.status = RunStatus::Failed;
    return outcome;
  }
  auto [exit_code, timed_out] = wait_with_timeout(pid, task.timeout_seconds);
  outcome.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  outcome.exit_code = exit_code;
  outcome.status = timed_out ? RunStatus::Timeout
                   : exit_code == 0 ? RunStatus::Ok
                                    : RunStatus::Failed;
  return outcome;
}

// ---------------------------------------------------------------------------
// Script rendering

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

std::string render_case_dispatch(const ExecPlan& plan,
                                 const std::string& index_var) {
  std::ostringstream os;
  os << "case \"${" << index_var << "}\" in\n";
  for (std::size_t i = 0; i < plan.tasks.size(); ++i) {
    const RunTask& task = plan.tasks[i];
    os << "  " << i << ")\n";
    os << "    cd " << shell_quote(task.working_dir.string()) << " &&";
    for (const auto& arg : task.command) os << ' ' << shell_quote(arg);
    os << "\n    ;;\n";
  }
  os << "esac\n";
  return os.str();
}

void require_nonempty(const ExecPlan& plan) {
  if (plan.tasks.empty())
    throw Error(ErrorKind::EmptyPlan, "execution plan has no tasks");
}

// ---------------------------------------------------------------------------
// Submitter lookup

bool is_executable_file(const fs::path& p) {
  struct stat st{};
  return stat(p.c_str(), &st) == 0 && S_ISREG(st.st_mode) &&
         access(p.c_str(), X_OK) == 0;
}

bool find_on_path(const std::string& name) {
  if (name.find('/') != std::string::npos) return is_executable_file(name);
  const char* path_env = std::getenv("PATH");
  if (!path_env) return false;
  std::string path(path_env);
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t colon = path.find(':', start);
    std::string dir = path.substr(
        start, colon == std::string::npos ? std::string::npos : colon - start);
    if (!dir.empty() && is_executable_file(fs::path(dir) / name)) return true;
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  return false;
}

}  // namespace

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::Failed: return "failed";
    case RunStatus::Timeout: return "timeout";
  }
  return "failed";
}

RunStatus run_status_from_string(const std::string& s) {
  if (s == "ok") return RunStatus::Ok;
  if (s == "timeout") return RunStatus::Timeout;
  if (s == "failed") return RunStatus::Failed;
  throw Error(ErrorKind::SchemaError, "unknown run status '" + s + "'");
}

void check_cluster_options(const ClusterOptions& opts) {
  static const std::regex time_re("^\\d+:\\d{2}:\\d{2}$");
  if (!std::regex_match(opts.time_limit, time_re))
    throw Error(ErrorKind::SchemaError,
                "time limit '" + opts.time_limit + "' must match H:MM:SS");
  if (opts.tasks_per_node < 1)
    throw Error(ErrorKind::SchemaError, "tasks_per_node must be >= 1");
  if (opts.job_name.empty())
    throw Error(ErrorKind::SchemaError, "job name must be nonempty");
}

ExecPlan make_exec_plan(const BatchManifest& manifest,
                        const platform::PlatformDef& def) {
  std::vector<std::string> missing;
  for (const auto& exp : manifest.experiments)
    for (const auto& run : exp.runs)
      if (!fs::exists(run.input_path))
        missing.push_back(run.input_path.string());
  if (!missing.empty()) {
    std::string joined;
    for (const auto& m : missing) joined += (joined.empty() ? "" : ", ") + m;
    throw Error(ErrorKind::MissingInput, "missing run inputs: " + joined);
  }

  ExecPlan plan;
  for (const auto& exp : manifest.experiments) {
    for (const auto& run : exp.runs) {
      RunSpec absolute = run;
      absolute.input_path = fs::absolute(run.input_path);
      absolute.output_dir = fs::absolute(run.output_dir);

      RunTask task;
      task.exp_index = exp.index;
      task.run_index = run.run_index;
      try {
        task.command = platform::render_launch_command(def, absolute);
      } catch (const Error& e) {
        throw Error(ErrorKind::PlatformError,
                    std::string("rendering launch command: ") + e.what());
      }
      task.working_dir = absolute.output_dir;
      task.output_dir = absolute.output_dir;
      task.timeout_seconds = def.timeout_seconds;
      plan.tasks.push_back(std::move(task));
    }
  }
  return plan;
}

std::vector<RunOutcome> execute_local(const ExecPlan& plan,
                                      const ExecutionOptions& options) {
  if (options.parallelism < 1)
    throw Error(ErrorKind::InvariantError, "parallelism must be >= 1");

  std::vector<RunOutcome> outcomes(plan.tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= plan.tasks.size()) return;
      outcomes[i] = run_one(plan.tasks[i], options);
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(options.parallelism, plan.tasks.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  return outcomes;
}

std::string render_slurm_script(const ExecPlan& plan,
                                const ClusterOptions& opts,
                                const DirectoryLayout& layout) {
  require_nonempty(plan);
  check_cluster_options(opts);
  std::ostringstream os;
  os << "#!/bin/bash\n";
  os << "#SBATCH --job-name=" << opts.job_name << "\n";
  os << "#SBATCH --time=" << opts.time_limit << "\n";
  os << "#SBATCH --array=0-" << plan.tasks.size() - 1 << "\n";
  os << "#SBATCH --ntasks-per-node=" << opts.tasks_per_node << "\n";
  if (opts.account) os << "#SBATCH --account=" << *opts.account << "\n";
  for (const auto& directive : opts.extra_directives)
    os << "#SBATCH " << directive << "\n";
  os << "\n";
  os << "# batch root: " << layout.batch_root.string() << "\n";
  os << "\n";
  os << render_case_dispatch(plan, "SLURM_ARRAY_TASK_ID");
  return os.str();
}

std::string render_pbs_script(const ExecPlan& plan, const ClusterOptions& opts,
                              const DirectoryLayout& layout) {
  require_nonempty(plan);
  check_cluster_options(opts);
  std::ostringstream os;
  os << "#!/bin/bash\n";
  os << "#PBS -N " << opts.job_name << "\n";
  os << "#PBS -l walltime=" << opts.time_limit << "\n";
  os << "#PBS -J 0-" << plan.tasks.size() - 1 << "\n";
  os << "#PBS -l select=1:ncpus=" << opts.tasks_per_node << "\n";
  if (opts.account) os << "#PBS -A " << *opts.account << "\n";
  for (const auto& directive : opts.extra_directives)
    os << "#PBS " << directive << "\n";
  os << "\n";
  os << "# batch root: " << layout.batch_root.string() << "\n";
  os << "\n";
  os << render_case_dispatch(plan, "PBS_ARRAY_INDEX");
  return os.str();
}

SubmissionResult submit(const std::filesystem::path& script_path,
                        const std::string& submitter, bool dry_run) {
  if (!fs::exists(script_path))
    throw Error(ErrorKind::IoError,
                "script does not exist: " + script_path.string());
  SubmissionResult result;
  result.command = {submitter, script_path.string()};
  result.dry_run = dry_run;
  if (dry_run) return result;

  if (!find_on_path(submitter))
    throw Error(ErrorKind::SubmitterNotFound,
                "submitter '" + submitter + "' not found on PATH");

  CommandResult r = run_command_capture(result.command);
  if (r.exit_code != 0)
    throw Error(ErrorKind::SubmitFailed,
                submitter + " exited with " + std::to_string(r.exit_code) +
                    ": " + r.stderr_text);
  static const std::regex id_re("(\\d+)");
  std::smatch m;
  if (std::regex_search(r.stdout_text, m, id_re)) result.job_id = m[1].str();
  return result;
}

std::filesystem::path write_outcomes(const std::vector<RunOutcome>& outcomes,
                                     const DirectoryLayout& layout) {
  json j;
  j["outcomes"] = json::array();
  for (const auto& o : outcomes) {
    json jo;
    jo["exp_index"] = o.exp_index;
    jo["run_index"] = o.run_index;
    jo["exit_code"] = o.exit_code;
    jo["status"] = to_string(o.status);
    jo["stdout_path"] = o.stdout_path.string();
    jo["stderr_path"] = o.stderr_path.string();
    j["outcomes"].push_back(std::move(jo));
  }
  std::string body = j.dump(2) + "\n";

  fs::create_directories(layout.exp_output_root);
  fs::path path = layout.exp_output_root / "exec-outcomes.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.close();
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
  return path;
}

std::vector<RunOutcome> read_outcomes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("outcomes") || !j["outcomes"].is_array())
    throw Error(ErrorKind::SchemaError,
                path.string() + ": expected an 'outcomes' array");
  std::vector<RunOutcome> outcomes;
  for (const auto& jo : j["outcomes"]) {
    RunOutcome o;
    o.exp_index = jo.at("exp_index").get<int>();
    o.run_index = jo.at("run_index").get<int>();
    o.exit_code = jo.at("exit_code").get<int>();
    o.status = run_status_from_string(jo.at("status").get<std::string>());
    o.stdout_path = jo.at("stdout_path").get<std::string>();
    o.stderr_path = jo.at("stderr_path").get<std::string>();
    outcomes.push_back(std::move(o));
  }
  return outcomes;
}

CommandResult run_command_capture(const std::vector<std::string>& argv) {
  CommandResult result;
  int out_pipe[2];
  int err_pipe[2];
  if (pipe(out_pipe) != 0) return result;
  if (pipe(err_pipe) != 0) {
    close(out_pipe[0]);
    close(out_pipe[1]);
    return result;
  }

  pid_t pid = fork();
  if (pid < 0) {
    close(out_pipe[0]); close(out_pipe[1]);
    close(err_pipe[0]); close(err_pipe[1]);
    return result;
  }
  if (pid == 0) {
    close(out_pipe[0]);
    close(err_pipe[0]);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    close(out_pipe[1]);
    close(err_pipe[1]);
    std::vector<std::string> storage;
    std::vector<char*> args = to_argv(argv, storage);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(out_pipe[1]);
  close(err_pipe[1]);

  auto drain = [](int fd, std::string& into) {
    char buf[4096];
    ssize_t n;
    while ((n = read(fd, buf, sizeof buf)) > 0) into.append(buf, n);
  };
  drain(out_pipe[0], result.stdout_text);
  drain(err_pipe[0], result.stderr_text);
  close(out_pipe[0]);
  close(err_pipe[0]);

  int status = 0;
  waitpid(pid, &status, 0);
  if (WIFEXITED(status))
    result.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    result.exit_code = 128 + WTERMSIG(status);
  return result;
}

}  // namespace expbatch::executor
