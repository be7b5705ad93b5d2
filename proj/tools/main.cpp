#include <iostream>
#include <string>
#include <vector>

#include "expbatch/error.hpp"
#include "expbatch/pipeline.hpp"
#include "expbatch/platform.hpp"

namespace {

std::filesystem::path self_exe_path(const char* argv0) {
  std::error_code ec;
  auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (!ec) return p;
  return std::filesystem::absolute(argv0);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);

  if (!args.empty() && args[0] == "mockplat") {
    return expbatch::platform::mockplat_main(
        {args.begin() + 1, args.end()});
  }

  expbatch::pipeline::PipelineConfig cfg;
  try {
    expbatch::pipeline::ParsedCli parsed = expbatch::pipeline::parse_cli(args);
    if (!parsed.config) {
      std::cout << parsed.help_text;
      return 0;
    }
    cfg = std::move(*parsed.config);
  } catch (const std::exception& e) {
    std::cerr << "expbatch: " << e.what() << "\n";
    return 2;
  }
  cfg.self_exe = self_exe_path(argv[0]);

  expbatch::pipeline::PipelineReport report =
      expbatch::pipeline::run_pipeline(cfg);
  expbatch::pipeline::print_report(report, std::cout);
  if (cfg.report_json_path) {
    try {
      expbatch::pipeline::write_report_json(report, *cfg.report_json_path);
    } catch (const std::exception& e) {
      std::cerr << "expbatch: " << e.what() << "\n";
      return 1;
    }
  }
  return report.all_ok() ? 0 : 1;
}
