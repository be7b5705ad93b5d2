#ifndef EXPBATCH_PLATFORM_HPP
#define EXPBATCH_PLATFORM_HPP

// Platform plugins are declarative TOML manifests: a launch-command
// template plus the output files a run is expected to leave behind. The
// built-in `mockplat` platform is a deterministic stand-in simulator that
// lets the whole pipeline run end to end with no external software.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "expbatch/core_model.hpp"
#include "expbatch/error.hpp"

namespace expbatch::platform {

// Launch templates may reference {input}, {output_dir}, {seed}, {run_id}.
struct PlatformDef {
  std::string name;
  std::vector<std::string> launch_template;
  std::vector<std::string> expected_outputs;
  int timeout_seconds = 3600;
};

inline constexpr const char* kMockPlatformName = "mockplat";

// TOML schema: name (string), launch (array of strings, must mention
// {input}), expected_outputs (array of strings), timeout (integer,
// optional). The name `mockplat` is reserved for the built-in platform.
PlatformDef load_platform_manifest(const std::filesystem::path& path);

// The built-in platform launches the main binary itself:
//   <self_exe> mockplat --input <xml> --output-dir <dir>
PlatformDef builtin_mockplat(const std::filesystem::path& self_exe);

// Substitutes every placeholder; argv semantics, no shell involved.
// UnknownPlaceholder for any {...} token outside the supported set.
std::vector<std::string> render_launch_command(const PlatformDef& def,
                                               const RunSpec& run);

// ---------------------------------------------------------------------------
// splitmix64: tiny, fully specified PRNG so byte-identical results are
// reproducible in any language.

struct PrngState {
  std::uint64_t state = 0;
};

std::pair<PrngState, std::uint64_t> splitmix64_next(PrngState s);

// Top 53 bits mapped to [0,1).
double unit_interval(std::uint64_t u);

// ---------------------------------------------------------------------------
// Mock platform

struct MockWorldConfig {
  std::int64_t population_size = 1;  // S
  std::int64_t duration_ticks = 1;   // T
  double collect_rate = 0.0;         // p in [0,1]
  std::uint64_t seed = 0;
};

// Reads /experiment@seed, /experiment/population@size,
// /experiment/duration@ticks and /experiment/controller@rate from a run
// input document. SchemaError on missing pieces, InvariantError on bad
// ranges.
MockWorldConfig mock_config_from_xml(const xml::XmlDoc& doc);

// Rows of blocks-collected.csv: one (tick, cumulative) pair per tick.
std::vector<std::pair<std::int64_t, std::int64_t>> mockplat_run(
    const MockWorldConfig& config);

// Simulates T ticks, S agents per tick in index order, each drawing one
// PRNG output and collecting a block with probability p. Writes
// blocks-collected.csv (header `tick,cumulative_blocks`, decimal integers,
// LF) into output_dir; bytes depend only on the config.
void mockplat_simulate(const MockWorldConfig& config,
                       const std::filesystem::path& output_dir);

// CLI entry: expbatch mockplat --input <xml> --output-dir <dir>.
int mockplat_main(const std::vector<std::string>& args);

}  // namespace expbatch::platform

#endif  // EXPBATCH_PLATFORM_HPP
