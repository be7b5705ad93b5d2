#ifndef EXPBATCH_GENERATOR_HPP
#define EXPBATCH_GENERATOR_HPP

// Stage 1: expands a bound variable plus template into the on-disk batch
// tree. Transform precedence per run input: batch-uniform transforms,
// then the value-specific ones, then the seed attribute on the root.
// Regenerating an unchanged request rewrites byte-identical files.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "expbatch/core_model.hpp"
#include "expbatch/query.hpp"
#include "expbatch/xml.hpp"

namespace expbatch::generator {

struct GenerationRequest {
  std::filesystem::path template_path;
  query::BoundVariable bound;
  int runs_per_experiment = 1;
  std::uint64_t base_seed = 0;
  std::vector<xml::Transform> batch_transforms;  // uniform across experiments
  DirectoryLayout layout;
  std::string platform_name;
};

// Deterministic per-run seed: one splitmix64 step from the state
// base_seed ^ (exp_index * 0x9E3779B97F4A7C15) ^ (run_index * 0xBF58476D1CE4E5B9).
std::uint64_t run_seed(std::uint64_t base_seed, std::uint64_t exp_index,
                       std::uint64_t run_index);

// Creates exp-inputs/exp-<idx>-<label>/run-<r>.xml for every (value, run),
// pre-creates the matching output directories, writes manifest.json and
// returns the manifest. Transform failures carry the experiment index.
BatchManifest generate_batch(const GenerationRequest& req);

}  // namespace expbatch::generator

#endif  // EXPBATCH_GENERATOR_HPP
