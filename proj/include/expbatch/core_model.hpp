#ifndef EXPBATCH_CORE_MODEL_HPP
#define EXPBATCH_CORE_MODEL_HPP

// Batch -> experiment -> run data model, the canonical on-disk layout and
// the manifest file every later stage consumes.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "expbatch/error.hpp"
#include "expbatch/xml.hpp"

namespace expbatch {

// One value of the independent variable. The label is what appears in
// directory names; the scalar is present for numeric range specs.
struct CriteriaValue {
  std::string label;
  std::optional<std::int64_t> scalar;

  bool operator==(const CriteriaValue&) const = default;
};

// Label charset accepted in directory names: [A-Za-z0-9_-], nonempty.
bool is_valid_label(const std::string& label);

struct RunSpec {
  int run_index = 0;
  std::uint64_t seed = 0;
  std::filesystem::path input_path;
  std::filesystem::path output_dir;

  bool operator==(const RunSpec&) const = default;
};

struct ExperimentSpec {
  int index = 0;
  CriteriaValue criteria_value;
  std::vector<xml::Transform> transforms;  // the value-specific changes
  std::vector<RunSpec> runs;

  bool operator==(const ExperimentSpec&) const = default;
};

struct BatchManifest {
  std::string query_text;
  std::string variable_name;
  std::vector<CriteriaValue> values;
  std::filesystem::path template_path;
  int runs_per_experiment = 1;
  std::uint64_t base_seed = 0;
  std::string platform_name;
  std::vector<ExperimentSpec> experiments;

  bool operator==(const BatchManifest&) const = default;
};

struct DirectoryLayout {
  std::filesystem::path batch_root;
  std::filesystem::path exp_input_root;   // <root>/exp-inputs
  std::filesystem::path exp_output_root;  // <root>/exp-outputs
  std::filesystem::path statistics_root;  // <root>/statistics
  std::filesystem::path deliverables_root;  // <root>/deliverables

  bool operator==(const DirectoryLayout&) const = default;
};

// Pure: derives the fixed layout without touching the filesystem.
// InvalidPath for an empty root.
DirectoryLayout layout_for(const std::filesystem::path& batch_root);

// `exp-<index>-<label>` with the index zero-padded to 4 digits, so
// lexicographic listing preserves experiment order past 10 entries.
std::string experiment_dir_name(int index, const std::string& label);

// `run-<r>.xml` with r zero-padded to 4 digits.
std::string run_input_name(int run_index);
std::string run_dir_name(int run_index);

// Serializes as canonical JSON (sorted keys, LF, trailing newline, seeds as
// decimal strings) to <batch_root>/manifest.json. Byte-identical output for
// identical manifests. Returns the path written.
std::filesystem::path write_manifest(const BatchManifest& manifest,
                                     const DirectoryLayout& layout);

// Inverse of write_manifest. ParseError on malformed JSON, SchemaError on
// missing/mistyped fields, InvariantError when the model invariants fail.
BatchManifest read_manifest(const std::filesystem::path& path);

// Invariant checks shared by read_manifest and the generator:
// experiments.length == values.length, gapless 0-based indices,
// runs_per_experiment >= 1, per-batch seed distinctness, valid labels.
void check_manifest_invariants(const BatchManifest& m);

std::string manifest_to_json(const BatchManifest& manifest);
BatchManifest manifest_from_json(const std::string& text);

}  // namespace expbatch

#endif  // EXPBATCH_CORE_MODEL_HPP
