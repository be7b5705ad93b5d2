#ifndef EXPBATCH_PROJECT_HPP
#define EXPBATCH_PROJECT_HPP

// Project manifest (TOML): variable definitions for the query DSL, the
// platform manifests directory, cluster option defaults, the video stitch
// command and the environment pass-through list.
//
// Transforms are written as arrays of strings:
//   ["set_attr", "<path>", "<attr>", "<value>"]
//   ["add_child", "<parent path>", "<tag>", "k=v", ...]
//   ["remove_node", "<path>"]

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "expbatch/executor.hpp"
#include "expbatch/query.hpp"
#include "expbatch/toml_lite.hpp"
#include "expbatch/xml.hpp"

namespace expbatch::project {

struct ProjectConfig {
  std::optional<std::filesystem::path> platforms_dir;
  std::optional<std::vector<std::string>> env_passthrough;
  executor::ClusterOptions cluster;
  std::vector<std::string> stitch_command;
  int video_fps = 10;
  std::vector<xml::Transform> batch_transforms;
  std::map<std::string, query::VariableDefinition> variables;
};

xml::Transform transform_from_toml(const toml::Value& value);

ProjectConfig load_project(const std::filesystem::path& path);

// Variable definitions the built-in mock platform understands out of the
// box, so a demo run needs no project manifest: population_size, duration
// and collect_rate map onto the obvious template attributes.
std::map<std::string, query::VariableDefinition> builtin_mock_variables();

}  // namespace expbatch::project

#endif  // EXPBATCH_PROJECT_HPP
