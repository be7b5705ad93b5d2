#include "expbatch/project.hpp"

namespace expbatch::project {

namespace {

std::string string_item(const toml::Value& v, const char* what) {
  if (v.kind != toml::Value::Kind::String)
    throw Error(ErrorKind::SchemaError,
                std::string(what) + " must be a string");
  return v.str;
}

std::vector<xml::Transform> transforms_from_toml_array(const toml::Value& v,
                                                       const std::string& key) {
  if (v.kind != toml::Value::Kind::Array)
    throw Error(ErrorKind::SchemaError, "'" + key + "' must be an array");
  std::vector<xml::Transform> out;
  for (const toml::Value& item : v.array) out.push_back(transform_from_toml(item));
  return out;
}

}  // namespace

xml::Transform transform_from_toml(const toml::Value& value) {
  if (value.kind != toml::Value::Kind::Array || value.array.empty())
    throw Error(ErrorKind::SchemaError,
                "a transform must be a nonempty array of strings");
  std::vector<std::string> parts;
  for (const toml::Value& item : value.array)
    parts.push_back(string_item(item, "transform element"));

  const std::string& kind = parts[0];
  if (kind == "set_attr") {
    if (parts.size() != 4)
      throw Error(ErrorKind::SchemaError,
                  "set_attr needs [\"set_attr\", path, attr, value]");
    return xml::Transform::set_attr(xml::XmlPath::parse(parts[1]), parts[2],
                                    parts[3]);
  }
  if (kind == "add_child") {
    if (parts.size() < 3)
      throw Error(ErrorKind::SchemaError,
                  "add_child needs [\"add_child\", parent, tag, \"k=v\"...]");
    std::map<std::string, std::string> attrs;
    for (std::size_t i = 3; i < parts.size(); ++i) {
      std::size_t eq = parts[i].find('=');
      if (eq == std::string::npos || eq == 0)
        throw Error(ErrorKind::SchemaError,
                    "add_child attribute '" + parts[i] + "' must be k=v");
      attrs[parts[i].substr(0, eq)] = parts[i].substr(eq + 1);
    }
    return xml::Transform::add_child(xml::XmlPath::parse(parts[1]), parts[2],
                                     std::move(attrs));
  }
  if (kind == "remove_node") {
    if (parts.size() != 2)
      throw Error(ErrorKind::SchemaError,
                  "remove_node needs [\"remove_node\", path]");
    return xml::Transform::remove_node(xml::XmlPath::parse(parts[1]));
  }
  throw Error(ErrorKind::SchemaError, "unknown transform kind '" + kind + "'");
}

ProjectConfig load_project(const std::filesystem::path& path) {
  toml::Document doc = toml::Document::parse_file(path.string());
  ProjectConfig config;

  if (auto dir = doc.get_string("project.platforms_dir")) {
    std::filesystem::path p = *dir;
    if (p.is_relative()) p = path.parent_path() / p;
    config.platforms_dir = p;
  }
  if (doc.contains("project.env_passthrough"))
    config.env_passthrough = doc.get_string_array("project.env_passthrough");

  if (auto v = doc.get_string("cluster.job_name")) config.cluster.job_name = *v;
  if (auto v = doc.get_string("cluster.time_limit"))
    config.cluster.time_limit = *v;
  if (auto v = doc.get_integer("cluster.tasks_per_node"))
    config.cluster.tasks_per_node = static_cast<int>(*v);
  if (auto v = doc.get_string("cluster.account")) config.cluster.account = *v;
  config.cluster.extra_directives =
      doc.get_string_array("cluster.extra_directives");
  executor::check_cluster_options(config.cluster);

  config.stitch_command = doc.get_string_array("video.stitch_command");
  if (auto v = doc.get_integer("video.fps")) {
    if (*v < 1) throw Error(ErrorKind::SchemaError, "video.fps must be >= 1");
    config.video_fps = static_cast<int>(*v);
  }

  if (const toml::Value* v = doc.find("batch.transforms"))
    config.batch_transforms = transforms_from_toml_array(*v, "batch.transforms");

  for (const std::string& name : doc.children("variables")) {
    query::VariableDefinition def;
    def.name = name;
    const std::string base = "variables." + name;
    if (const toml::Value* v = doc.find(base + ".transforms"))
      def.transform_templates =
          transforms_from_toml_array(*v, base + ".transforms");
    for (const std::string& label : doc.children(base + ".cases")) {
      const toml::Value* v = doc.find(base + ".cases." + label);
      if (!v)
        throw Error(ErrorKind::SchemaError,
                    base + ".cases." + label + " must be a transform array");
      def.case_transforms[label] =
          transforms_from_toml_array(*v, base + ".cases." + label);
    }
    if (def.transform_templates.empty() && def.case_transforms.empty())
      throw Error(ErrorKind::SchemaError,
                  "variable '" + name + "' defines no transforms");
    config.variables[name] = std::move(def);
  }
  return config;
}

std::map<std::string, query::VariableDefinition> builtin_mock_variables() {
  auto set_attr_template = [](const char* path, const char* attr) {
    return xml::Transform::set_attr(xml::XmlPath::parse(path), attr, "{value}");
  };
  std::map<std::string, query::VariableDefinition> defs;
  defs["population_size"] = {
      "population_size",
      {set_attr_template("/experiment/population", "size")},
      {}};
  defs["duration"] = {
      "duration", {set_attr_template("/experiment/duration", "ticks")}, {}};
  defs["collect_rate"] = {
      "collect_rate", {set_attr_template("/experiment/controller", "rate")}, {}};
  return defs;
}

}  // namespace expbatch::project
