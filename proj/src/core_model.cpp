#include "expbatch/core_model.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace expbatch {

namespace {

using nlohmann::json;

std::string pad4(int n) {
  std::ostringstream os;
  os.fill('0');
  os.width(4);
  os << n;
  return os.str();
}

json criteria_to_json(const CriteriaValue& v) {
  json j;
  j["label"] = v.label;
  if (v.scalar) j["scalar"] = *v.scalar;
  return j;
}

json transform_to_json(const xml::Transform& t) {
  json j;
  switch (t.kind) {
    case xml::Transform::Kind::SetAttr:
      j["kind"] = "set_attr";
      j["path"] = t.path.str();
      j["attr"] = t.attr;
      j["value"] = t.value;
      break;
    case xml::Transform::Kind::AddChild:
      j["kind"] = "add_child";
      j["parent_path"] = t.path.str();
      j["tag"] = t.tag;
      j["attrs"] = t.attrs;
      break;
    case xml::Transform::Kind::RemoveNode:
      j["kind"] = "remove_node";
      j["path"] = t.path.str();
      break;
  }
  return j;
}

const json& require_field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end())
    throw Error(ErrorKind::SchemaError,
                std::string("missing field '") + name + "'");
  return *it;
}

std::string require_string(const json& j, const char* name) {
  const json& f = require_field(j, name);
  if (!f.is_string())
    throw Error(ErrorKind::SchemaError,
                std::string("field '") + name + "' must be a string");
  return f.get<std::string>();
}

std::int64_t require_int(const json& j, const char* name) {
  const json& f = require_field(j, name);
  if (!f.is_number_integer())
    throw Error(ErrorKind::SchemaError,
                std::string("field '") + name + "' must be an integer");
  return f.get<std::int64_t>();
}

std::uint64_t parse_seed_string(const std::string& s, const char* name) {
  if (s.empty())
    throw Error(ErrorKind::SchemaError,
                std::string("field '") + name + "' is empty");
  std::uint64_t value = 0;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw Error(ErrorKind::SchemaError,
                  std::string("field '") + name + "' is not a decimal seed");
    std::uint64_t digit = static_cast<std::uint64_t>(c - '0');
    if (value > (UINT64_MAX - digit) / 10)
      throw Error(ErrorKind::SchemaError,
                  std::string("field '") + name + "' overflows 64 bits");
    value = value * 10 + digit;
  }
  return value;
}

CriteriaValue criteria_from_json(const json& j) {
  CriteriaValue v;
  v.label = require_string(j, "label");
  if (j.contains("scalar")) v.scalar = require_int(j, "scalar");
  return v;
}

xml::Transform transform_from_json(const json& j) {
  std::string kind = require_string(j, "kind");
  if (kind == "set_attr") {
    return xml::Transform::set_attr(
        xml::XmlPath::parse(require_string(j, "path")),
        require_string(j, "attr"), require_string(j, "value"));
  }
  if (kind == "add_child") {
    const json& attrs = require_field(j, "attrs");
    if (!attrs.is_object())
      throw Error(ErrorKind::SchemaError, "field 'attrs' must be an object");
    std::map<std::string, std::string> m;
    for (auto it = attrs.begin(); it != attrs.end(); ++it) {
      if (!it.value().is_string())
        throw Error(ErrorKind::SchemaError, "attr values must be strings");
      m[it.key()] = it.value().get<std::string>();
    }
    return xml::Transform::add_child(
        xml::XmlPath::parse(require_string(j, "parent_path")),
        require_string(j, "tag"), std::move(m));
  }
  if (kind == "remove_node") {
    return xml::Transform::remove_node(
        xml::XmlPath::parse(require_string(j, "path")));
  }
  throw Error(ErrorKind::SchemaError, "unknown transform kind '" + kind + "'");
}

}  // namespace

bool is_valid_label(const std::string& label) {
  if (label.empty()) return false;
  for (char c : label) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
      return false;
  }
  return true;
}

DirectoryLayout layout_for(const std::filesystem::path& batch_root) {
  if (batch_root.empty())
    throw Error(ErrorKind::InvalidPath, "batch root path is empty");
  DirectoryLayout layout;
  layout.batch_root = batch_root;
  layout.exp_input_root = batch_root / "exp-inputs";
  layout.exp_output_root = batch_root / "exp-outputs";
  layout.statistics_root = batch_root / "statistics";
  layout.deliverables_root = batch_root / "deliverables";
  return layout;
}

std::string experiment_dir_name(int index, const std::string& label) {
  return "exp-" + pad4(index) + "-" + label;
}

std::string run_input_name(int run_index) {
  return "run-" + pad4(run_index) + ".xml";
}

std::string run_dir_name(int run_index) { return "run-" + pad4(run_index); }

std::string manifest_to_json(const BatchManifest& m) {
  json j;
  j["query_text"] = m.query_text;
  j["variable_name"] = m.variable_name;
  j["template_path"] = m.template_path.string();
  j["runs_per_experiment"] = m.runs_per_experiment;
  j["base_seed"] = std::to_string(m.base_seed);
  j["platform_name"] = m.platform_name;
  j["values"] = json::array();
  for (const auto& v : m.values) j["values"].push_back(criteria_to_json(v));
  j["experiments"] = json::array();
  for (const auto& e : m.experiments) {
    json je;
    je["index"] = e.index;
    je["criteria_value"] = criteria_to_json(e.criteria_value);
    je["transforms"] = json::array();
    for (const auto& t : e.transforms)
      je["transforms"].push_back(transform_to_json(t));
    je["runs"] = json::array();
    for (const auto& r : e.runs) {
      json jr;
      jr["run_index"] = r.run_index;
      jr["seed"] = std::to_string(r.seed);
      jr["input_path"] = r.input_path.string();
      jr["output_dir"] = r.output_dir.string();
      je["runs"].push_back(std::move(jr));
    }
    j["experiments"].push_back(std::move(je));
  }
  return j.dump(2) + "\n";
}

BatchManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  if (!j.is_object())
    throw Error(ErrorKind::SchemaError, "manifest must be a JSON object");

  BatchManifest m;
  m.query_text = require_string(j, "query_text");
  m.variable_name = require_string(j, "variable_name");
  m.template_path = require_string(j, "template_path");
  m.runs_per_experiment =
      static_cast<int>(require_int(j, "runs_per_experiment"));
  m.base_seed = parse_seed_string(require_string(j, "base_seed"), "base_seed");
  m.platform_name = require_string(j, "platform_name");

  const json& values = require_field(j, "values");
  if (!values.is_array())
    throw Error(ErrorKind::SchemaError, "field 'values' must be an array");
  for (const auto& v : values) m.values.push_back(criteria_from_json(v));

  const json& experiments = require_field(j, "experiments");
  if (!experiments.is_array())
    throw Error(ErrorKind::SchemaError, "field 'experiments' must be an array");
  for (const auto& je : experiments) {
    ExperimentSpec e;
    e.index = static_cast<int>(require_int(je, "index"));
    e.criteria_value = criteria_from_json(require_field(je, "criteria_value"));
    const json& transforms = require_field(je, "transforms");
    if (!transforms.is_array())
      throw Error(ErrorKind::SchemaError, "field 'transforms' must be an array");
    for (const auto& jt : transforms)
      e.transforms.push_back(transform_from_json(jt));
    const json& runs = require_field(je, "runs");
    if (!runs.is_array())
      throw Error(ErrorKind::SchemaError, "field 'runs' must be an array");
    for (const auto& jr : runs) {
      RunSpec r;
      r.run_index = static_cast<int>(require_int(jr, "run_index"));
      r.seed = parse_seed_string(require_string(jr, "seed"), "seed");
      r.input_path = require_string(jr, "input_path");
      r.output_dir = require_string(jr, "output_dir");
      e.runs.push_back(std::move(r));
    }
    m.experiments.push_back(std::move(e));
  }

  check_manifest_invariants(m);
  return m;
}

void check_manifest_invariants(const BatchManifest& m) {
  auto bad = [](const std::string& why) -> Error {
    return Error(ErrorKind::InvariantError, why);
  };
  if (m.runs_per_experiment < 1) throw bad("runs_per_experiment must be >= 1");
  if (m.experiments.size() != m.values.size())
    throw bad("experiments.length (" + std::to_string(m.experiments.size()) +
              ") != values.length (" + std::to_string(m.values.size()) + ")");
  std::set<std::uint64_t> seeds;
  std::size_t total_runs = 0;
  for (std::size_t i = 0; i < m.experiments.size(); ++i) {
    const ExperimentSpec& e = m.experiments[i];
    if (e.index != static_cast<int>(i))
      throw bad("experiment at position " + std::to_string(i) +
                " has index " + std::to_string(e.index));
    if (!(e.criteria_value == m.values[i]))
      throw bad("experiment " + std::to_string(i) +
                " criteria value disagrees with the batch values list");
    if (!is_valid_label(e.criteria_value.label))
      throw bad("invalid criteria label '" + e.criteria_value.label + "'");
    if (e.runs.size() != static_cast<std::size_t>(m.runs_per_experiment))
      throw bad("experiment " + std::to_string(i) + " has " +
                std::to_string(e.runs.size()) + " runs, expected " +
                std::to_string(m.runs_per_experiment));
    for (std::size_t r = 0; r < e.runs.size(); ++r) {
      if (e.runs[r].run_index != static_cast<int>(r))
        throw bad("experiment " + std::to_string(i) + " run at position " +
                  std::to_string(r) + " has index " +
                  std::to_string(e.runs[r].run_index));
      seeds.insert(e.runs[r].seed);
      ++total_runs;
    }
  }
  if (seeds.size() != total_runs)
    throw bad("run seeds within the batch are not pairwise distinct");
}

std::filesystem::path write_manifest(const BatchManifest& manifest,
                                     const DirectoryLayout& layout) {
  std::filesystem::path path = layout.batch_root / "manifest.json";
  std::string body = manifest_to_json(manifest);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.close();
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
  return path;
}

BatchManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return manifest_from_json(buffer.str());
}

}  // namespace expbatch
