#include "expbatch/platform.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "expbatch/toml_lite.hpp"
#include "expbatch/xml.hpp"

namespace expbatch::platform {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

bool mentions_placeholder(const std::vector<std::string>& tmpl,
                          const std::string& token) {
  for (const auto& element : tmpl)
    if (element.find(token) != std::string::npos) return true;
  return false;
}

// Replaces every known {token}; any other {...} is an error.
std::string render_element(const std::string& element, const RunSpec& run,
                           const std::string& run_id) {
  std::string out;
  std::size_t pos = 0;
  while (pos < element.size()) {
    std::size_t open = element.find('{', pos);
    if (open == std::string::npos) {
      out += element.substr(pos);
      break;
    }
    std::size_t close = element.find('}', open);
    if (close == std::string::npos) {
      out += element.substr(pos);
      break;
    }
    out += element.substr(pos, open - pos);
    std::string token = element.substr(open + 1, close - open - 1);
    if (token == "input") {
      out += run.input_path.string();
    } else if (token == "output_dir") {
      out += run.output_dir.string();
    } else if (token == "seed") {
      out += std::to_string(run.seed);
    } else if (token == "run_id") {
      out += run_id;
    } else {
      throw Error(ErrorKind::UnknownPlaceholder,
                  "unsupported placeholder {" + token + "} in launch template");
    }
    pos = close + 1;
  }
  return out;
}

std::int64_t attr_as_int(const xml::XmlElement& el, const std::string& name,
                         const std::string& where) {
  const std::string* v = el.find_attr(name);
  if (!v)
    throw Error(ErrorKind::SchemaError, "missing attribute " + where);
  errno = 0;
  char* end = nullptr;
  long long n = std::strtoll(v->c_str(), &end, 10);
  if (errno != 0 || end == v->c_str() || *end != '\0')
    throw Error(ErrorKind::SchemaError,
                where + " is not an integer: '" + *v + "'");
  return n;
}

double attr_as_double(const xml::XmlElement& el, const std::string& name,
                      const std::string& where) {
  const std::string* v = el.find_attr(name);
  if (!v)
    throw Error(ErrorKind::SchemaError, "missing attribute " + where);
  errno = 0;
  char* end = nullptr;
  double d = std::strtod(v->c_str(), &end);
  if (errno != 0 || end == v->c_str() || *end != '\0')
    throw Error(ErrorKind::SchemaError,
                where + " is not a number: '" + *v + "'");
  return d;
}

const xml::XmlElement& single_child(const xml::XmlDoc& doc,
                                    const std::string& tag) {
  const xml::XmlElement* found = nullptr;
  for (const auto& child : doc.root.children) {
    if (child.tag != tag) continue;
    if (found)
      throw Error(ErrorKind::SchemaError,
                  "multiple /" + doc.root.tag + "/" + tag + " elements");
    found = &child;
  }
  if (!found)
    throw Error(ErrorKind::SchemaError,
                "missing /" + doc.root.tag + "/" + tag + " element");
  return *found;
}

}  // namespace

PlatformDef load_platform_manifest(const std::filesystem::path& path) {
  toml::Document doc = toml::Document::parse_file(path.string());

  PlatformDef def;
  auto name = doc.get_string("name");
  if (!name || name->empty())
    throw Error(ErrorKind::ParseError,
                path.string() + ": platform manifest needs a 'name'");
  def.name = *name;
  if (def.name == kMockPlatformName)
    throw Error(ErrorKind::ReservedName,
                "'mockplat' names the built-in platform and cannot be "
                "redefined");

  def.launch_template = doc.get_string_array("launch");
  if (def.launch_template.empty())
    throw Error(ErrorKind::ParseError,
                path.string() + ": platform manifest needs a 'launch' array");
  if (!mentions_placeholder(def.launch_template, "{input}"))
    throw Error(ErrorKind::MissingPlaceholder,
                "launch template never mentions {input}");

  def.expected_outputs = doc.get_string_array("expected_outputs");
  if (auto timeout = doc.get_integer("timeout")) {
    if (*timeout < 1)
      throw Error(ErrorKind::ParseError, "timeout must be positive");
    def.timeout_seconds = static_cast<int>(*timeout);
  }
  return def;
}

PlatformDef builtin_mockplat(const std::filesystem::path& self_exe) {
  PlatformDef def;
  def.name = kMockPlatformName;
  def.launch_template = {self_exe.string(), "mockplat", "--input", "{input}",
                         "--output-dir", "{output_dir}"};
  def.expected_outputs = {"blocks-collected.csv"};
  def.timeout_seconds = 3600;
  return def;
}

std::vector<std::string> render_launch_command(const PlatformDef& def,
                                               const RunSpec& run) {
  std::string run_id = "exp-run-" + std::to_string(run.run_index);
  std::vector<std::string> argv;
  argv.reserve(def.launch_template.size());
  for (const auto& element : def.launch_template)
    argv.push_back(render_element(element, run, run_id));
  return argv;
}

std::pair<PrngState, std::uint64_t> splitmix64_next(PrngState s) {
  s.state += kGolden;
  std::uint64_t z = s.state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return {s, z ^ (z >> 31)};
}

double unit_interval(std::uint64_t u) {
  return static_cast<double>(u >> 11) * 0x1.0p-53;
}

MockWorldConfig mock_config_from_xml(const xml::XmlDoc& doc) {
  if (doc.root.tag != "experiment")
    throw Error(ErrorKind::SchemaError,
                "mock platform inputs must be rooted at <experiment>, got <" +
                    doc.root.tag + ">");
  MockWorldConfig config;
  const std::string* seed = doc.root.find_attr("seed");
  if (!seed)
    throw Error(ErrorKind::SchemaError, "missing attribute /experiment@seed");
  errno = 0;
  char* end = nullptr;
  config.seed = std::strtoull(seed->c_str(), &end, 10);
  if (errno != 0 || end == seed->c_str() || *end != '\0')
    throw Error(ErrorKind::SchemaError,
                "/experiment@seed is not a decimal seed: '" + *seed + "'");

  config.population_size = attr_as_int(single_child(doc, "population"), "size",
                                       "/experiment/population@size");
  config.duration_ticks = attr_as_int(single_child(doc, "duration"), "ticks",
                                      "/experiment/duration@ticks");
  config.collect_rate = attr_as_double(single_child(doc, "controller"), "rate",
                                       "/experiment/controller@rate");

  if (config.population_size < 1)
    throw Error(ErrorKind::InvariantError, "population size must be >= 1");
  if (config.duration_ticks < 1)
    throw Error(ErrorKind::InvariantError, "duration ticks must be >= 1");
  if (config.collect_rate < 0.0 || config.collect_rate > 1.0)
    throw Error(ErrorKind::InvariantError, "collect rate must be in [0,1]");
  return config;
}

std::vector<std::pair<std::int64_t, std::int64_t>> mockplat_run(
    const MockWorldConfig& config) {
  std::vector<std::pair<std::int64_t, std::int64_t>> rows;
  rows.reserve(static_cast<std::size_t>(config.duration_ticks));
  PrngState prng{config.seed};
  std::int64_t cumulative = 0;
  for (std::int64_t tick = 1; tick <= config.duration_ticks; ++tick) {
    for (std::int64_t agent = 0; agent < config.population_size; ++agent) {
      auto [next, u] = splitmix64_next(prng);
      prng = next;
      if (unit_interval(u) < config.collect_rate) ++cumulative;
    }
    rows.emplace_back(tick, cumulative);
  }
  return rows;
}

void mockplat_simulate(const MockWorldConfig& config,
                       const std::filesystem::path& output_dir) {
  auto rows = mockplat_run(config);
  std::filesystem::path path = output_dir / "blocks-collected.csv";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << "tick,cumulative_blocks\n";
  for (const auto& [tick, cumulative] : rows)
    out << tick << ',' << cumulative << '\n';
  out.close();
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

int mockplat_main(const std::vector<std::string>& args) {
  std::string input;
  std::string output_dir;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--input" && i + 1 < args.size()) {
      input = args[++i];
    } else if (args[i] == "--output-dir" && i + 1 < args.size()) {
      output_dir = args[++i];
    } else {
      std::cerr << "mockplat: unknown argument '" << args[i] << "'\n";
      return 2;
    }
  }
  if (input.empty() || output_dir.empty()) {
    std::cerr << "usage: expbatch mockplat --input <xml> --output-dir <dir>\n";
    return 2;
  }
  try {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + input);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    xml::XmlDoc doc = xml::parse_xml(buffer.str());
    MockWorldConfig config = mock_config_from_xml(doc);
    std::filesystem::create_directories(output_dir);
    mockplat_simulate(config, output_dir);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "mockplat: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace expbatch::platform
