#include "expbatch/generator.hpp"

#include <fstream>
#include <sstream>

#include "expbatch/platform.hpp"

namespace expbatch::generator {

namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.close();
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

xml::XmlDoc apply_all(const xml::XmlDoc& doc,
                      const std::vector<xml::Transform>& transforms,
                      int exp_index) {
  xml::XmlDoc out = doc;
  for (const xml::Transform& t : transforms) {
    try {
      out = xml::apply_transform(out, t);
    } catch (const Error& e) {
      throw Error(e.kind(), "experiment " + std::to_string(exp_index) + ": " +
                                e.what());
    }
  }
  return out;
}

}  // namespace

std::uint64_t run_seed(std::uint64_t base_seed, std::uint64_t exp_index,
                       std::uint64_t run_index) {
  platform::PrngState state{base_seed ^
                            (exp_index * 0x9E3779B97F4A7C15ULL) ^
                            (run_index * 0xBF58476D1CE4E5B9ULL)};
  return platform::splitmix64_next(state).second;
}

BatchManifest generate_batch(const GenerationRequest& req) {
  if (req.runs_per_experiment < 1)
    throw Error(ErrorKind::InvariantError, "runs_per_experiment must be >= 1");

  const xml::XmlDoc tmpl = xml::parse_xml(read_file(req.template_path));
  const xml::XmlPath root_path = xml::XmlPath::parse("/" + tmpl.root.tag);

  fs::create_directories(req.layout.exp_input_root);
  fs::create_directories(req.layout.exp_output_root);

  BatchManifest manifest;
  manifest.query_text = query::render_query(req.bound.query);
  manifest.variable_name = req.bound.query.variable_name;
  manifest.template_path = req.template_path;
  manifest.runs_per_experiment = req.runs_per_experiment;
  manifest.base_seed = req.base_seed;
  manifest.platform_name = req.platform_name;

  for (std::size_t i = 0; i < req.bound.per_value_transforms.size(); ++i) {
    const auto& [value, transforms] = req.bound.per_value_transforms[i];
    const int exp_index = static_cast<int>(i);
    manifest.values.push_back(value);

    xml::XmlDoc exp_doc = apply_all(tmpl, req.batch_transforms, exp_index);
    exp_doc = apply_all(exp_doc, transforms, exp_index);

    const std::string dir_name = experiment_dir_name(exp_index, value.label);
    const fs::path input_dir = req.layout.exp_input_root / dir_name;
    const fs::path output_dir = req.layout.exp_output_root / dir_name;
    fs::create_directories(input_dir);
    fs::create_directories(output_dir);

    ExperimentSpec exp;
    exp.index = exp_index;
    exp.criteria_value = value;
    exp.transforms = transforms;

    for (int r = 0; r < req.runs_per_experiment; ++r) {
      const std::uint64_t seed =
          run_seed(req.base_seed, static_cast<std::uint64_t>(exp_index),
                   static_cast<std::uint64_t>(r));
      xml::XmlDoc run_doc = xml::apply_transform(
          exp_doc,
          xml::Transform::set_attr(root_path, "seed", std::to_string(seed)));

      RunSpec run;
      run.run_index = r;
      run.seed = seed;
      run.input_path = input_dir / run_input_name(r);
      run.output_dir = output_dir / run_dir_name(r);
      fs::create_directories(run.output_dir);
      write_file(run.input_path, xml::serialize_xml(run_doc));
      exp.runs.push_back(std::move(run));
    }
    manifest.experiments.push_back(std::move(exp));
  }

  check_manifest_invariants(manifest);
  write_manifest(manifest, req.layout);
  return manifest;
}

}  // namespace expbatch::generator
