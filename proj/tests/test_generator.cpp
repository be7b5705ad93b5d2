#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "expbatch/generator.hpp"
#include "expbatch/project.hpp"
#include "test_util.hpp"

using namespace expbatch;
using namespace expbatch::generator;

namespace {

GenerationRequest demo_request(const std::filesystem::path& root,
                               const std::filesystem::path& template_path,
                               const std::string& query_text, int runs,
                               std::uint64_t seed) {
  GenerationRequest req;
  req.template_path = template_path;
  req.bound = query::bind_variable(query::parse_query(query_text),
                                   project::builtin_mock_variables());
  req.runs_per_experiment = runs;
  req.base_seed = seed;
  req.layout = layout_for(root);
  req.platform_name = "mockplat";
  return req;
}

std::map<std::filesystem::path, std::string> snapshot_tree(
    const std::filesystem::path& root) {
  std::map<std::filesystem::path, std::string> files;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file())
      files[std::filesystem::relative(entry.path(), root)] =
          testutil::read_file(entry.path());
  }
  return files;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> lines;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("run_seed matches the splitmix64 oracle and is deterministic") {
  CHECK(run_seed(0, 0, 0) == 0xE220A8397B1DCDAFULL);
  CHECK(run_seed(123, 4, 5) == run_seed(123, 4, 5));
  CHECK(run_seed(123, 4, 5) != run_seed(123, 5, 4));
}

TEST_CASE("run_seed grid of 20 is pairwise distinct") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t e = 0; e < 4; ++e)
    for (std::uint64_t r = 0; r < 5; ++r) seeds.insert(run_seed(42, e, r));
  CHECK(seeds.size() == 20);
}

TEST_CASE("generate_batch writes the full tree") {
  testutil::TempDir tmp("gen");
  auto template_path = tmp.path / "template.xml";
  testutil::write_file(template_path, testutil::kMockTemplate);
  auto root = tmp.path / "batch";

  BatchManifest manifest = generate_batch(
      demo_request(root, template_path, "population_size.Log8", 5, 42));

  CHECK(manifest.experiments.size() == 4);
  int files = 0;
  for (const auto& exp : manifest.experiments) {
    for (const auto& run : exp.runs) {
      CHECK(std::filesystem::exists(run.input_path));
      CHECK(std::filesystem::is_directory(run.output_dir));
      ++files;
    }
  }
  CHECK(files == 20);
  CHECK(std::filesystem::exists(root / "manifest.json"));

  // Directory naming.
  CHECK(std::filesystem::is_directory(root / "exp-inputs" / "exp-0003-8"));
  CHECK(std::filesystem::exists(root / "exp-inputs" / "exp-0000-1" /
                                "run-0004.xml"));

  // Value-specific change landed: experiment 3 has size="8".
  std::string input = testutil::read_file(root / "exp-inputs" / "exp-0003-8" /
                                          "run-0000.xml");
  CHECK(input.find("size=\"8\"") != std::string::npos);
  // Seed attribute injected on the root element.
  CHECK(input.find("seed=\"") != std::string::npos);
}

TEST_CASE("minimal batch: one value, one run") {
  testutil::TempDir tmp("gen1");
  auto template_path = tmp.path / "t.xml";
  testutil::write_file(template_path, testutil::kMockTemplate);
  BatchManifest manifest = generate_batch(
      demo_request(tmp.path / "b", template_path, "population_size.Log1", 1, 7));
  CHECK(manifest.experiments.size() == 1);
  CHECK(manifest.experiments[0].runs.size() == 1);
}

TEST_CASE("regeneration is byte-identical") {
  testutil::TempDir tmp("idem");
  auto template_path = tmp.path / "t.xml";
  testutil::write_file(template_path, testutil::kMockTemplate);
  auto root = tmp.path / "b";
  auto req = demo_request(root, template_path, "population_size.Log8", 3, 42);

  generate_batch(req);
  auto first = snapshot_tree(root);
  generate_batch(req);
  auto second = snapshot_tree(root);
  CHECK(first == second);
  CHECK_FALSE(first.empty());
}

TEST_CASE("within an experiment runs differ only in the seed line") {
  testutil::TempDir tmp("diff");
  auto template_path = tmp.path / "t.xml";
  testutil::write_file(template_path, testutil::kMockTemplate);
  auto root = tmp.path / "b";
  generate_batch(demo_request(root, template_path, "population_size.Log4", 3, 9));

  auto a = split_lines(testutil::read_file(root / "exp-inputs" / "exp-0001-2" /
                                           "run-0000.xml"));
  auto b = split_lines(testutil::read_file(root / "exp-inputs" / "exp-0001-2" /
                                           "run-0002.xml"));
  REQUIRE(a.size() == b.size());
  int differing = 0;
  std::size_t where = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) {
      ++differing;
      where = i;
    }
  }
  CHECK(differing == 1);
  CHECK(a[where].find("seed=\"") != std::string::npos);
}

TEST_CASE("experiments differ from the baseline by their value transforms") {
  testutil::TempDir tmp("crossdiff");
  auto template_path = tmp.path / "t.xml";
  testutil::write_file(template_path, testutil::kMockTemplate);
  auto root = tmp.path / "b";
  auto req = demo_request(root, template_path, "population_size.Log4", 1, 11);
  BatchManifest manifest = generate_batch(req);

  // Rebuild each expected input independently from the template.
  xml::XmlDoc tmpl = xml::parse_xml(testutil::read_file(template_path));
  for (const auto& exp : manifest.experiments) {
    xml::XmlDoc expected = tmpl;
    for (const auto& t : exp.transforms)
      expected = xml::apply_transform(expected, t);
    expected = xml::apply_transform(
        expected, xml::Transform::set_attr(xml::XmlPath::parse("/experiment"),
                                           "seed",
                                           std::to_string(exp.runs[0].seed)));
    CHECK(xml::serialize_xml(expected) ==
          testutil::read_file(exp.runs[0].input_path));
  }
}

TEST_CASE("batch transforms apply uniformly before value transforms") {
  testutil::TempDir tmp("batcht");
  auto template_path = tmp.path / "t.xml";
  testutil::write_file(template_path, testutil::kMockTemplate);
  auto req =
      demo_request(tmp.path / "b", template_path, "population_size.Log2", 1, 3);
  req.batch_transforms.push_back(xml::Transform::set_attr(
      xml::XmlPath::parse("/experiment/duration"), "ticks", "7"));
  BatchManifest manifest = generate_batch(req);
  for (const auto& exp : manifest.experiments) {
    std::string input = testutil::read_file(exp.runs[0].input_path);
    CHECK(input.find("ticks=\"7\"") != std::string::npos);
  }
}

TEST_CASE("transform failures carry the experiment index") {
  testutil::TempDir tmp("genfail");
  auto template_path = tmp.path / "t.xml";
  testutil::write_file(template_path, testutil::kMockTemplate);
  auto req =
      demo_request(tmp.path / "b", template_path, "population_size.Log2", 1, 3);
  req.batch_transforms.push_back(xml::Transform::set_attr(
      xml::XmlPath::parse("/experiment/nonexistent"), "x", "1"));
  try {
    generate_batch(req);
    FAIL("expected NoMatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoMatch);
    CHECK(std::string(e.what()).find("experiment 0") != std::string::npos);
  }
}
