#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "expbatch/stats.hpp"
#include "test_util.hpp"

using namespace expbatch;
using namespace expbatch::stats;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::IoError;
}

RunResultTensor tensor_from(const std::vector<std::vector<double>>& runs,
                            std::size_t rows, std::size_t cols) {
  RunResultTensor t;
  t.output_name = "out.csv";
  t.rows = rows;
  t.cols = cols;
  for (std::size_t c = 0; c < cols; ++c)
    t.column_names.push_back("c" + std::to_string(c));
  t.runs = runs;
  return t;
}

RunResultTensor random_tensor(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> value(0.0, 100.0);
  std::size_t rows = 1 + rng() % 10;
  std::size_t cols = 1 + rng() % 10;
  std::size_t k = 1 + rng() % 8;
  std::vector<std::vector<double>> runs(k);
  for (auto& run : runs) {
    run.resize(rows * cols);
    for (double& v : run) v = value(rng);
  }
  return tensor_from(runs, rows, cols);
}

// Independent recomputation: long double accumulation, sort-based extrema.
void check_against_naive(const RunResultTensor& t, const StatsBundle& b) {
  const std::size_t k = t.runs.size();
  for (std::size_t cell = 0; cell < t.rows * t.cols; ++cell) {
    std::vector<double> samples;
    for (const auto& run : t.runs) samples.push_back(run[cell]);
    std::sort(samples.begin(), samples.end());

    long double sum = 0.0L;
    for (double v : samples) sum += v;
    long double mean = sum / static_cast<long double>(k);
    long double sq = 0.0L;
    for (double v : samples) sq += (v - mean) * (v - mean);
    long double stddev =
        k > 1 ? sqrtl(sq / static_cast<long double>(k - 1)) : 0.0L;
    long double ci = 1.96L * stddev / sqrtl(static_cast<long double>(k));

    REQUIRE(std::abs(b.mean[cell] - static_cast<double>(mean)) < 1e-12);
    REQUIRE(std::abs(b.stddev[cell] - static_cast<double>(stddev)) < 1e-12);
    REQUIRE(b.min[cell] == samples.front());
    REQUIRE(b.max[cell] == samples.back());
    REQUIRE(std::abs(b.ci95_half[cell] - static_cast<double>(ci)) < 1e-12);
  }
}

// A 2-experiment manifest shell for collate tests.
BatchManifest small_manifest(int experiments) {
  BatchManifest m;
  m.query_text = "v.Log2";
  m.variable_name = "v";
  m.template_path = "/t";
  m.runs_per_experiment = 1;
  m.platform_name = "mockplat";
  std::uint64_t seed = 1;
  for (int i = 0; i < experiments; ++i) {
    CriteriaValue value{std::to_string(1 << i), 1 << i};
    m.values.push_back(value);
    ExperimentSpec exp;
    exp.index = i;
    exp.criteria_value = value;
    RunSpec run;
    run.run_index = 0;
    run.seed = seed++;
    exp.runs.push_back(run);
    m.experiments.push_back(exp);
  }
  return m;
}

}  // namespace

TEST_CASE("hand-computed cell: [1,2,3]") {
  auto t = tensor_from({{1.0}, {2.0}, {3.0}}, 1, 1);
  StatsBundle b = compute_cell_stats(t);
  CHECK(b.mean[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(b.stddev[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.min[0] == 1.0);
  CHECK(b.max[0] == 3.0);
  // 1.96 / sqrt(3)
  CHECK(b.ci95_half[0] == doctest::Approx(1.1316).epsilon(1e-4));
  CHECK(b.ci95_half[0] ==
        doctest::Approx(1.96 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("single run: stddev and ci are zero") {
  auto t = tensor_from({{5.0}}, 1, 1);
  StatsBundle b = compute_cell_stats(t);
  CHECK(b.mean[0] == 5.0);
  CHECK(b.stddev[0] == 0.0);
  CHECK(b.ci95_half[0] == 0.0);
}

TEST_CASE("constant data collapses") {
  auto t = tensor_from({{4.0}, {4.0}, {4.0}, {4.0}}, 1, 1);
  StatsBundle b = compute_cell_stats(t);
  CHECK(b.stddev[0] == 0.0);
  CHECK(b.min[0] == 4.0);
  CHECK(b.max[0] == 4.0);
  CHECK(b.mean[0] == 4.0);
}

TEST_CASE("oracle equivalence on 200 random tensors") {
  std::mt19937_64 rng(20260810);
  for (int i = 0; i < 200; ++i) {
    RunResultTensor t = random_tensor(rng);
    check_against_naive(t, compute_cell_stats(t));
  }
}

TEST_CASE("permutation invariance and ordering invariants") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 20; ++i) {
    RunResultTensor t = random_tensor(rng);
    StatsBundle b = compute_cell_stats(t);

    RunResultTensor shuffled = t;
    std::shuffle(shuffled.runs.begin(), shuffled.runs.end(), rng);
    StatsBundle b2 = compute_cell_stats(shuffled);
    for (std::size_t cell = 0; cell < t.rows * t.cols; ++cell) {
      REQUIRE(b.mean[cell] == doctest::Approx(b2.mean[cell]).epsilon(1e-12));
      REQUIRE(b.stddev[cell] ==
              doctest::Approx(b2.stddev[cell]).epsilon(1e-12));
      REQUIRE(b.min[cell] == b2.min[cell]);
      REQUIRE(b.max[cell] == b2.max[cell]);

      // min <= mean <= max; spreads nonnegative.
      REQUIRE(b.min[cell] <= b.mean[cell]);
      REQUIRE(b.mean[cell] <= b.max[cell]);
      REQUIRE(b.stddev[cell] >= 0.0);
      REQUIRE(b.ci95_half[cell] >= 0.0);

      // Sum identity.
      long double sum = 0.0L;
      for (const auto& run : t.runs) sum += run[cell];
      REQUIRE(std::abs(b.mean[cell] * static_cast<double>(t.runs.size()) -
                       static_cast<double>(sum)) <=
              1e-9 * std::max(1.0, std::abs(static_cast<double>(sum))));
    }
  }
}

TEST_CASE("reducers") {
  // Two columns, three rows, two runs.
  auto t = tensor_from(
      {{1, 10, 2, 20, 3, 30}, {3, 20, 4, 40, 5, 70}}, 3, 2);
  StatsBundle b = compute_cell_stats(t);

  Reducer final_row{Reducer::Kind::FinalRow, "c1"};
  auto [v1, s1] = reduce_experiment(b, final_row);
  CHECK(v1 == doctest::Approx(50.0));  // mean of 30, 70

  Reducer mean_over_time{Reducer::Kind::MeanOverTime, "c1"};
  auto [v2, s2] = reduce_experiment(b, mean_over_time);
  CHECK(v2 == doctest::Approx((15.0 + 30.0 + 50.0) / 3.0));

  Reducer max_over_time{Reducer::Kind::MaxOverTime, "c1"};
  auto [v3, s3] = reduce_experiment(b, max_over_time);
  CHECK(v3 == doctest::Approx(50.0));

  Reducer unknown{Reducer::Kind::FinalRow, "zz"};
  CHECK(kind_of([&] { reduce_experiment(b, unknown); }) ==
        ErrorKind::UnknownColumn);
}

TEST_CASE("mean_over_time on constant data is the constant") {
  auto t = tensor_from({{7, 7, 7}, {7, 7, 7}}, 3, 1);
  StatsBundle b = compute_cell_stats(t);
  auto [v, s] = reduce_experiment(b, {Reducer::Kind::MeanOverTime, "c0"});
  CHECK(v == doctest::Approx(7.0));
  CHECK(s == doctest::Approx(0.0));
}

TEST_CASE("reducer spec parsing") {
  Reducer r = Reducer::parse("final_row:cumulative_blocks");
  CHECK(r.kind == Reducer::Kind::FinalRow);
  CHECK(r.column == "cumulative_blocks");
  CHECK(Reducer::parse("mean_over_time").column.empty());
  CHECK(kind_of([] { Reducer::parse("median:x"); }) == ErrorKind::UsageError);
}

TEST_CASE("collate_batch orders rows by experiment") {
  BatchManifest m = small_manifest(4);
  std::vector<std::pair<double, double>> per_exp{
      {1.0, 0.1}, {2.0, 0.2}, {4.0, 0.4}, {8.0, 0.8}};
  BatchSummaryTable table =
      collate_batch(m, per_exp, {Reducer::Kind::FinalRow, "x"}, "x");
  REQUIRE(table.criteria.size() == 4);
  CHECK(table.criteria[0].label == "1");
  CHECK(table.criteria[3].label == "8");
  CHECK(table.values == std::vector<double>{1.0, 2.0, 4.0, 8.0});

  CHECK(kind_of([&] {
          collate_batch(m, {{1.0, 0.0}}, {Reducer::Kind::FinalRow, "x"}, "x");
        }) == ErrorKind::LengthMismatch);

  BatchSummaryTable one = collate_batch(small_manifest(1), {{5.0, 0.5}},
                                        {Reducer::Kind::FinalRow, "x"}, "x");
  CHECK(one.criteria.size() == 1);
}

TEST_CASE("summary csv round trip") {
  testutil::TempDir tmp("summary");
  BatchSummaryTable table;
  table.reducer_name = "final_row";
  table.column_name = "cumulative_blocks";
  table.criteria = {{"1", 1}, {"2", 2}, {"4", 4}, {"8", 8}};
  table.values = {5.25, 10.5, 20.125, 40.0625};
  table.spreads = {0.5, 1.0, 2.0, 4.0};
  auto path = write_summary_csv(table, tmp.path);
  CHECK(path.filename() == "summary-final_row-cumulative_blocks.csv");

  std::string body = testutil::read_file(path);
  CHECK(body.rfind("criteria,value,spread\n", 0) == 0);

  BatchSummaryTable back = read_summary_csv(path);
  CHECK(back.reducer_name == "final_row");
  CHECK(back.column_name == "cumulative_blocks");
  REQUIRE(back.values.size() == 4);
  CHECK(back.values[2] == doctest::Approx(20.125).epsilon(1e-9));
  REQUIRE(back.criteria[3].scalar.has_value());
  CHECK(*back.criteria[3].scalar == 8);
}

TEST_CASE("load_run_outputs assembles tensors from ok runs") {
  testutil::TempDir tmp("load");
  auto exp_dir = tmp.path / "exp-0000-1";
  std::vector<executor::RunOutcome> outcomes;
  for (int r = 0; r < 5; ++r) {
    auto run_dir = exp_dir / run_dir_name(r);
    std::filesystem::create_directories(run_dir);
    testutil::write_file(run_dir / "out.csv",
                         "tick,v\n1," + std::to_string(r) + "\n2," +
                             std::to_string(r * 2) + "\n");
    executor::RunOutcome o;
    o.exp_index = 0;
    o.run_index = r;
    o.exit_code = 0;
    o.status = executor::RunStatus::Ok;
    outcomes.push_back(o);
  }
  ExpOutputs loaded = load_run_outputs(exp_dir, outcomes, 0, {"out.csv"});
  REQUIRE(loaded.tensors.count("out.csv") == 1);
  const RunResultTensor& t = loaded.tensors.at("out.csv");
  CHECK(t.runs.size() == 5);
  CHECK(t.rows == 2);
  CHECK(t.cols == 2);
  CHECK(loaded.skipped_runs.empty());

  SUBCASE("failed runs are excluded") {
    outcomes[2].status = executor::RunStatus::Failed;
    ExpOutputs partial = load_run_outputs(exp_dir, outcomes, 0, {"out.csv"});
    CHECK(partial.tensors.at("out.csv").runs.size() == 4);
    CHECK(partial.skipped_runs == std::vector<int>{2});
  }

  SUBCASE("shape mismatch names the offending run") {
    testutil::write_file(exp_dir / run_dir_name(3) / "out.csv",
                         "tick,v\n1,1\n");
    try {
      load_run_outputs(exp_dir, outcomes, 0, {"out.csv"});
      FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ShapeMismatch);
      CHECK(std::string(e.what()).find("run-0003") != std::string::npos);
    }
  }

  SUBCASE("missing output file") {
    std::filesystem::remove(exp_dir / run_dir_name(4) / "out.csv");
    CHECK(kind_of([&] { load_run_outputs(exp_dir, outcomes, 0, {"out.csv"}); }) ==
          ErrorKind::MissingOutput);
  }

  SUBCASE("all runs failed") {
    for (auto& o : outcomes) o.status = executor::RunStatus::Failed;
    CHECK(kind_of([&] { load_run_outputs(exp_dir, outcomes, 0, {"out.csv"}); }) ==
          ErrorKind::NoSuccessfulRuns);
  }

  SUBCASE("min_successful threshold") {
    outcomes[0].status = executor::RunStatus::Failed;
    CHECK(kind_of([&] {
            load_run_outputs(exp_dir, outcomes, 0, {"out.csv"}, 5);
          }) == ErrorKind::NoSuccessfulRuns);
  }
}

TEST_CASE("stats csv files carry the source header and 9 digits") {
  testutil::TempDir tmp("statscsv");
  RunResultTensor t = tensor_from({{1.0 / 3.0, 1}, {2.0 / 3.0, 2}}, 1, 2);
  t.column_names = {"tick", "cumulative_blocks"};
  t.output_name = "blocks-collected.csv";
  StatsBundle b = compute_cell_stats(t);
  auto paths = write_stats_csvs(b, "blocks-collected.csv", tmp.path);
  REQUIRE(paths.size() == 5);
  CHECK(paths[0].filename() == "blocks-collected.mean.csv");
  std::string mean = testutil::read_file(paths[0]);
  CHECK(mean == "tick,cumulative_blocks\n0.5,1.5\n");
  std::string stddev = testutil::read_file(paths[1]);
  // sample stddev of {1/3, 2/3} = 1/(3*sqrt(2)) = 0.235702260...
  CHECK(stddev.find("0.23570226") != std::string::npos);
}
