#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "f2l/config.hpp"
#include "f2l/eval.hpp"
#include "f2l/experiment.hpp"
#include "f2l/io.hpp"

using namespace f2l;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny(const fs::path& out) {
  ExperimentConfig c;
  c.data.per_class = 60;
  c.train.num_clients = 2;
  c.train.rounds = 2;
  c.train.local_steps = 1;
  c.train.hidden_dim = 8;
  c.train.val_tasks = 3;
  c.train.eval_every = 1;
  c.train.seed = 3;
  c.repetitions = 2;
  c.test_tasks = 4;
  c.output_dir = out.string();
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("f2l_unit_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

}  // namespace

TEST_CASE("client sweep over six values gives six summary rows") {
  const fs::path out = scratch("sweep");
  ExperimentConfig c = tiny(out);
  c.repetitions = 1;
  c.data.per_class = 100;
  const auto variants = sweep_variants(c, "clients", {"1", "2", "5", "10", "20", "50"});
  REQUIRE(variants.size() == 6);
  for (const auto& v : variants) CHECK(v.config.data.per_class == 100);
  run_experiment(c, variants);
  const auto rows = lines(read_file(out / "summary.csv"));
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == "method,setting,repetitions,mean,std");
  CHECK(fields(rows[1])[1] == "clients=1");
  CHECK(fields(rows[6])[1] == "clients=50");
  fs::remove_all(out);
}

TEST_CASE("ablation gives one row per variant") {
  const fs::path out = scratch("ablate");
  const ExperimentConfig c = tiny(out);
  run_experiment(c, ablation_variants(c));
  const auto rows = lines(read_file(out / "summary.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(fields(rows[1])[0] == "f2l");
  CHECK(fields(rows[2])[0] == "f2l\\M");
  CHECK(fields(rows[3])[0] == "f2l\\T");
  CHECK(fields(rows[4])[0] == "f2l\\A");
  fs::remove_all(out);
}

TEST_CASE("rerunning with the same config is byte-identical") {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  run_experiment(tiny(a), run_variants(tiny(a)));
  run_experiment(tiny(b), run_variants(tiny(b)));
  for (const char* rel : {"f2l/rep_0/metrics.csv", "f2l/rep_1/metrics.csv", "f2l/rep_1/eval.csv",
                          "f2l/rep_0/checkpoint_server.bin", "f2l/rep_0/checkpoint_client_1.bin",
                          "summary.csv"})
    CHECK_MESSAGE(read_file(a / rel) == read_file(b / rel), rel);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("summary equals a recomputation from the per-task rows") {
  const fs::path out = scratch("summary");
  const ExperimentConfig c = tiny(out);
  run_experiment(c, run_variants(c));
  std::vector<double> rep_means;
  for (std::size_t r = 0; r < c.repetitions; ++r) {
    const auto rows = lines(read_file(out / "f2l" / ("rep_" + std::to_string(r)) / "eval.csv"));
    REQUIRE(rows.size() == c.test_tasks + 1);
    double sum = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) sum += std::stod(fields(rows[i])[2]);
    rep_means.push_back(sum / static_cast<double>(c.test_tasks));
  }
  const double mean = (rep_means[0] + rep_means[1]) / 2.0;
  const double std = std::abs(rep_means[0] - rep_means[1]) / std::sqrt(2.0);
  const auto row = fields(lines(read_file(out / "summary.csv"))[1]);
  CHECK(std::stod(row[3]) == doctest::Approx(mean).epsilon(1e-12));
  CHECK(std::stod(row[4]) == doctest::Approx(std).epsilon(1e-9).scale(1e-12));
  fs::remove_all(out);
}

TEST_CASE("outputs leave no temporary files behind") {
  const fs::path out = scratch("atomic");
  const ExperimentConfig c = tiny(out);
  run_experiment(c, run_variants(c));
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file()) continue;
    ++files;
    CHECK(e.path().extension() != ".tmp");
  }
  CHECK(files > 0);
  CHECK(parse_config(out / "config.ini").train.rounds == 2);
  fs::remove_all(out);
}

TEST_CASE("checkpoints reload into the same test scores") {
  const fs::path out = scratch("reload");
  ExperimentConfig c = tiny(out);
  c.repetitions = 1;
  const auto outcome = run_experiment(c, run_variants(c));
  const std::uint64_t rep = repetition_seed(c.train.seed, 0);
  const PreparedData p = prepare_data(c, rep);
  const ModelSnapshot s = load_snapshot(c.train.method, out / "f2l" / "rep_0");
  const EvalReport r = meta_test(s, p.data, p.views, test_settings(c, rep));
  CHECK(r.accuracies == outcome[0].tests[0].accuracies);
  CHECK(std::isnan(outcome[0].std));
  fs::remove_all(out);
}

TEST_CASE("the same master seed gives the same data for every method") {
  ExperimentConfig c = tiny("unused");
  const auto variants = baseline_variants(c, {Method::local, Method::fl_maml, Method::fl_proto});
  REQUIRE(variants.size() == 3);
  const std::uint64_t rep = repetition_seed(c.train.seed, 1);
  const std::string reference = partition_report_csv(prepare_data(variants[0].config, rep));
  for (const auto& v : variants) CHECK(partition_report_csv(prepare_data(v.config, rep)) == reference);
}
