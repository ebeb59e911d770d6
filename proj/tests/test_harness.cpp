#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "sknn/error.hpp"
#include "sknn/harness.hpp"

using namespace sknn;
using namespace sknn::testing;

namespace {

std::vector<std::vector<std::string>> one_seq(std::vector<std::string> tags) { return {std::move(tags)}; }

ExperimentConfig text_experiment() {
  ExperimentConfig cfg;
  cfg.task = Task::Labelling;
  cfg.format = DataFormat::SyntheticText;
  cfg.text.labels = 4;
  cfg.text.vocab = 4;
  cfg.text.per_label = 30;
  cfg.text.seed = 3;
  cfg.test_fraction = 0.25;
  cfg.metrics = {MetricSpec::parse("overlap"), MetricSpec::parse("mvdm")};
  cfg.windows = {0, 1};
  cfg.query = {1, false};
  cfg.seed = 3;
  return cfg;
}

ExperimentConfig trajectory_experiment() {
  ExperimentConfig cfg;
  cfg.task = Task::Classification;
  cfg.format = DataFormat::SyntheticTrajectories;
  cfg.trajectories = {3, 10, 0.0, 7};
  cfg.test_per_class = 5;
  cfg.metrics = {MetricSpec::parse("normalized-euclidean")};
  cfg.query = {1, false};
  ClusteringConfig cc;
  cc.method = KMedoids{4};
  cfg.clustering = cc;
  return cfg;
}

}  // namespace

TEST_CASE("token accuracy counts matching positions") {
  std::vector<std::vector<std::string>> gold{{"A", "B", "A", "B", "A"}, {"B", "B", "A", "A", "A"}};
  std::vector<std::vector<std::string>> pred{{"A", "B", "A", "A", "A"}, {"B", "A", "B", "A", "A"}};
  auto r = evaluate_labelling(pred, gold);
  CHECK(r.total == 10);
  CHECK(r.correct == 7);
  CHECK(r.token_accuracy == doctest::Approx(0.7));
  CHECK(*r.sequence_accuracy == 0.0);
  CHECK_FALSE(r.chunk_f1);
  REQUIRE(r.names == std::vector<std::string>{"A", "B"});
  CHECK(r.confusion[0][0] == 5);
  CHECK(r.confusion[1][0] == 2);
  CHECK(r.confusion[0][1] == 1);
  CHECK(r.per_label[1].recall == doctest::Approx(2.0 / 4.0));
  CHECK(r.per_label[1].precision == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("classification accuracy") {
  std::vector<std::string> gold, pred;
  for (int i = 0; i < 40; ++i) {
    gold.push_back(std::to_string(i % 10));
    pred.push_back(i < 37 ? gold.back() : "x");
  }
  auto r = evaluate_classification(pred, gold);
  CHECK(r.token_accuracy == doctest::Approx(0.925));
  CHECK(*r.sequence_accuracy == doctest::Approx(0.925));

  std::mt19937_64 rng(1);
  std::vector<std::string> big_gold, big_pred;
  for (int i = 0; i < 20000; ++i) {
    big_gold.push_back(std::to_string(rng() % 10));
    big_pred.push_back(std::to_string(rng() % 10));
  }
  CHECK(evaluate_classification(big_pred, big_gold).token_accuracy == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("shape mismatches are rejected") {
  CHECK_THROWS_AS(evaluate_classification({"a"}, {"a", "b"}), Error);
  try {
    evaluate_labelling({{"A"}, {"B"}}, {{"A"}, {"B", "C"}});
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
  CHECK_THROWS_AS(evaluate_labelling({{"A"}}, {{"A"}, {"B"}}), Error);
}

TEST_CASE("chunk F1 follows conlleval") {
  auto gold = one_seq({"B-NP", "I-NP", "O", "B-VP"});
  auto pred = one_seq({"B-NP", "O", "O", "B-VP"});
  CHECK(chunk_f1(pred, gold) == doctest::Approx(0.5));
  CHECK(chunk_f1(gold, gold) == 1.0);
  // An I- tag after O opens a new chunk.
  CHECK(chunk_f1(one_seq({"O", "I-NP"}), one_seq({"O", "B-NP"})) == 1.0);
  CHECK(chunk_f1(one_seq({"I-NP", "I-VP"}), one_seq({"B-NP", "B-VP"})) == 1.0);
  CHECK(chunk_f1(one_seq({"O", "O"}), one_seq({"O", "O"})) == 1.0);
  CHECK(chunk_f1(one_seq({"O", "O"}), one_seq({"B-NP", "O"})) == 0.0);
  auto r = evaluate_labelling(pred, gold);
  REQUIRE(r.chunk_f1);
  CHECK(*r.chunk_f1 == doctest::Approx(0.5));
}

TEST_CASE("label-determined tagged text is labelled perfectly") {
  auto result = run_experiment(text_experiment());
  REQUIRE(result.cells.size() == 4);
  CHECK(result.cells[0].metric == "overlap");
  CHECK(result.cells[1].window == 1);
  CHECK(result.cells[2].metric == "mvdm");
  for (const auto& c : result.cells) {
    CAPTURE(c.metric);
    CAPTURE(c.window);
    // Context columns can outvote the word itself under unweighted overlap,
    // so the exact result is only guaranteed without a window.
    if (c.window == 0) CHECK(c.report.token_accuracy == 1.0);
    CHECK(c.report.token_accuracy >= 0.9);
    CHECK(c.report.infeasible == 0);
    CHECK(c.report.ndist_evaluations == c.report.ndist_expected);
    CHECK(c.report.ndist_expected > 0);
  }
  std::ostringstream out;
  print_report(out, result);
  CHECK(out.str().find("mvdm") != std::string::npos);
}

TEST_CASE("noise-free trajectories classify perfectly end to end") {
  auto result = run_experiment(trajectory_experiment());
  REQUIRE(result.cells.size() == 1);
  CHECK(result.cells[0].report.total == 15);
  CHECK(result.cells[0].report.token_accuracy == 1.0);
}

TEST_CASE("manifests are identical across reruns and thread counts") {
  auto dir = std::filesystem::temp_directory_path();
  auto cfg = text_experiment();
  cfg.manifest = dir / "sknn_manifest_a.jsonl";
  cfg.threads = 1;
  auto a = run_experiment(cfg);
  cfg.manifest = dir / "sknn_manifest_b.jsonl";
  cfg.threads = 3;
  auto b = run_experiment(cfg);
  CHECK(a.manifest == b.manifest);
  CHECK(read_text_file(dir / "sknn_manifest_a.jsonl") == read_text_file(dir / "sknn_manifest_b.jsonl"));
  REQUIRE(a.manifest.size() == 5);
  auto run = nlohmann::json::parse(a.manifest[0]);
  CHECK(run["record"] == "run");
  CHECK(run["config_digest"] == a.config_digest);
  CHECK(run["seed"] == 3);
  auto cell = nlohmann::json::parse(a.manifest[1]);
  CHECK(cell["record"] == "cell");
  CHECK(cell["model_digest"] == a.cells[0].model_digest);

  auto other = text_experiment();
  other.seed = 4;
  other.text.seed = 4;
  CHECK(run_experiment(other).config_digest != a.config_digest);
  std::filesystem::remove(dir / "sknn_manifest_a.jsonl");
  std::filesystem::remove(dir / "sknn_manifest_b.jsonl");
}

TEST_CASE("errors carry their pipeline stage") {
  auto cfg = text_experiment();
  cfg.format = DataFormat::Conll;
  cfg.train = "/nonexistent/train.txt";
  try {
    run_experiment(cfg);
    FAIL("expected Io");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
    CHECK(e.stage() == "ingest");
  }

  auto bad = trajectory_experiment();
  bad.clustering.reset();
  try {
    run_experiment(bad);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
    CHECK(e.stage() == "config");
  }

  auto too_many = trajectory_experiment();
  too_many.clustering->method = KMedoids{100000};
  try {
    run_experiment(too_many);
    FAIL("expected ClusterCountExceedsElements");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ClusterCountExceedsElements);
    CHECK(e.stage() == "induce");
  }
}

TEST_CASE("config files drive experiments") {
  auto dir = std::filesystem::temp_directory_path() / "sknn_cfg_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "train.txt");
    f << "He PRP B-NP\nruns VBZ B-VP\n\nShe PRP B-NP\nsits VBZ B-VP\n\n";
    std::ofstream g(dir / "test.txt");
    g << "He PRP B-NP\nsits VBZ B-VP\n\n";
  }
  {
    std::ofstream c(dir / "exp.toml");
    c << "task = \"labelling\"\nformat = \"conll\"\ntrain = \"train.txt\"\ntest = \"test.txt\"\n"
         "metrics = [\"overlap\", \"igr\"]\nwindows = [0, 1]\nk = 1\nseed = 9\n";
  }
  auto cfg = load_experiment_config(dir / "exp.toml");
  CHECK(cfg.train == dir / "train.txt");
  CHECK(cfg.windows == std::vector<std::uint32_t>{0, 1});
  CHECK(cfg.metrics.size() == 2);
  auto result = run_experiment(cfg);
  REQUIRE(result.cells.size() == 4);
  for (const auto& c : result.cells) {
    CHECK(c.report.total == 2);
    CHECK(c.report.token_accuracy == 1.0);
    CHECK(*c.report.chunk_f1 == 1.0);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("experiment config validation") {
  CHECK_THROWS_AS(parse_experiment_config("task = \"labelling\"\nbogus = 1\n"), Error);
  CHECK_THROWS_AS(parse_experiment_config("format = \"xml\"\n"), Error);
  CHECK_THROWS_AS(parse_experiment_config("task = \"classification\"\nformat = \"points\"\ntrain = \"a\"\n"), Error);
  auto cfg = parse_experiment_config(
      "task = \"classification\"\nformat = \"synthetic-trajectories\"\nseed = 5\n"
      "[clustering]\nmethod = \"agglomerative\"\nlinkage = \"single\"\nthreshold = 0.5\n"
      "[synthetic]\nclasses = 2\nnoise_sigma = 1.5\n");
  REQUIRE(cfg.clustering);
  CHECK(std::get<Agglomerative>(cfg.clustering->method).linkage == Linkage::Single);
  CHECK(cfg.clustering->seed == 5);
  CHECK(cfg.trajectories.classes == 2);
  CHECK(cfg.trajectories.noise_sigma == 1.5);
  CHECK(parse_format("synthetic-text") == DataFormat::SyntheticText);
  CHECK(to_string(DataFormat::Points) == "points");
}
