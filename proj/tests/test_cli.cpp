#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "simalign/cli.hpp"
#include "simalign/simcore.hpp"

using namespace simalign;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string& name) : root(fs::temp_directory_path() / ("simalign_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string path(const std::string& rel) const { return (root / rel).string(); }
};

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Planted instance: S = F diag(w) F^T + small noise, written to disk.
void write_planted(const Workspace& ws, Index n, Index d, std::uint64_t seed, const std::string& features = "feat.csv",
                   const std::string& similarity = "sim.csv") {
  Rng rng(seed);
  const FeatureMatrix f(oracle::item_names(n), oracle::random_normal(rng, n, d));
  const VectorXd w = oracle::random_uniform(rng, d, 0, 1);
  MatrixXd s = predict_similarity(f, WeightVector{w, 0.0}).values();
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      s(i, j) += 0.01 * rng.normal();
      s(j, i) = s(i, j);
    }
  write_feature_matrix(f, fs::path(ws.path(features)));
  write_similarity_matrix(SimilarityMatrix(f.items(), s), fs::path(ws.path(similarity)));
}

} // namespace

TEST_CASE("cli: eval-raw on an exact Gram matrix reports R^2 = 1") {
  Workspace ws("evalraw");
  Rng rng(1);
  const FeatureMatrix f(oracle::item_names(15), oracle::random_normal(rng, 15, 4));
  write_feature_matrix(f, fs::path(ws.path("model.csv")));
  write_similarity_matrix(gram_similarity(f), fs::path(ws.path("sim.csv")));
  const auto r = run_cli({"eval-raw", "--features", ws.path("model.csv"), "--similarity", ws.path("sim.csv"), "--out",
                          ws.path("out")});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const auto report = read_json(ws.path("out/reports/eval_raw.json"));
  CHECK(report["models"][0]["r2"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report["seed"] == 0);
  CHECK(report["config"]["folds"] == 6);
  CHECK(fs::exists(ws.path("out/embeddings/human.csv")));
  CHECK(fs::exists(ws.path("out/dendrograms/model.raw.nwk")));
  CHECK(fs::exists(ws.path("out/manifest.json")));
}

TEST_CASE("cli: eval-raw on unrelated noise is near zero") {
  Workspace ws("evalnoise");
  Rng rng(2);
  const Index n = 120;
  const FeatureMatrix f(oracle::item_names(n), oracle::random_normal(rng, n, 20));
  MatrixXd s = oracle::random_normal(rng, n, n);
  s = (s + s.transpose()).eval();
  write_feature_matrix(f, fs::path(ws.path("model.csv")));
  write_similarity_matrix(SimilarityMatrix(f.items(), s), fs::path(ws.path("sim.csv")));
  const auto r = run_cli({"eval-raw", "--features", ws.path("model.csv"), "--similarity", ws.path("sim.csv"), "--out",
                          ws.path("out")});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  CHECK(read_json(ws.path("out/reports/eval_raw.json"))["models"][0]["r2"].get<double>() < 0.05);
}

TEST_CASE("cli: missing inputs fail with the path in the message") {
  Workspace ws("missing");
  write_planted(ws, 6, 2, 3);
  const auto r = run_cli({"eval-raw", "--features", ws.path("feat.csv"), "--similarity", ws.path("nope.csv"), "--out",
                          ws.path("out")});
  CHECK(r.status != 0);
  CHECK(r.err.find(ws.path("nope.csv")) != std::string::npos);

  CHECK(run_cli({}).status != 0);
  CHECK(run_cli({"fit", "--folds", "1", "--features", ws.path("feat.csv"), "--similarity", ws.path("sim.csv")}).status != 0);
  CHECK(run_cli({"bogus"}).status != 0);
}

TEST_CASE("cli: fit recovers planted weights and is byte-reproducible") {
  Workspace ws("fit");
  write_planted(ws, 30, 10, 4);
  const std::vector<std::string> args = {"fit",          "--features", ws.path("feat.csv"), "--similarity",
                                         ws.path("sim.csv"), "--out", ws.path("out"),    "--seed",
                                         "7",            "--nonneg"};
  auto r = run_cli(args);
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const auto report = read_json(ws.path("out/reports/fit.json"));
  CHECK(report["fit"]["mean_cv_r2"].get<double>() >= 0.95);
  CHECK(report["seed"] == 7);
  CHECK(fs::exists(ws.path("out/weights/weights.csv")));
  CHECK(fs::exists(ws.path("out/weights/weights_nonneg.csv")));
  CHECK(fs::exists(ws.path("out/reports/predicted_similarity.csv")));
  CHECK(fs::exists(ws.path("out/embeddings/feat.predicted.csv")));

  const std::string first = slurp(ws.path("out/reports/fit.json"));
  const std::string first_weights = slurp(ws.path("out/weights/weights.csv"));
  r = run_cli(args);
  REQUIRE(r.status == 0);
  CHECK(slurp(ws.path("out/reports/fit.json")) == first);
  CHECK(slurp(ws.path("out/weights/weights.csv")) == first_weights);
}

TEST_CASE("cli: single-point grid and config file precedence") {
  Workspace ws("config");
  write_planted(ws, 12, 3, 5);
  {
    std::ofstream cfg(ws.path("config.json"));
    cfg << json{{"features", ws.path("feat.csv")},
                {"similarity", ws.path("sim.csv")},
                {"out", ws.path("out")},
                {"grid", {2.5}},
                {"folds", 4},
                {"seed", 11}}
               .dump();
  }
  auto r = run_cli({"fit", "--config", ws.path("config.json"), "--seed", "12"});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  auto report = read_json(ws.path("out/reports/fit.json"));
  CHECK(report["fit"]["chosen_lambda"].get<double>() == 2.5);
  CHECK(report["fit"]["lambda_grid"].size() == 1);
  CHECK(report["fit"]["folds"] == 4);
  CHECK(report["seed"] == 12);

  r = run_cli({"fit", "--config", ws.path("config.json"), "--grid", "1,10"});
  REQUIRE(r.status == 0);
  report = read_json(ws.path("out/reports/fit.json"));
  CHECK(report["fit"]["lambda_grid"].size() == 2);

  {
    std::ofstream cfg(ws.path("bad.json"));
    cfg << R"({"foldz": 3})";
  }
  r = run_cli({"fit", "--config", ws.path("bad.json")});
  CHECK(r.status != 0);
  CHECK(r.err.find("foldz") != std::string::npos);
}

TEST_CASE("cli: baselines explain nothing on planted data") {
  Workspace ws("baseline");
  write_planted(ws, 30, 10, 6);
  const auto r = run_cli({"baseline", "--features", ws.path("feat.csv"), "--similarity", ws.path("sim.csv"), "--out",
                          ws.path("out"), "--baseline-seeds", "0,1,2,3,4"});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const auto report = read_json(ws.path("out/reports/baseline.json"));
  CHECK(report["unshuffled"]["mean_cv_r2"].get<double>() >= 0.95);
  REQUIRE(report["baselines"].size() == 3);
  CHECK(report["baselines"][0]["kind"] == "rows");
  for (const auto& run : report["baselines"][0]["runs"]) CHECK(run["mean_cv_r2"].get<double>() < 0.05);
  CHECK(report["baselines"][0]["runs"].size() == 5);

  const std::string first = slurp(ws.path("out/reports/baseline.json"));
  REQUIRE(run_cli({"baseline", "--features", ws.path("feat.csv"), "--similarity", ws.path("sim.csv"), "--out",
                   ws.path("out"), "--baseline-seeds", "0,1,2,3,4"})
              .status == 0);
  CHECK(slurp(ws.path("out/reports/baseline.json")) == first);
}

TEST_CASE("cli: depth sweep ranks a signal-bearing layer above noise") {
  Workspace ws("sweep");
  write_planted(ws, 25, 6, 7, "deep.csv", "sim.csv");
  Rng rng(8);
  const FeatureMatrix noise(oracle::item_names(25), oracle::random_normal(rng, 25, 6));
  write_feature_matrix(noise, fs::path(ws.path("shallow.csv")));
  const auto r = run_cli({"depth-sweep", "--features", ws.path("shallow.csv"), "--features", ws.path("deep.csv"),
                          "--similarity", ws.path("sim.csv"), "--out", ws.path("out")});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const auto report = read_json(ws.path("out/reports/depth_sweep.json"));
  REQUIRE(report["sweep"].size() == 2);
  CHECK(report["sweep"][0]["label"] == "shallow");
  CHECK(report["sweep"][1]["label"] == "deep");
  CHECK(report["sweep"][1]["mean_cv_r2"].get<double>() > report["sweep"][0]["mean_cv_r2"].get<double>());
  CHECK(slurp(ws.path("out/reports/depth_sweep.csv")).rfind("label,mean_cv_r2,chosen_lambda,full_data_r2\nshallow,", 0) == 0);

  const auto single = run_cli({"depth-sweep", "--features", ws.path("deep.csv"), "--similarity", ws.path("sim.csv"),
                               "--out", ws.path("out")});
  CHECK(single.status != 0);

  // misaligned file is named in the error
  const FeatureMatrix other(oracle::item_names(25, "x"), oracle::random_normal(rng, 25, 6));
  write_feature_matrix(other, fs::path(ws.path("other.csv")));
  const auto bad = run_cli({"depth-sweep", "--features", ws.path("deep.csv"), "--features", ws.path("other.csv"),
                            "--similarity", ws.path("sim.csv"), "--out", ws.path("out")});
  CHECK(bad.status != 0);
  CHECK(bad.err.find("'other'") != std::string::npos);
}

TEST_CASE("cli: reclassify") {
  Workspace ws("reclassify");
  Rng rng(9);
  const Index n = 60, d = 4;
  MatrixXd x = oracle::random_normal(rng, n, d);
  std::ofstream labels(ws.path("labels.csv"));
  labels << "id,class_name\n";
  for (Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 3);
    x(i, 0) += 4.0 * c;
    labels << "item" << i << ",c" << c << "\n";
  }
  labels.close();
  write_feature_matrix(FeatureMatrix(oracle::item_names(n), x), fs::path(ws.path("feat.csv")));
  write_weight_vector(WeightVector{Eigen::VectorXd::Ones(d), 0}, {"f0", "f1", "f2", "f3"}, ws.path("ones.csv"));
  write_weight_vector(WeightVector{(Eigen::VectorXd(d) << 1, -1, 1, 1).finished(), 0}, {"f0", "f1", "f2", "f3"},
                      ws.path("neg.csv"));

  auto r = run_cli({"reclassify", "--features", ws.path("feat.csv"), "--labels", ws.path("labels.csv"), "--weights",
                    ws.path("ones.csv"), "--out", ws.path("out")});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const auto report = read_json(ws.path("out/reports/reclassify.json"));
  CHECK(report["original"]["mean_accuracy"] == report["reweighted"]["mean_accuracy"]);
  CHECK(report["original"]["mean_accuracy"].get<double>() > 0.8);

  r = run_cli({"reclassify", "--features", ws.path("feat.csv"), "--labels", ws.path("labels.csv"), "--weights",
               ws.path("neg.csv"), "--out", ws.path("out")});
  CHECK(r.status != 0);
  CHECK(r.err.find("negative") != std::string::npos);

  r = run_cli({"reclassify", "--features", ws.path("feat.csv"), "--labels", ws.path("labels.csv"), "--weights",
               ws.path("ones.csv"), "--out", ws.path("out"), "--folds", "30"});
  CHECK(r.status != 0);
  CHECK(r.err.find("class 'c0'") != std::string::npos);
}
