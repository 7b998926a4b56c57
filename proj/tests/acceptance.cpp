// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "simalign/baselines.hpp"
#include "simalign/cli.hpp"
#include "simalign/reclassify.hpp"
#include "simalign/repranalysis.hpp"
#include "simalign/ridgefit.hpp"
#include "simalign/simcore.hpp"

using namespace simalign;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Planted {
  FeatureMatrix features;
  SimilarityMatrix similarity;
  VectorXd w_star;
};

// F standard normal, w* uniform on [0, 1], noise sd = 0.01 * sd(upper-triangle targets).
Planted planted_instance(std::uint64_t seed, Index n, Index d) {
  Rng rng(seed);
  FeatureMatrix f(oracle::item_names(n), oracle::random_normal(rng, n, d), "planted");
  const VectorXd w = oracle::random_uniform(rng, d, 0, 1);
  MatrixXd s = predict_similarity(f, WeightVector{w, 0.0}).values();
  const PairIndex pairs(n);
  const VectorXd t = extract_targets(SimilarityMatrix(f.items(), s), pairs);
  const double sd = std::sqrt((t.array() - t.mean()).square().sum() / static_cast<double>(t.size() - 1));
  for (const auto& [i, j] : pairs) {
    s(i, j) += 0.01 * sd * rng.normal();
    s(j, i) = s(i, j);
  }
  return {f, SimilarityMatrix(f.items(), s), w};
}

// ---------------------------------------------------------------------------

Verdict ridge_oracle() {
  Verdict v;
  const auto start = Clock::now();
  Rng rng(20240601);
  double worst = 0;
  for (int instance = 0; instance < 20; ++instance) {
    const MatrixXd x = oracle::random_normal(rng, 50, 8);
    const VectorXd y = x * oracle::random_normal(rng, 8, 1).col(0) + oracle::random_normal(rng, 50, 1).col(0);
    for (double lambda : {0.1, 1.0, 10.0}) {
      const auto w = fit_ridge(x, y, lambda, true);
      const auto ref = oracle::ridge_gd(x, y, lambda, true);
      worst = std::max(worst, (w.weights - ref.w).lpNorm<Eigen::Infinity>());
    }
  }
  const double elapsed = seconds_since(start);
  v.detail << "max |dw| = " << worst << " over 60 fits, " << elapsed << " s";
  v.require(worst < 1e-6, "|dw| < 1e-6");
  v.require(elapsed < 10.0, "runtime < 10 s");
  return v;
}

Verdict planted_recovery() {
  Verdict v;
  const auto start = Clock::now();
  const auto p = planted_instance(1, 30, 10);
  const auto r = fit_pipeline(p.features, p.similarity, PipelineConfig{});
  const double corr = oracle::pearson(r.report.weights.weights, p.w_star);
  const double elapsed = seconds_since(start);
  v.detail << "mean CV R^2 = " << r.report.mean_cv_r2 << ", Pearson(w, w*) = " << corr << ", " << elapsed << " s";
  v.require(r.report.mean_cv_r2 >= 0.95, "mean CV R^2 >= 0.95");
  v.require(corr >= 0.99, "Pearson >= 0.99");
  v.require(elapsed < 30.0, "runtime < 30 s");
  return v;
}

Verdict identity_consistency() {
  Verdict v;
  Rng rng(2);
  int exact = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    const Index n = 2 + static_cast<Index>(rng.uniform_below(40));
    const Index d = 1 + static_cast<Index>(rng.uniform_below(300));
    const FeatureMatrix f(oracle::item_names(n), oracle::random_normal(rng, n, d));
    exact += predict_similarity(f, WeightVector{VectorXd::Ones(d), 0.0}).values() == gram_similarity(f).values();
  }
  v.detail << exact << "/" << trials << " random instances bitwise identical";
  v.require(exact == trials, "bitwise identity");
  return v;
}

Verdict baseline_nullity() {
  Verdict v;
  const auto start = Clock::now();
  const auto p = planted_instance(1, 30, 10);
  const PipelineConfig config;
  const double unshuffled = fit_pipeline(p.features, p.similarity, config).report.mean_cv_r2;
  v.detail << "unshuffled " << unshuffled;
  v.require(unshuffled >= 0.95, "unshuffled >= 0.95");
  for (auto kind : {BaselineKind::RowShuffle, BaselineKind::ColumnPermutation, BaselineKind::Combined}) {
    double worst = 0, mean = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const double r2 = fit_pipeline(apply_baseline(kind, p.features, seed), p.similarity, config).report.mean_cv_r2;
      worst = std::max(worst, r2);
      mean += r2 / 5.0;
    }
    v.detail << "; " << to_string(kind) << " mean " << mean << " max " << worst;
    v.require(worst < 0.05, to_string(kind) + " every seed < 0.05");
  }
  const double elapsed = seconds_since(start);
  v.detail << "; " << elapsed << " s";
  v.require(elapsed < 120.0, "runtime < 2 min");
  return v;
}

Verdict mds_exactness() {
  Verdict v;
  Rng rng(5);
  const MatrixXd points = oracle::random_normal(rng, 50, 2) * 3.0;
  const MatrixXd d = oracle::pairwise_distances(points);
  const auto e = classical_mds(DissimilarityMatrix(oracle::item_names(50), d), 2);
  const double residual = procrustes_residual(points, e.coords);

  const FeatureMatrix f(oracle::item_names(40), oracle::random_normal(rng, 40, 16));
  const auto g = to_dissimilarity(gram_similarity(f), DissimilarityMethod::GramDistance);
  const double gap = (g.values() - oracle::pairwise_distances(f.values())).cwiseAbs().maxCoeff();
  v.detail << "Procrustes residual " << residual << ", gram-distance max error " << gap;
  v.require(residual < 1e-6, "residual < 1e-6");
  v.require(gap < 1e-9, "gram-distance within 1e-9");
  return v;
}

Verdict clustering() {
  Verdict v;
  const std::vector<int> group = {0, 1, 2, 0, 0, 1, 2, 2, 1, 0, 2, 1, 0};
  const auto n = static_cast<Index>(group.size());
  MatrixXd d(n, n);
  std::set<std::set<std::string>> planted;
  {
    std::map<int, std::set<std::string>> members;
    for (Index i = 0; i < n; ++i) members[group[static_cast<std::size_t>(i)]].insert("item" + std::to_string(i));
    for (auto& [g, m] : members) planted.insert(m);
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      d(i, j) = i == j ? 0.0 : (group[static_cast<std::size_t>(i)] == group[static_cast<std::size_t>(j)] ? 0.1 : 10.0);
  const DissimilarityMatrix dm(oracle::item_names(n), d);
  int separated = 0;
  for (auto linkage : {Linkage::Average, Linkage::Complete, Linkage::Single}) {
    const auto tree = hierarchical_cluster(dm, linkage);
    separated += oracle::clusters_after(tree, static_cast<std::size_t>(n - 3)) == planted &&
                 std::abs(tree.merges[static_cast<std::size_t>(n - 4)].height - 0.1) < 1e-12 &&
                 std::abs(tree.merges[static_cast<std::size_t>(n - 3)].height - 10.0) < 1e-12;
  }
  v.detail << separated << "/3 linkages separate the planted groups at the top two merges";
  v.require(separated == 3, "planted split");

  Rng rng(6);
  int exact = 0;
  for (int t = 0; t < 20; ++t) {
    const Index m = 2 + static_cast<Index>(rng.uniform_below(60));
    const MatrixXd dist = oracle::pairwise_distances(oracle::random_normal(rng, m, 4));
    const auto tree = hierarchical_cluster(DissimilarityMatrix(oracle::item_names(m), dist), Linkage::Single);
    const auto mst = oracle::mst_weights(dist);
    bool same = mst.size() == tree.merges.size();
    for (std::size_t k = 0; same && k < mst.size(); ++k) same = tree.merges[k].height == mst[k];
    exact += same;
  }
  v.detail << "; single linkage equals MST exactly on " << exact << "/20";
  v.require(exact == 20, "MST heights");
  return v;
}

Verdict elastic_net() {
  Verdict v;
  Rng rng(7);
  double worst_kkt = 0;
  bool nonneg = true;
  for (int t = 0; t < 20; ++t) {
    const Index m = 30 + static_cast<Index>(rng.uniform_below(150));
    const Index d = 2 + static_cast<Index>(rng.uniform_below(40));
    const MatrixXd x = oracle::random_normal(rng, m, d);
    const VectorXd y = x * oracle::random_normal(rng, d, 1).col(0) + oracle::random_normal(rng, m, 1).col(0);
    const double alpha = std::pow(10.0, -3 + 3 * rng.uniform01());
    const double rho = rng.uniform01();
    const auto w = fit_nonneg_elastic_net(x, y, alpha, rho);
    nonneg = nonneg && (w.weights.array() >= 0).all();
    const VectorXd g = oracle::elastic_net_gradient(x, y, w.weights, w.intercept, alpha, rho);
    for (Index k = 0; k < d; ++k)
      worst_kkt = std::max(worst_kkt, w.weights(k) > 0 ? std::abs(g(k)) : std::max(0.0, -g(k)));
  }
  // ridge equivalence on an instance whose unconstrained ridge solution is positive
  const Index m = 150, d = 8;
  const MatrixXd x = oracle::random_normal(rng, m, d);
  const VectorXd y = x * oracle::random_uniform(rng, d, 1, 3) + 0.2 * oracle::random_normal(rng, m, 1).col(0);
  const double alpha = 0.02;
  const auto en = fit_nonneg_elastic_net(x, y, alpha, 0.0);
  const auto ridge = fit_ridge(x, y, alpha * static_cast<double>(m), true);
  const double gap = (en.weights - ridge.weights).lpNorm<Eigen::Infinity>();
  const bool positive = (ridge.weights.array() > 0).all();
  v.detail << "max KKT violation " << worst_kkt << " over 20 instances, ridge gap " << gap;
  v.require(worst_kkt < 1e-5, "KKT within 1e-5");
  v.require(nonneg, "weights >= 0");
  v.require(positive, "ridge instance has a nonnegative solution");
  v.require(gap < 1e-5, "ridge equivalence within 1e-5");
  return v;
}

Verdict reweighting_identity() {
  Verdict v;
  Rng rng(8);
  const FeatureMatrix f(oracle::item_names(30), oracle::random_normal(rng, 30, 50));
  double worst = 0;
  for (int t = 0; t < 10; ++t) {
    VectorXd w = oracle::random_uniform(rng, 50, 0, 2);
    for (Index k = 0; k < 50; k += 7) w(k) = 0.0;
    const MatrixXd a = gram_similarity(reweight_features(f, WeightVector{w, 0})).values();
    const MatrixXd b = predict_similarity(f, WeightVector{w, 0}).values();
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff());
  }
  v.detail << "max relative error " << worst;
  v.require(worst < 1e-9, "within 1e-9 relative");
  return v;
}

// Classes separated only in the first `signal` dimensions; the rest is noise.
LabeledDataset signal_dataset(std::uint64_t seed, int classes, int per_class, Index dims, Index signal) {
  Rng rng(seed);
  const Index n = classes * per_class;
  MatrixXd x = oracle::random_normal(rng, n, dims);
  std::vector<int> labels;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      const Index row = c * per_class + i;
      labels.push_back(c);
      for (Index k = 0; k < signal; ++k) x(row, k) = 0.5 * x(row, k) + 5.0 * std::cos(2.0 * 3.14159265358979 * c / classes + k);
    }
  }
  std::vector<std::string> names;
  for (int c = 0; c < classes; ++c) names.push_back("class" + std::to_string(c));
  return LabeledDataset(FeatureMatrix(oracle::item_names(n), x), labels, names);
}

Verdict classification() {
  Verdict v;
  const auto data = signal_dataset(9, 3, 100, 12, 3);
  VectorXd ablate = VectorXd::Ones(12);
  ablate.head(3).setZero();
  const auto r = compare_reweighted(data, WeightVector{ablate, 0}, 1e-2, 6, 0);
  const double chance = 1.0 / 3.0;
  v.detail << "separable CV accuracy " << r.original.mean_accuracy << ", ablated " << r.reweighted.mean_accuracy
           << " (chance " << chance << ")";
  v.require(r.original.mean_accuracy >= 0.95, "accuracy >= 0.95");
  v.require(std::abs(r.reweighted.mean_accuracy - chance) <= 0.1, "ablated within 0.1 of chance");
  return v;
}

Verdict full_scale() {
  Verdict v;
  const auto p = planted_instance(10, 120, 4096);
  const auto start = Clock::now();
  PipelineConfig config;
  const auto r = fit_pipeline(p.features, p.similarity, config);
  const double elapsed = seconds_since(start);
  v.detail << "N=120, d=4096, M=" << PairIndex(120).size() << ", " << config.lambda_grid.size() << " lambdas, "
           << config.folds << " folds: " << elapsed << " s on " << std::thread::hardware_concurrency()
           << " hardware thread(s), mean CV R^2 " << r.report.mean_cv_r2;
  v.require(PairIndex(120).size() == 7140, "7140 pairs");
  v.require(elapsed < 600.0, "runtime < 10 min");
  return v;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    files[fs::relative(entry.path(), dir).generic_string()] = os.str();
  }
  return files;
}

Verdict determinism() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / "simalign_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto p = planted_instance(11, 24, 6);
  write_feature_matrix(p.features, root / "layer_a.csv");
  Rng rng(12);
  write_feature_matrix(FeatureMatrix(p.features.items(), oracle::random_normal(rng, 24, 5)), root / "layer_b.csv");
  write_similarity_matrix(p.similarity, root / "sim.csv");
  {
    std::ofstream labels(root / "labels.csv");
    labels << "id,class_name\n";
    for (std::size_t i = 0; i < p.features.items().size(); ++i) labels << p.features.items()[i] << ",k" << i % 2 << "\n";
  }
  const std::string f = (root / "layer_a.csv").string();
  const std::string s = (root / "sim.csv").string();
  const std::vector<std::vector<std::string>> commands = {
      {"eval-raw", "--features", f, "--features", (root / "layer_b.csv").string(), "--similarity", s},
      {"fit", "--features", f, "--similarity", s, "--nonneg", "--alpha-grid", "0.001,0.1"},
      {"baseline", "--features", f, "--similarity", s, "--baseline-seeds", "0,1"},
      {"depth-sweep", "--features", f, "--features", (root / "layer_b.csv").string(), "--similarity", s},
      {"reclassify", "--features", f, "--labels", (root / "labels.csv").string(), "--weights",
       (root / "out_fit/weights/weights_nonneg.csv").string(), "--folds", "3"},
  };
  int identical = 0;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    const std::string name = commands[c][0];
    const fs::path out = root / ("out_" + name);
    std::vector<std::map<std::string, std::string>> runs;
    for (int rep = 0; rep < 2; ++rep) {
      fs::remove_all(out);
      auto args = commands[c];
      args.insert(args.end(), {"--out", out.string(), "--seed", "3"});
      std::ostringstream log, err;
      if (cli::run(args, log, err) != 0) {
        v.require(false, name + " exited with error: " + err.str());
        break;
      }
      runs.push_back(snapshot(out));
    }
    if (runs.size() == 2 && runs[0] == runs[1] && !runs[0].empty()) {
      ++identical;
    } else {
      v.require(false, name + " reports differ between runs");
    }
  }
  v.detail << identical << "/" << commands.size() << " commands byte-identical across reruns";
  fs::remove_all(root);
  return v;
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"ridge oracle equivalence", ridge_oracle},
      {"planted-weight recovery", planted_recovery},
      {"identity consistency", identity_consistency},
      {"baseline nullity", baseline_nullity},
      {"MDS exactness", mds_exactness},
      {"clustering correctness", clustering},
      {"nonnegative elastic net", elastic_net},
      {"reweighting identity", reweighting_identity},
      {"classification sanity", classification},
      {"full-scale performance", full_scale},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    failures += !v.pass;
    std::printf("%s  %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu acceptance criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
