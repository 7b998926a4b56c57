#include "simalign/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "simalign/baselines.hpp"
#include "simalign/datamodel.hpp"
#include "simalign/error.hpp"
#include "simalign/reclassify.hpp"
#include "simalign/repranalysis.hpp"
#include "simalign/simcore.hpp"

namespace simalign::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Configuration

json config_to_json(const RunConfig& c) {
  return json{
      {"features", c.features},
      {"similarity", c.similarity},
      {"labels", c.labels},
      {"weights", c.weights},
      {"out", c.out},
      {"folds", c.folds},
      {"seed", c.seed},
      {"grid", c.grid},
      {"fit_intercept", c.fit_intercept},
      {"standardize", c.standardize},
      {"normalize", c.normalize},
      {"threads", c.threads},
      {"linkage", c.linkage},
      {"mds_dims", c.mds_dims},
      {"dissimilarity", c.dissimilarity},
      {"baselines", c.baselines},
      {"baseline_seeds", c.baseline_seeds},
      {"nonneg", c.nonneg},
      {"alpha", c.alpha},
      {"l1_ratio", c.l1_ratio},
      {"alpha_grid", c.alpha_grid},
      {"l2", c.l2},
  };
}

template <class T>
void read_key(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

RunConfig config_from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw Error("config file " + path + ": expected a JSON object");
  static const std::set<std::string> known = {
      "features", "similarity", "labels",    "weights",   "out",   "folds",          "seed",
      "grid",     "fit_intercept", "standardize", "normalize", "threads", "linkage", "mds_dims",
      "dissimilarity", "baselines", "baseline_seeds", "nonneg", "alpha", "l1_ratio", "alpha_grid", "l2"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error("config file " + path + ": unknown key '" + key + "'");
  }
  RunConfig c;
  try {
    if (j.contains("features")) {
      c.features = j["features"].is_string() ? std::vector<std::string>{j["features"].get<std::string>()}
                                              : j["features"].get<std::vector<std::string>>();
    }
    read_key(j, "similarity", c.similarity);
    read_key(j, "labels", c.labels);
    read_key(j, "weights", c.weights);
    read_key(j, "out", c.out);
    read_key(j, "folds", c.folds);
    read_key(j, "seed", c.seed);
    read_key(j, "grid", c.grid);
    read_key(j, "fit_intercept", c.fit_intercept);
    read_key(j, "standardize", c.standardize);
    read_key(j, "normalize", c.normalize);
    read_key(j, "threads", c.threads);
    read_key(j, "linkage", c.linkage);
    read_key(j, "mds_dims", c.mds_dims);
    read_key(j, "dissimilarity", c.dissimilarity);
    read_key(j, "baselines", c.baselines);
    read_key(j, "baseline_seeds", c.baseline_seeds);
    read_key(j, "nonneg", c.nonneg);
    read_key(j, "alpha", c.alpha);
    read_key(j, "l1_ratio", c.l1_ratio);
    read_key(j, "alpha_grid", c.alpha_grid);
    read_key(j, "l2", c.l2);
  } catch (const json::exception& e) {
    throw Error("config file " + path + ": " + e.what());
  }
  return c;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw Error(std::string("missing required input: ") + what);
  if (!fs::is_regular_file(path)) throw Error(std::string(what) + " file not found: " + path);
}

void validate_config(const RunConfig& c) {
  if (c.folds < 2) throw Error("folds must be >= 2");
  if (c.grid.empty()) throw Error("lambda grid is empty");
  parse_linkage(c.linkage);
  parse_dissimilarity_method(c.dissimilarity);
  if (c.mds_dims < 1) throw Error("mds_dims must be >= 1");
}

PipelineConfig pipeline_config(const RunConfig& c) {
  PipelineConfig p;
  p.folds = c.folds;
  p.seed = c.seed;
  p.lambda_grid = c.grid;
  p.fit_intercept = c.fit_intercept;
  p.standardize = c.standardize;
  p.normalize_rows = c.normalize;
  p.threads = c.threads;
  return p;
}

AnalysisOptions analysis_options(const RunConfig& c) {
  return AnalysisOptions{parse_dissimilarity_method(c.dissimilarity), static_cast<Index>(c.mds_dims),
                         parse_linkage(c.linkage)};
}

// ---------------------------------------------------------------------------
// Output

class OutputDir {
public:
  explicit OutputDir(const fs::path& root) : root_(root) {
    for (const char* sub : {"reports", "weights", "embeddings", "dendrograms"}) fs::create_directories(root_ / sub);
  }

  // Returns the path relative to the output root, for cross-references inside reports.
  std::string write(const fs::path& relative, const std::string& content) {
    std::ofstream out(root_ / relative, std::ios::binary);
    if (!out) throw Error("cannot write " + (root_ / relative).string());
    out << content;
    if (!out) throw Error("failed writing " + (root_ / relative).string());
    written_.push_back(relative.generic_string());
    return relative.generic_string();
  }

  std::string write_json(const fs::path& relative, const json& j) { return write(relative, j.dump(2) + "\n"); }

  const std::vector<std::string>& written() const { return written_; }
  const fs::path& root() const { return root_; }

private:
  fs::path root_;
  std::vector<std::string> written_;
};

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

json number_list(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return out;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json embedding_json(const Embedding& e, const std::string& coords_file, const std::string& eig_file) {
  std::vector<double> eig(e.eigenvalues.data(), e.eigenvalues.data() + e.eigenvalues.size());
  return json{{"coordinates", coords_file},
              {"eigenvalues_file", eig_file},
              {"eigenvalues", number_list(eig)},
              {"zero_filled", e.zero_filled},
              {"warnings", e.warnings}};
}

// Writes MDS and dendrogram artifacts for one matrix and returns their summary.
json export_structure(OutputDir& dir, const std::string& name, const Embedding& e, const Dendrogram& tree) {
  const auto coords = dir.write(fs::path("embeddings") / (name + ".csv"), render([&](std::ostream& os) {
                                  write_embedding(e, os);
                                }));
  const auto eig = dir.write(fs::path("embeddings") / (name + ".eigenvalues.csv"),
                             render([&](std::ostream& os) { write_eigenvalues(e, os); }));
  const auto newick = dir.write(fs::path("dendrograms") / (name + ".nwk"), to_newick(tree) + "\n");
  const auto merges = dir.write(fs::path("dendrograms") / (name + ".merges.csv"),
                                render([&](std::ostream& os) { write_merge_table(tree, os); }));
  return json{{"mds", embedding_json(e, coords, eig)}, {"dendrogram", {{"newick", newick}, {"merges", merges}}}};
}

json fit_report_json(const FitReport& r) {
  return json{
      {"lambda_grid", r.lambda_grid},
      {"mean_cv_r2_by_lambda", number_list(r.mean_cv_r2_by_lambda)},
      {"chosen_lambda", r.chosen_lambda},
      {"folds", r.folds},
      {"fold_seed", r.seed},
      {"per_fold_r2", number_list(r.per_fold_r2)},
      {"per_fold_r2_cod", number_list(r.per_fold_r2_cod)},
      {"fold_degenerate", r.fold_degenerate},
      {"mean_cv_r2", finite_or_null(r.mean_cv_r2)},
      {"mean_cv_r2_cod", finite_or_null(r.mean_cv_r2_cod)},
      {"full_data_r2", finite_or_null(r.full_data_r2)},
      {"full_data_r2_cod", finite_or_null(r.full_data_r2_cod)},
      {"fit_intercept", r.fit_intercept},
      {"intercept", r.weights.intercept},
      {"warnings", r.warnings},
  };
}

json report_header(const char* command, const RunConfig& c) {
  return json{{"command", command}, {"seed", c.seed}, {"config", config_to_json(c)}};
}

void write_manifest(OutputDir& dir, const char* command, const RunConfig& c) {
  json manifest = report_header(command, c);
  manifest["files"] = dir.written();
  dir.write_json("manifest.json", manifest);
}

std::vector<FeatureMatrix> load_features(const RunConfig& c) {
  std::vector<FeatureMatrix> out;
  std::set<std::string> labels;
  for (const auto& path : c.features) {
    require_file(path, "feature");
    out.push_back(load_feature_matrix(path));
    if (!labels.insert(out.back().label()).second) {
      throw Error("duplicate feature label '" + out.back().label() + "' (file stems must differ)");
    }
  }
  if (out.empty()) throw Error("missing required input: --features");
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_eval_raw(const RunConfig& c, std::ostream& log) {
  require_file(c.similarity, "similarity");
  const auto features = load_features(c);
  const SimilarityMatrix human = load_similarity_matrix(c.similarity);
  for (const auto& f : features) {
    try {
      validate_alignment(f, human);
    } catch (const AlignmentError& e) {
      throw Error("feature set '" + f.label() + "' does not align with the similarity matrix: " + e.what());
    }
  }

  OutputDir dir(c.out);
  const AnalysisOptions options = analysis_options(c);
  json report = report_header("eval-raw", c);
  report["metric"] = "squared Pearson correlation over the upper triangle";
  report["similarity"] = c.similarity;

  bool human_exported = false;
  json models = json::array();
  for (const auto& f : features) {
    const FeatureMatrix used = c.normalize ? normalize_rows(f) : f;
    const SimilarityMatrix model = gram_similarity(used);
    const ComparisonReport cmp = compare_representations(human, model, options);
    if (!human_exported) {
      report["human"] = export_structure(dir, "human", cmp.embedding_a, cmp.dendrogram_a);
      human_exported = true;
    }
    json entry{{"label", f.label()},
               {"features", f.label()},
               {"r2", cmp.r2},
               {"procrustes_disparity", finite_or_null(cmp.procrustes_disparity)}};
    entry["structure"] = export_structure(dir, f.label() + ".raw", cmp.embedding_b, cmp.dendrogram_b);
    models.push_back(std::move(entry));
    log << f.label() << ": R^2 = " << format_double(cmp.r2) << "\n";
  }
  report["models"] = std::move(models);
  dir.write_json("reports/eval_raw.json", report);
  write_manifest(dir, "eval-raw", c);
}

void cmd_fit(const RunConfig& c, std::ostream& log) {
  require_file(c.similarity, "similarity");
  const auto all = load_features(c);
  if (all.size() != 1) throw Error("fit takes exactly one feature file (use depth-sweep for several)");
  const FeatureMatrix& f = all.front();
  const SimilarityMatrix human = load_similarity_matrix(c.similarity);
  validate_alignment(f, human);

  OutputDir dir(c.out);
  const PipelineResult result = fit_pipeline(f, human, pipeline_config(c));
  const FeatureMatrix used = c.normalize ? normalize_rows(f) : f;
  const SimilarityMatrix raw = gram_similarity(used);
  const AnalysisOptions options = analysis_options(c);

  json report = report_header("fit", c);
  report["features"] = f.label();
  report["similarity"] = c.similarity;
  report["fit"] = fit_report_json(result.report);

  WeightVector weights = result.report.weights;
  report["fit"]["weights_file"] = "weights/weights.csv";
  write_weight_vector(weights, f.feature_names(), dir.root() / "weights/weights.csv");
  report["predicted_similarity"] = dir.write("reports/predicted_similarity.csv", render([&](std::ostream& os) {
                                               write_similarity_matrix(result.predicted, os);
                                             }));

  const ComparisonReport vs_raw = compare_representations(human, raw, options);
  const ComparisonReport vs_fit = compare_representations(human, result.predicted, options);
  report["raw_r2"] = vs_raw.r2;
  report["predicted_r2"] = vs_fit.r2;
  report["structure"] = json{
      {"human", export_structure(dir, "human", vs_raw.embedding_a, vs_raw.dendrogram_a)},
      {"raw", export_structure(dir, f.label() + ".raw", vs_raw.embedding_b, vs_raw.dendrogram_b)},
      {"predicted", export_structure(dir, f.label() + ".predicted", vs_fit.embedding_b, vs_fit.dendrogram_b)},
      {"procrustes_disparity_raw", finite_or_null(vs_raw.procrustes_disparity)},
      {"procrustes_disparity_predicted", finite_or_null(vs_fit.procrustes_disparity)},
  };

  if (c.nonneg) {
    const DesignMatrix design = build_design_matrix(used);
    const TargetVector y = extract_targets(human, design.pair_index);
    ElasticNetOptions en;
    en.fit_intercept = c.fit_intercept;
    json nn{{"alpha", c.alpha}, {"l1_ratio", c.l1_ratio}};
    WeightVector w;
    if (!c.alpha_grid.empty()) {
      const FoldAssignment folds = kfold_split(design.pair_index.size(), c.folds, c.seed);
      const ElasticNetSelection sel =
          select_nonneg_elastic_net(design.rows, y, c.alpha_grid, c.l1_ratio, folds, en, c.threads);
      w = sel.weights;
      nn["alpha"] = sel.alpha;
      nn["alpha_grid"] = sel.alpha_grid;
      nn["mean_cv_r2_by_alpha"] = number_list(sel.mean_cv_r2_by_alpha);
    } else {
      w = fit_nonneg_elastic_net(design.rows, y, c.alpha, c.l1_ratio, en);
    }
    const Eigen::VectorXd fitted = (design.rows * w.weights).array() + w.intercept;
    nn["intercept"] = w.intercept;
    nn["nonzero_weights"] = static_cast<long>((w.weights.array() > 0.0).count());
    nn["full_data_r2"] = (fitted.array() == fitted(0)).all() ? 0.0 : r_squared(fitted, y);
    nn["weights_file"] = "weights/weights_nonneg.csv";
    write_weight_vector(w, f.feature_names(), dir.root() / "weights/weights_nonneg.csv");
    report["nonneg_fit"] = std::move(nn);
  }

  dir.write_json("reports/fit.json", report);
  write_manifest(dir, "fit", c);
  log << f.label() << ": mean CV R^2 = " << format_double(result.report.mean_cv_r2)
      << ", lambda = " << format_double(result.report.chosen_lambda) << "\n";
}

void cmd_baseline(const RunConfig& c, std::ostream& log) {
  require_file(c.similarity, "similarity");
  const auto all = load_features(c);
  if (all.size() != 1) throw Error("baseline takes exactly one feature file");
  const FeatureMatrix& f = all.front();
  const SimilarityMatrix human = load_similarity_matrix(c.similarity);
  validate_alignment(f, human);
  if (c.baselines.empty()) throw Error("no baseline kinds requested");
  if (c.baseline_seeds.empty()) throw Error("no baseline seeds given");

  OutputDir dir(c.out);
  const PipelineConfig pc = pipeline_config(c);
  const PipelineResult original = fit_pipeline(f, human, pc);

  json report = report_header("baseline", c);
  report["features"] = f.label();
  report["unshuffled"] = json{{"mean_cv_r2", original.report.mean_cv_r2},
                              {"chosen_lambda", original.report.chosen_lambda}};
  json sections = json::array();
  for (const auto& name : c.baselines) {
    const BaselineKind kind = parse_baseline_kind(name);
    json runs = json::array();
    double sum = 0.0;
    for (std::uint64_t seed : c.baseline_seeds) {
      const PipelineResult r = fit_pipeline(apply_baseline(kind, f, seed), human, pc);
      runs.push_back(json{{"seed", seed},
                          {"mean_cv_r2", r.report.mean_cv_r2},
                          {"chosen_lambda", r.report.chosen_lambda},
                          {"full_data_r2", finite_or_null(r.report.full_data_r2)}});
      sum += r.report.mean_cv_r2;
    }
    const double mean = sum / static_cast<double>(c.baseline_seeds.size());
    sections.push_back(json{{"kind", to_string(kind)}, {"baseline", static_cast<int>(kind)}, {"runs", runs},
                            {"mean_cv_r2", mean}});
    log << "baseline " << to_string(kind) << ": mean CV R^2 over seeds = " << format_double(mean) << "\n";
  }
  report["baselines"] = std::move(sections);
  dir.write_json("reports/baseline.json", report);
  write_manifest(dir, "baseline", c);
}

void cmd_depth_sweep(const RunConfig& c, std::ostream& log) {
  require_file(c.similarity, "similarity");
  if (c.features.size() < 2) throw Error("depth-sweep needs at least 2 feature files");
  const auto all = load_features(c);
  const SimilarityMatrix human = load_similarity_matrix(c.similarity);
  for (const auto& f : all) {
    try {
      validate_alignment(f, human);
    } catch (const AlignmentError& e) {
      throw Error("feature set '" + f.label() + "' does not align with the similarity matrix: " + e.what());
    }
  }

  OutputDir dir(c.out);
  const PipelineConfig pc = pipeline_config(c);
  json report = report_header("depth-sweep", c);
  json rows = json::array();
  std::ostringstream table;
  table << "label,mean_cv_r2,chosen_lambda,full_data_r2\n";
  for (const auto& f : all) {
    const PipelineResult r = fit_pipeline(f, human, pc);
    rows.push_back(json{{"label", f.label()},
                        {"dim", f.dim()},
                        {"mean_cv_r2", r.report.mean_cv_r2},
                        {"chosen_lambda", r.report.chosen_lambda},
                        {"full_data_r2", finite_or_null(r.report.full_data_r2)},
                        {"per_fold_r2", number_list(r.report.per_fold_r2)}});
    table << f.label() << ',' << format_double(r.report.mean_cv_r2) << ',' << format_double(r.report.chosen_lambda)
          << ',' << format_double(r.report.full_data_r2) << '\n';
    log << f.label() << ": mean CV R^2 = " << format_double(r.report.mean_cv_r2) << "\n";
  }
  report["sweep"] = std::move(rows);
  report["table"] = dir.write("reports/depth_sweep.csv", table.str());
  dir.write_json("reports/depth_sweep.json", report);
  write_manifest(dir, "depth-sweep", c);
}

json classification_json(const ClassificationReport& r) {
  return json{{"per_fold_accuracy", r.per_fold_accuracy},
              {"mean_accuracy", r.mean_accuracy},
              {"per_fold_macro_accuracy", r.per_fold_macro_accuracy},
              {"mean_macro_accuracy", r.mean_macro_accuracy}};
}

void cmd_reclassify(const RunConfig& c, std::ostream& log) {
  require_file(c.labels, "labels");
  require_file(c.weights, "weights");
  const auto all = load_features(c);
  if (all.size() != 1) throw Error("reclassify takes exactly one feature file");
  const LabeledDataset data = load_labeled_dataset(all.front(), c.labels);
  const WeightVector w = load_weight_vector(c.weights);

  OutputDir dir(c.out);
  ClassificationOptions options;
  options.threads = c.threads;
  const ReclassificationReport r = compare_reweighted(data, w, c.l2, c.folds, c.seed, options);

  json report = report_header("reclassify", c);
  report["metric"] = "accuracy (stratified k-fold; macro = mean per-class recall)";
  report["items"] = data.features().size();
  report["classes"] = data.class_names();
  report["l2"] = c.l2;
  report["original"] = classification_json(r.original);
  report["reweighted"] = classification_json(r.reweighted);
  dir.write_json("reports/reclassify.json", report);
  write_manifest(dir, "reclassify", c);
  log << "accuracy: original " << format_double(r.original.mean_accuracy) << ", reweighted "
      << format_double(r.reweighted.mean_accuracy) << "\n";
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Align feature representations with similarity judgments"};
  app.name("simalign");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> folds;
  std::optional<std::vector<double>> grid;
  std::optional<std::string> linkage;
  std::optional<long> mds_dims;
  std::optional<std::string> dissimilarity;
  std::vector<std::string> features;
  std::optional<std::string> similarity;
  std::optional<std::string> labels;
  std::optional<std::string> weights;
  std::optional<std::vector<std::string>> baselines;
  std::optional<std::vector<std::uint64_t>> baseline_seeds;
  std::optional<double> alpha;
  std::optional<double> l1_ratio;
  std::optional<std::vector<double>> alpha_grid;
  std::optional<double> l2;
  std::optional<int> threads;
  bool nonneg = false;
  bool standardize = false;
  bool normalize = false;
  bool no_intercept = false;

  app.add_option("--config", config_path, "JSON config file; flags override its values");
  app.add_option("--seed", seed, "RNG seed for folds");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--folds", folds, "cross-validation folds");
  app.add_option("--grid", grid, "ridge lambda grid")->delimiter(',');
  app.add_option("--linkage", linkage, "average | complete | single");
  app.add_option("--mds-dims", mds_dims, "MDS dimensions");
  app.add_option("--dissimilarity", dissimilarity, "max-shift | gram-distance");
  app.add_option("--features", features, "feature matrix file(s)");
  app.add_option("--similarity", similarity, "similarity matrix file");
  app.add_option("--labels", labels, "label file (id,class_name)");
  app.add_option("--weights", weights, "weight file");
  app.add_option("--baselines", baselines, "baseline kinds: rows|1, columns|2, combined|3")->delimiter(',');
  app.add_option("--baseline-seeds", baseline_seeds, "seeds for each baseline")->delimiter(',');
  app.add_flag("--nonneg", nonneg, "also fit nonnegative elastic-net weights (fit)");
  app.add_option("--alpha", alpha, "elastic-net strength");
  app.add_option("--l1-ratio", l1_ratio, "elastic-net L1 share in [0,1]");
  app.add_option("--alpha-grid", alpha_grid, "elastic-net alpha grid selected by CV")->delimiter(',');
  app.add_option("--l2", l2, "logistic-regression L2 strength (reclassify)");
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.add_flag("--standardize", standardize, "z-score design-matrix columns");
  app.add_flag("--normalize", normalize, "unit-norm feature rows (cosine similarity)");
  app.add_flag("--no-intercept", no_intercept, "fit without an intercept");

  auto* eval_raw = app.add_subcommand("eval-raw", "raw Gram similarity vs. judgments");
  auto* fit = app.add_subcommand("fit", "fit diagonal feature weights by cross-validated ridge");
  auto* baseline = app.add_subcommand("baseline", "shuffled-feature control fits");
  auto* sweep = app.add_subcommand("depth-sweep", "fit several feature sets against one matrix");
  auto* reclassify = app.add_subcommand("reclassify", "classification with original vs. reweighted features");

  std::vector<std::string> argv_store = args;
  std::vector<const char*> argv;
  argv.push_back("simalign");
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    RunConfig c = config_path.empty() ? RunConfig{} : config_from_file(config_path);
    if (!features.empty()) c.features = features;
    if (similarity) c.similarity = *similarity;
    if (labels) c.labels = *labels;
    if (weights) c.weights = *weights;
    if (out_dir) c.out = *out_dir;
    if (seed) c.seed = *seed;
    if (folds) c.folds = *folds;
    if (grid) c.grid = *grid;
    if (linkage) c.linkage = *linkage;
    if (mds_dims) c.mds_dims = *mds_dims;
    if (dissimilarity) c.dissimilarity = *dissimilarity;
    if (baselines) c.baselines = *baselines;
    if (baseline_seeds) c.baseline_seeds = *baseline_seeds;
    if (alpha) c.alpha = *alpha;
    if (l1_ratio) c.l1_ratio = *l1_ratio;
    if (alpha_grid) c.alpha_grid = *alpha_grid;
    if (l2) c.l2 = *l2;
    if (threads) c.threads = *threads;
    if (nonneg) c.nonneg = true;
    if (standardize) c.standardize = true;
    if (normalize) c.normalize = true;
    if (no_intercept) c.fit_intercept = false;
    validate_config(c);

    if (eval_raw->parsed()) cmd_eval_raw(c, out);
    if (fit->parsed()) cmd_fit(c, out);
    if (baseline->parsed()) cmd_baseline(c, out);
    if (sweep->parsed()) cmd_depth_sweep(c, out);
    if (reclassify->parsed()) cmd_reclassify(c, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

} // namespace simalign::cli
