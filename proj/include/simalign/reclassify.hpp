#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "simalign/datamodel.hpp"
#include "simalign/ridgefit.hpp"

namespace simalign {

struct ElasticNetOptions {
  bool fit_intercept = true;
  std::size_t max_sweeps = 10000;
  double tolerance = 1e-7;  // stop when the largest coordinate change < tolerance * (1 + max|w|)
  bool record_objective = false;
};

struct ElasticNetFit {
  WeightVector weights;
  std::size_t sweeps = 0;
  std::vector<double> objective_trace;  // objective after each sweep, when requested
};

/// argmin_{w >= 0} (1/2M)||y - Xw - b||^2 + alpha (l1_ratio ||w||_1 + (1 - l1_ratio)/2 ||w||^2)
/// by cyclic coordinate descent with soft-thresholding clipped at zero.
/// The intercept b is unpenalized. Throws ConvergenceError carrying the final
/// KKT violation if the sweep cap is reached.
ElasticNetFit solve_nonneg_elastic_net(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                                       double l1_ratio, const ElasticNetOptions& options = {});

WeightVector fit_nonneg_elastic_net(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha = 1e-3,
                                    double l1_ratio = 0.5, const ElasticNetOptions& options = {});

struct ElasticNetSelection {
  std::vector<double> alpha_grid;
  std::vector<double> mean_cv_r2_by_alpha;  // NaN where every fold was degenerate
  double alpha = 0.0;
  WeightVector weights;  // refit on all rows at the chosen alpha
};

/// Picks alpha by mean held-out squared Pearson over `folds` (ties go to the
/// larger alpha), then refits on all rows.
ElasticNetSelection select_nonneg_elastic_net(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                              std::span<const double> alphas, double l1_ratio,
                                              const FoldAssignment& folds, const ElasticNetOptions& options = {},
                                              int threads = 0);

/// g_ik = f_ik sqrt(w_k). Throws ValidationError naming any negative weights.
FeatureMatrix reweight_features(const FeatureMatrix& f, const WeightVector& w);

/// Features plus one class label per item; every class in [0, C) occurs, C >= 2.
class LabeledDataset {
public:
  LabeledDataset(FeatureMatrix features, std::vector<int> labels, std::vector<std::string> class_names);

  const FeatureMatrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  int class_count() const { return static_cast<int>(class_names_.size()); }

  LabeledDataset with_features(FeatureMatrix features) const;

private:
  FeatureMatrix features_;
  std::vector<int> labels_;
  std::vector<std::string> class_names_;
};

/// Label file: header "id,class_name", one row per item. Identifiers must
/// match the feature file's set; labels are reordered to the feature order.
/// Class indices follow sorted class names.
LabeledDataset load_labeled_dataset(const FeatureMatrix& features, const std::filesystem::path& label_path);

struct ClassifierModel {
  Eigen::MatrixXd coefficients;  // C x (d + 1); last column is the bias
  double regularization = 0.0;
  std::size_t iterations = 0;

  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;  // N x C, rows sum to 1
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

struct LogRegOptions {
  std::size_t max_iterations = 10000;
  double gradient_tolerance = 1e-6;
  int history = 10;
};

/// Minimizes mean multinomial cross-entropy + (l2/2)||W||^2 (biases
/// unpenalized) with L-BFGS until the gradient 2-norm is below tolerance.
ClassifierModel fit_multinomial_logreg(const Eigen::MatrixXd& x, const std::vector<int>& labels, int classes,
                                       double l2, const LogRegOptions& options = {});
ClassifierModel fit_multinomial_logreg(const LabeledDataset& data, double l2, const LogRegOptions& options = {});

/// Per-item fold labels. Each class is shuffled independently and dealt
/// round-robin, continuing the rotation across classes so folds stay balanced.
std::vector<int> stratified_folds(const LabeledDataset& data, int k, std::uint64_t seed);

struct ClassificationReport {
  std::vector<double> per_fold_accuracy;
  std::vector<double> per_fold_macro_accuracy;  // mean per-class recall within the fold
  double mean_accuracy = 0.0;
  double mean_macro_accuracy = 0.0;
};

struct ClassificationOptions {
  LogRegOptions logreg;
  int threads = 0;
};

ClassificationReport evaluate_classification(const LabeledDataset& data, double l2, int k, std::uint64_t seed,
                                             const ClassificationOptions& options = {});

struct ReclassificationReport {
  ClassificationReport original;
  ClassificationReport reweighted;
};

/// Evaluates the original and sqrt(w)-reweighted features on identical folds.
ReclassificationReport compare_reweighted(const LabeledDataset& data, const WeightVector& w, double l2, int k,
                                          std::uint64_t seed, const ClassificationOptions& options = {});

} // namespace simalign
