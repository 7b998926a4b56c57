#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "simalign/datamodel.hpp"
#include "simalign/simcore.hpp"

namespace simalign {

/// Cross-validation fold label for every pair.
struct FoldAssignment {
  std::vector<int> fold_of_pair;
  int k = 0;
  std::uint64_t seed = 0;

  Index size() const { return static_cast<Index>(fold_of_pair.size()); }
  std::vector<Index> members(int fold) const;
};

/// Seeded uniform permutation of 0..m-1 cut into k contiguous blocks whose
/// sizes differ by at most one (the first m % k blocks are one larger).
FoldAssignment kfold_split(Index m, int k, std::uint64_t seed);

enum class RidgeSolver {
  Automatic,  // primal when d <= rows, dual otherwise
  Primal,     // d x d normal equations
  Dual,       // rows x rows kernel system
};

/// argmin_w ||y - Xw - b||^2 + lambda ||w||^2, with b unpenalized (and fit
/// only when fit_intercept is set). Throws NumericalError when lambda == 0 and
/// the system is rank deficient.
WeightVector fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda, bool fit_intercept,
                       RidgeSolver solver = RidgeSolver::Automatic);

struct FitReport {
  std::vector<double> lambda_grid;
  std::vector<double> mean_cv_r2_by_lambda;  // NaN where every fold was degenerate
  double chosen_lambda = 0.0;

  // Scores at chosen_lambda. Degenerate folds hold NaN and are excluded from the means.
  std::vector<double> per_fold_r2;
  std::vector<double> per_fold_r2_cod;
  std::vector<bool> fold_degenerate;
  double mean_cv_r2 = 0.0;
  double mean_cv_r2_cod = 0.0;

  // Refit on all pairs at chosen_lambda, scored on the same pairs.
  double full_data_r2 = 0.0;
  double full_data_r2_cod = 0.0;
  WeightVector weights;

  int folds = 0;
  std::uint64_t seed = 0;
  bool fit_intercept = true;
  std::vector<std::string> warnings;
};

struct GridSearchOptions {
  bool fit_intercept = true;
  int threads = 0;  // 0 = hardware concurrency, capped at the fold count
};

/// For every lambda: fit on k-1 folds and score squared Pearson on the held
/// out fold. Picks the lambda with the highest mean score (ties go to the
/// larger lambda) and refits on all rows.
///
/// A fold whose held-out targets are constant is flagged degenerate and left
/// out of every mean; a held-out prediction with zero variance scores 0.
FitReport grid_search_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::span<const double> grid,
                         const FoldAssignment& folds, const GridSearchOptions& options = {});

/// 13 log-spaced strengths 1e-3, 1e-2, ..., 1e9.
std::vector<double> default_lambda_grid();

struct PipelineConfig {
  int folds = 6;
  std::uint64_t seed = 0;
  std::vector<double> lambda_grid = default_lambda_grid();
  bool fit_intercept = true;
  bool standardize = false;     // z-score design columns; weights are mapped back to raw units
  bool normalize_rows = false;  // unit-norm feature rows (cosine similarity) before anything else
  int threads = 0;
};

struct PipelineResult {
  FitReport report;
  SimilarityMatrix predicted;  // from the full-data weights
};

/// design matrix -> targets -> k-fold split -> grid search -> predicted matrix.
PipelineResult fit_pipeline(const FeatureMatrix& f, const SimilarityMatrix& s, const PipelineConfig& config);

} // namespace simalign
