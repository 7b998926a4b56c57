#include "simalign/ridgefit.hpp"

#include <cmath>
#include <limits>

#include "parallel.hpp"
#include "simalign/error.hpp"
#include "simalign/rng.hpp"

namespace simalign {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Solves (gram + lambda I) w = rhs. Only the lower triangle of `gram` is read.
// One step of iterative refinement against the unfactored system.
Eigen::VectorXd solve_regularized(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs, double lambda) {
  Eigen::MatrixXd h = gram;
  h.diagonal().array() += lambda;
  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(h);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("ridge system is not positive definite at lambda=" + format_double(lambda) +
                         "; increase lambda");
  }
  Eigen::VectorXd w = llt.solve(rhs);
  const Eigen::VectorXd residual = rhs - gram.selfadjointView<Eigen::Lower>() * w - lambda * w;
  w += llt.solve(residual);
  return w;
}

Eigen::MatrixXd lower_gram_of_columns(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  return g;
}

Eigen::MatrixXd lower_gram_of_rows(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(x.rows(), x.rows());
  g.selfadjointView<Eigen::Lower>().rankUpdate(x);
  return g;
}

bool is_constant(const Eigen::VectorXd& v) {
  return v.size() == 0 || (v.array() == v(0)).all();
}

struct FoldScore {
  double r2 = kNaN;
  double cod = kNaN;
  bool zero_variance_prediction = false;
};

FoldScore score_fold(const Eigen::VectorXd& predicted, const Eigen::VectorXd& observed) {
  FoldScore s;
  s.cod = coefficient_of_determination(predicted, observed);
  if (is_constant(predicted)) {
    s.r2 = 0.0;
    s.zero_variance_prediction = true;
  } else {
    s.r2 = r_squared(predicted, observed);
  }
  return s;
}

void validate_grid(std::span<const double> grid) {
  if (grid.empty()) throw ValidationError("lambda grid is empty");
  for (double lambda : grid) {
    if (!std::isfinite(lambda) || lambda <= 0.0) {
      throw ValidationError("lambda grid values must be positive and finite, got " + format_double(lambda));
    }
  }
}

} // namespace

std::vector<Index> FoldAssignment::members(int fold) const {
  std::vector<Index> out;
  for (std::size_t m = 0; m < fold_of_pair.size(); ++m) {
    if (fold_of_pair[m] == fold) out.push_back(static_cast<Index>(m));
  }
  return out;
}

FoldAssignment kfold_split(Index m, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("kfold_split: need at least 2 folds, got " + std::to_string(k));
  if (k > m) {
    throw ValidationError("kfold_split: " + std::to_string(k) + " folds for only " + std::to_string(m) + " pairs");
  }
  Rng rng(seed);
  const auto perm = rng.permutation(static_cast<std::size_t>(m));
  FoldAssignment out;
  out.k = k;
  out.seed = seed;
  out.fold_of_pair.assign(static_cast<std::size_t>(m), -1);
  const Index base = m / k;
  const Index extra = m % k;
  std::size_t pos = 0;
  for (int fold = 0; fold < k; ++fold) {
    const Index block = base + (fold < extra ? 1 : 0);
    for (Index t = 0; t < block; ++t) out.fold_of_pair[perm[pos++]] = fold;
  }
  return out;
}

WeightVector fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda, bool fit_intercept,
                       RidgeSolver solver) {
  if (x.rows() != y.size()) throw ValidationError("fit_ridge: design rows do not match target length");
  if (x.rows() < 1 || x.cols() < 1) throw ValidationError("fit_ridge: empty design matrix");
  if (!std::isfinite(lambda) || lambda < 0.0) throw ValidationError("fit_ridge: lambda must be finite and >= 0");

  Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(x.cols());
  double y_mean = 0.0;
  if (fit_intercept) {
    x_mean = x.colwise().mean();
    y_mean = y.mean();
  }
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::VectorXd w;
  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
    if (qr.rank() < x.cols()) {
      throw NumericalError("fit_ridge: predictors are collinear (numerical rank " + std::to_string(qr.rank()) +
                           " < " + std::to_string(x.cols()) + ") at lambda=0; use lambda > 0");
    }
    w = qr.solve(yc);
  } else {
    const bool primal = solver == RidgeSolver::Primal ||
                        (solver == RidgeSolver::Automatic && x.cols() <= x.rows());
    if (primal) {
      w = solve_regularized(lower_gram_of_columns(xc), xc.transpose() * yc, lambda);
    } else {
      const Eigen::VectorXd alpha = solve_regularized(lower_gram_of_rows(xc), yc, lambda);
      w = xc.transpose() * alpha;
    }
  }

  WeightVector out;
  out.intercept = fit_intercept ? y_mean - x_mean.dot(w) : 0.0;
  out.weights = std::move(w);
  return out;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int e = -3; e <= 9; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

FitReport grid_search_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::span<const double> grid,
                         const FoldAssignment& folds, const GridSearchOptions& options) {
  validate_grid(grid);
  const Index m = x.rows();
  const Index d = x.cols();
  if (y.size() != m) throw ValidationError("grid_search_cv: design rows do not match target length");
  if (folds.size() != m) throw ValidationError("grid_search_cv: fold assignment size does not match pair count");
  const int k = folds.k;
  const bool intercept = options.fit_intercept;

  std::vector<std::vector<Index>> test_sets(static_cast<std::size_t>(k));
  for (Index r = 0; r < m; ++r) {
    const int f = folds.fold_of_pair[static_cast<std::size_t>(r)];
    if (f < 0 || f >= k) throw ValidationError("grid_search_cv: fold label out of range");
    test_sets[static_cast<std::size_t>(f)].push_back(r);
  }
  Index min_train = m;
  for (const auto& t : test_sets) {
    if (t.empty()) throw ValidationError("grid_search_cv: empty fold");
    min_train = std::min(min_train, m - static_cast<Index>(t.size()));
  }

  // A column shift is absorbed by the intercept, so centering once up front
  // keeps the per-fold downdates below free of large cancellations.
  const Eigen::RowVectorXd shift = intercept ? Eigen::RowVectorXd(x.colwise().mean()) : Eigen::RowVectorXd::Zero(d);
  const double y_shift = intercept ? y.mean() : 0.0;
  const Eigen::MatrixXd xs = x.rowwise() - shift;
  const Eigen::VectorXd ys = y.array() - y_shift;

  const std::size_t g_count = grid.size();
  std::vector<std::vector<FoldScore>> scores(static_cast<std::size_t>(k), std::vector<FoldScore>(g_count));
  std::vector<char> degenerate(static_cast<std::size_t>(k), 0);

  if (d <= min_train) {
    const Eigen::MatrixXd gram = lower_gram_of_columns(xs);
    const Eigen::VectorXd xty = xs.transpose() * ys;
    const Eigen::RowVectorXd col_sum = xs.colwise().sum();
    const double y_sum = ys.sum();

    detail::parallel_for(static_cast<std::size_t>(k), options.threads, [&](std::size_t f) {
      const auto& test = test_sets[f];
      const Eigen::VectorXd yt = ys(test);
      if (is_constant(y(test))) {
        degenerate[f] = 1;
        return;
      }
      const Eigen::MatrixXd xt = xs(test, Eigen::all);
      const double n = static_cast<double>(m - static_cast<Index>(test.size()));
      Eigen::MatrixXd g = gram;
      g.selfadjointView<Eigen::Lower>().rankUpdate(xt.transpose(), -1.0);
      Eigen::VectorXd c = xty - xt.transpose() * yt;
      Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(d);
      double y_mean = 0.0;
      if (intercept) {
        x_mean = (col_sum - xt.colwise().sum()) / n;
        y_mean = (y_sum - yt.sum()) / n;
        g.selfadjointView<Eigen::Lower>().rankUpdate(x_mean.transpose(), -n);
        c -= n * y_mean * x_mean.transpose();
      }
      for (std::size_t gi = 0; gi < g_count; ++gi) {
        const Eigen::VectorXd w = solve_regularized(g, c, grid[gi]);
        const double b = y_mean - x_mean.dot(w);
        const Eigen::VectorXd pred = (xt * w).array() + b;
        scores[f][gi] = score_fold(pred, yt);
      }
    });
  } else {
    // More features than training pairs: work in the pair (kernel) space.
    const Eigen::MatrixXd kernel = xs * xs.transpose();

    detail::parallel_for(static_cast<std::size_t>(k), options.threads, [&](std::size_t f) {
      const auto& test = test_sets[f];
      const Eigen::VectorXd yt = ys(test);
      if (is_constant(y(test))) {
        degenerate[f] = 1;
        return;
      }
      std::vector<Index> train;
      train.reserve(static_cast<std::size_t>(m) - test.size());
      for (Index r = 0; r < m; ++r) {
        if (folds.fold_of_pair[static_cast<std::size_t>(r)] != static_cast<int>(f)) train.push_back(r);
      }
      Eigen::MatrixXd ktt = kernel(train, train);
      Eigen::MatrixXd ket = kernel(test, train);
      Eigen::VectorXd ytr = ys(train);
      double y_mean = 0.0;
      if (intercept) {
        const Eigen::VectorXd r_bar = ktt.rowwise().mean();
        const Eigen::VectorXd e_bar = ket.rowwise().mean();
        const double k_bar = r_bar.mean();
        ktt.colwise() -= r_bar;
        ktt.rowwise() -= r_bar.transpose();
        ktt.array() += k_bar;
        ket.colwise() -= e_bar;
        ket.rowwise() -= r_bar.transpose();
        ket.array() += k_bar;
        y_mean = ytr.mean();
        ytr.array() -= y_mean;
      }
      for (std::size_t gi = 0; gi < g_count; ++gi) {
        const Eigen::VectorXd alpha = solve_regularized(ktt, ytr, grid[gi]);
        const Eigen::VectorXd pred = (ket * alpha).array() + y_mean;
        scores[f][gi] = score_fold(pred, yt);
      }
    });
  }

  FitReport report;
  report.lambda_grid.assign(grid.begin(), grid.end());
  report.folds = k;
  report.seed = folds.seed;
  report.fit_intercept = intercept;
  for (int f = 0; f < k; ++f) {
    report.fold_degenerate.push_back(degenerate[static_cast<std::size_t>(f)] != 0);
    if (degenerate[static_cast<std::size_t>(f)]) {
      report.warnings.push_back("fold " + std::to_string(f) +
                                " has zero target variance; excluded from cross-validated means");
    }
  }

  std::size_t best = g_count;
  for (std::size_t gi = 0; gi < g_count; ++gi) {
    double sum = 0.0;
    int used = 0;
    for (int f = 0; f < k; ++f) {
      if (degenerate[static_cast<std::size_t>(f)]) continue;
      sum += scores[static_cast<std::size_t>(f)][gi].r2;
      ++used;
    }
    const double mean = used > 0 ? sum / used : kNaN;
    report.mean_cv_r2_by_lambda.push_back(mean);
    if (used == 0) continue;
    if (best == g_count || mean > report.mean_cv_r2_by_lambda[best] ||
        (mean == report.mean_cv_r2_by_lambda[best] && grid[gi] > grid[best])) {
      best = gi;
    }
  }
  if (best == g_count) throw NumericalError("grid_search_cv: every fold is degenerate (constant targets)");

  report.chosen_lambda = grid[best];
  report.mean_cv_r2 = report.mean_cv_r2_by_lambda[best];
  double cod_sum = 0.0;
  int used = 0;
  for (int f = 0; f < k; ++f) {
    const auto fs = static_cast<std::size_t>(f);
    if (degenerate[fs]) {
      report.per_fold_r2.push_back(kNaN);
      report.per_fold_r2_cod.push_back(kNaN);
      continue;
    }
    const FoldScore& s = scores[fs][best];
    report.per_fold_r2.push_back(s.r2);
    report.per_fold_r2_cod.push_back(s.cod);
    cod_sum += s.cod;
    ++used;
    if (s.zero_variance_prediction) {
      report.warnings.push_back("fold " + std::to_string(f) + " predictions are constant at the chosen lambda; scored 0");
    }
  }
  report.mean_cv_r2_cod = cod_sum / used;

  report.weights = fit_ridge(x, y, report.chosen_lambda, intercept);
  const Eigen::VectorXd fitted = (x * report.weights.weights).array() + report.weights.intercept;
  if (is_constant(y)) {
    report.full_data_r2 = kNaN;
    report.full_data_r2_cod = kNaN;
  } else {
    const FoldScore full = score_fold(fitted, y);
    report.full_data_r2 = full.r2;
    report.full_data_r2_cod = full.cod;
  }
  return report;
}

PipelineResult fit_pipeline(const FeatureMatrix& f, const SimilarityMatrix& s, const PipelineConfig& config) {
  validate_alignment(f, s);
  const FeatureMatrix features = config.normalize_rows ? normalize_rows(f) : f;
  DesignMatrix design = build_design_matrix(features);
  const TargetVector y = extract_targets(s, design.pair_index);
  const FoldAssignment folds = kfold_split(design.pair_index.size(), config.folds, config.seed);

  GridSearchOptions options;
  options.fit_intercept = config.fit_intercept;
  options.threads = config.threads;

  Eigen::RowVectorXd center = Eigen::RowVectorXd::Zero(features.dim());
  Eigen::RowVectorXd scale = Eigen::RowVectorXd::Ones(features.dim());
  if (config.standardize) {
    const Eigen::RowVectorXd mean = design.rows.colwise().mean();
    for (Index k = 0; k < design.rows.cols(); ++k) {
      const double sd = std::sqrt((design.rows.col(k).array() - mean(k)).square().mean());
      scale(k) = sd > 0.0 ? sd : 1.0;
    }
    if (config.fit_intercept) center = mean;
    design.rows = (design.rows.rowwise() - center).array().rowwise() / scale.array();
  }

  FitReport report = grid_search_cv(design.rows, y, config.lambda_grid, folds, options);
  if (config.standardize) {
    WeightVector& w = report.weights;
    w.weights = w.weights.array() / scale.transpose().array();
    w.intercept -= center.dot(w.weights);
  }
  SimilarityMatrix predicted = predict_similarity(features, report.weights);
  return PipelineResult{std::move(report), std::move(predicted)};
}

} // namespace simalign
