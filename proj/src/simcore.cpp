#include "simalign/simcore.hpp"

#include <cmath>

#include "simalign/error.hpp"

namespace simalign {

namespace {

// Shared by gram_similarity and predict_similarity so that unit weights
// reproduce the Gram matrix bit for bit (same products, same summation order).
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& f, const double* weights, double intercept) {
  const Index n = f.rows();
  const Index d = f.cols();
  Eigen::MatrixXd s(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      double acc = 0.0;
      for (Index k = 0; k < d; ++k) {
        const double fik = weights ? weights[k] * f(i, k) : f(i, k);
        acc += fik * f(j, k);
      }
      s(i, j) = s(j, i) = acc + intercept;
    }
  }
  return s;
}

} // namespace

SimilarityMatrix gram_similarity(const FeatureMatrix& f) {
  return SimilarityMatrix(f.items(), weighted_gram(f.values(), nullptr, 0.0));
}

FeatureMatrix normalize_rows(const FeatureMatrix& f) {
  Eigen::MatrixXd values = f.values();
  for (Index i = 0; i < values.rows(); ++i) {
    const double norm = values.row(i).norm();
    if (norm > 0.0) values.row(i) /= norm;
  }
  return FeatureMatrix(f.items(), std::move(values), f.label(), f.feature_names());
}

DesignMatrix build_design_matrix(const FeatureMatrix& f) {
  PairIndex pairs(f.size());
  Eigen::MatrixXd rows(pairs.size(), f.dim());
  const auto& v = f.values();
  for (Index m = 0; m < pairs.size(); ++m) {
    const auto [i, j] = pairs[m];
    rows.row(m) = v.row(i).cwiseProduct(v.row(j));
  }
  return DesignMatrix{std::move(rows), std::move(pairs)};
}

TargetVector extract_targets(const SimilarityMatrix& s, const PairIndex& pairs) {
  if (pairs.item_count() != s.size()) {
    throw ValidationError("extract_targets: pair index built for " + std::to_string(pairs.item_count()) +
                          " items, similarity matrix has " + std::to_string(s.size()));
  }
  TargetVector y(pairs.size());
  for (Index m = 0; m < pairs.size(); ++m) {
    const auto [i, j] = pairs[m];
    y(m) = s.values()(i, j);
  }
  return y;
}

SimilarityMatrix predict_similarity(const FeatureMatrix& f, const WeightVector& w) {
  if (w.weights.size() != f.dim()) {
    throw ValidationError("predict_similarity: " + std::to_string(w.weights.size()) + " weights for " +
                          std::to_string(f.dim()) + " features");
  }
  if (!w.weights.allFinite() || !std::isfinite(w.intercept)) {
    throw ValidationError("predict_similarity: non-finite weight");
  }
  return SimilarityMatrix(f.items(), weighted_gram(f.values(), w.weights.data(), w.intercept));
}

double r_squared(const Eigen::Ref<const Eigen::VectorXd>& predicted, const Eigen::Ref<const Eigen::VectorXd>& observed) {
  if (predicted.size() != observed.size()) throw UndefinedMetricError("r_squared: length mismatch");
  if (predicted.size() < 2) throw UndefinedMetricError("r_squared: need at least 2 values");
  const Eigen::VectorXd a = predicted.array() - predicted.mean();
  const Eigen::VectorXd b = observed.array() - observed.mean();
  const double saa = a.squaredNorm();
  const double sbb = b.squaredNorm();
  if (saa == 0.0) throw UndefinedMetricError("r_squared: predicted values have zero variance");
  if (sbb == 0.0) throw UndefinedMetricError("r_squared: observed values have zero variance");
  const double r = a.dot(b) / std::sqrt(saa * sbb);
  return std::min(1.0, r * r);
}

double coefficient_of_determination(const Eigen::Ref<const Eigen::VectorXd>& predicted,
                                    const Eigen::Ref<const Eigen::VectorXd>& observed) {
  if (predicted.size() != observed.size() || observed.size() < 2) {
    throw UndefinedMetricError("coefficient_of_determination: need equal lengths >= 2");
  }
  const double sst = (observed.array() - observed.mean()).square().sum();
  if (sst == 0.0) throw UndefinedMetricError("coefficient_of_determination: observed values have zero variance");
  return 1.0 - (observed - predicted).squaredNorm() / sst;
}

} // namespace simalign
