#pragma once

#include "simalign/datamodel.hpp"

namespace simalign {

/// Regression predictors for the upper-triangle similarities: the row for
/// pair (i, j) holds the elementwise product of feature rows i and j.
struct DesignMatrix {
  Eigen::MatrixXd rows;  // M x d, M = N(N-1)/2
  PairIndex pair_index;
};

/// Upper-triangle similarities in PairIndex order.
using TargetVector = Eigen::VectorXd;

/// s_ij = sum_k f_ik f_jk (raw dot products, diagonal included).
SimilarityMatrix gram_similarity(const FeatureMatrix& f);

/// Scales every row to unit Euclidean norm, so that the Gram matrix becomes
/// cosine similarity. All-zero rows are left untouched.
FeatureMatrix normalize_rows(const FeatureMatrix& f);

DesignMatrix build_design_matrix(const FeatureMatrix& f);

/// values[m] = s_ij for the m-th pair. Throws ValidationError if `pairs` was
/// built for a different item count.
TargetVector extract_targets(const SimilarityMatrix& s, const PairIndex& pairs);

/// s_ij = intercept + sum_k w_k f_ik f_jk for all i, j (diagonal included).
SimilarityMatrix predict_similarity(const FeatureMatrix& f, const WeightVector& w);

/// Squared Pearson correlation. Throws UndefinedMetricError when either
/// vector is constant or the lengths differ / are below 2.
double r_squared(const Eigen::Ref<const Eigen::VectorXd>& predicted, const Eigen::Ref<const Eigen::VectorXd>& observed);

/// Coefficient of determination 1 - SSE/SST. Reported alongside r_squared,
/// never used for model selection.
double coefficient_of_determination(const Eigen::Ref<const Eigen::VectorXd>& predicted,
                                    const Eigen::Ref<const Eigen::VectorXd>& observed);

} // namespace simalign
