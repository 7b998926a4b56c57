#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "simalign/datamodel.hpp"

namespace simalign {

/// Symmetric, nonnegative, zero diagonal.
class DissimilarityMatrix {
public:
  DissimilarityMatrix(ItemList items, Eigen::MatrixXd values);

  const ItemList& items() const { return items_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Index size() const { return values_.rows(); }

private:
  ItemList items_;
  Eigen::MatrixXd values_;
};

enum class DissimilarityMethod {
  MaxShift,      // d_ij = max_{off-diagonal} s - s_ij
  GramDistance,  // d_ij = sqrt(max(0, s_ii + s_jj - 2 s_ij)); needs a defined diagonal
};

DissimilarityMatrix to_dissimilarity(const SimilarityMatrix& s, DissimilarityMethod method = DissimilarityMethod::MaxShift);

struct Embedding {
  ItemList items;
  Eigen::MatrixXd coords;       // N x p, columns centered
  Eigen::VectorXd eigenvalues;  // top-p eigenvalues of the double-centered matrix, descending
  std::vector<bool> zero_filled;  // dimension had a non-positive eigenvalue; its column is zero
  std::vector<std::string> warnings;
};

/// Classical (Torgerson) scaling: B = -1/2 J D^2 J, coords = V_p sqrt(Lambda_p).
/// Dimensions whose eigenvalue is not positive are zero-filled and flagged.
/// Each eigenvector is signed so that its largest-magnitude entry is positive.
Embedding classical_mds(const DissimilarityMatrix& d, Index dims);

/// Squared-error residual after optimally translating and rotating/reflecting
/// `b` onto `a` (no scaling). With `standardize`, both configurations are first
/// centered and scaled to unit Frobenius norm and optimal scaling is allowed,
/// giving a disparity in [0, 1]. Narrower configurations are zero-padded.
double procrustes_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, bool standardize = false);

enum class Linkage { Average, Complete, Single };

struct Merge {
  int a = 0;  // cluster ids: leaves are 0..N-1, the t-th merge creates N+t; a < b
  int b = 0;
  double height = 0.0;
  int size = 0;
};

struct Dendrogram {
  ItemList leaves;
  std::vector<Merge> merges;  // N-1 entries, heights nondecreasing
};

/// Agglomerative clustering. At equal height the pair with the smallest
/// (lower id, higher id) is merged first.
Dendrogram hierarchical_cluster(const DissimilarityMatrix& d, Linkage linkage = Linkage::Average);

std::string to_newick(const Dendrogram& tree);
void write_merge_table(const Dendrogram& tree, std::ostream& out);
void write_embedding(const Embedding& e, std::ostream& out);
void write_eigenvalues(const Embedding& e, std::ostream& out);

struct AnalysisOptions {
  DissimilarityMethod method = DissimilarityMethod::MaxShift;
  Index mds_dims = 2;
  Linkage linkage = Linkage::Average;
};

struct ComparisonReport {
  double r2 = 0.0;  // squared Pearson over the upper triangle
  Embedding embedding_a;
  Embedding embedding_b;
  Dendrogram dendrogram_a;
  Dendrogram dendrogram_b;
  double procrustes_disparity = 0.0;  // standardized residual between the two embeddings
};

ComparisonReport compare_representations(const SimilarityMatrix& a, const SimilarityMatrix& b,
                                         const AnalysisOptions& options = {});

DissimilarityMethod parse_dissimilarity_method(std::string_view text);
Linkage parse_linkage(std::string_view text);
std::string to_string(DissimilarityMethod method);
std::string to_string(Linkage linkage);

} // namespace simalign
