#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace simalign {

using Index = Eigen::Index;
using ItemList = std::vector<std::string>;

/// N stimuli x d features. Row order is the canonical stimulus order used by
/// every derived artifact.
class FeatureMatrix {
public:
  // Throws ValidationError unless N >= 2, d >= 1, all values finite and ids unique.
  // Empty feature_names are replaced by f0..f{d-1}.
  FeatureMatrix(ItemList items, Eigen::MatrixXd values, std::string label = {},
                std::vector<std::string> feature_names = {});

  const ItemList& items() const { return items_; }
  const Eigen::MatrixXd& values() const { return values_; }
  const std::string& label() const { return label_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  Index size() const { return values_.rows(); }
  Index dim() const { return values_.cols(); }

private:
  ItemList items_;
  Eigen::MatrixXd values_;
  std::string label_;
  std::vector<std::string> feature_names_;
};

/// Symmetric N x N similarity judgments or predictions.
///
/// `has_diagonal` is false when the source never defined self-similarity
/// (blank diagonal in the file); the stored diagonal is then zero and must not
/// be interpreted.
class SimilarityMatrix {
public:
  static constexpr double kSymmetryTolerance = 1e-9;

  SimilarityMatrix(ItemList items, Eigen::MatrixXd values, bool has_diagonal = true);

  const ItemList& items() const { return items_; }
  const Eigen::MatrixXd& values() const { return values_; }
  bool has_diagonal() const { return has_diagonal_; }
  Index size() const { return values_.rows(); }

private:
  ItemList items_;
  Eigen::MatrixXd values_;
  bool has_diagonal_;
};

/// Upper-triangle pairs (i, j), i < j, in lexicographic order.
class PairIndex {
public:
  explicit PairIndex(Index item_count);

  Index item_count() const { return item_count_; }
  Index size() const { return static_cast<Index>(pairs_.size()); }
  const std::pair<Index, Index>& operator[](Index m) const { return pairs_[static_cast<std::size_t>(m)]; }
  auto begin() const { return pairs_.begin(); }
  auto end() const { return pairs_.end(); }

private:
  Index item_count_;
  std::vector<std::pair<Index, Index>> pairs_;
};

/// Diagonal of W plus an optional (unpenalized) intercept.
struct WeightVector {
  Eigen::VectorXd weights;
  double intercept = 0.0;
};

// Shortest decimal text that reads back to the identical double (at most 17 significant digits).
std::string format_double(double value);

FeatureMatrix load_feature_matrix(const std::filesystem::path& path);
FeatureMatrix read_feature_matrix(std::istream& in, const std::string& source_name);
void write_feature_matrix(const FeatureMatrix& f, const std::filesystem::path& path);
void write_feature_matrix(const FeatureMatrix& f, std::ostream& out);

SimilarityMatrix load_similarity_matrix(const std::filesystem::path& path);
SimilarityMatrix read_similarity_matrix(std::istream& in, const std::string& source_name);
void write_similarity_matrix(const SimilarityMatrix& s, const std::filesystem::path& path);
void write_similarity_matrix(const SimilarityMatrix& s, std::ostream& out);

// Weight files share the feature-file layout: header "id,<feature names>", one row "weights,...".
// The intercept is not part of the file and is read back as 0.
WeightVector load_weight_vector(const std::filesystem::path& path);
void write_weight_vector(const WeightVector& w, const std::vector<std::string>& feature_names,
                         const std::filesystem::path& path);

/// Succeeds iff both identifier lists are equal element by element.
/// Throws AlignmentError (Length, Order with first differing position, or Set).
void validate_alignment(const ItemList& expected, const ItemList& actual);
void validate_alignment(const FeatureMatrix& f, const SimilarityMatrix& s);

} // namespace simalign
