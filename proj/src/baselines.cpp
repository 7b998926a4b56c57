#include "simalign/baselines.hpp"

#include "simalign/error.hpp"
#include "simalign/rng.hpp"

namespace simalign {

namespace {

constexpr std::uint64_t kRowStream = 1;
constexpr std::uint64_t kColumnStream = 2;

} // namespace

FeatureMatrix shuffle_rows(const FeatureMatrix& f, std::uint64_t seed) {
  Rng rng(seed);
  const auto perm = rng.permutation(static_cast<std::size_t>(f.size()));
  Eigen::MatrixXd values(f.size(), f.dim());
  for (Index i = 0; i < f.size(); ++i) values.row(i) = f.values().row(static_cast<Index>(perm[static_cast<std::size_t>(i)]));
  return FeatureMatrix(f.items(), std::move(values), f.label() + "+shuffle_rows", f.feature_names());
}

FeatureMatrix permute_columns_per_row(const FeatureMatrix& f, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd values(f.size(), f.dim());
  for (Index i = 0; i < f.size(); ++i) {
    const auto perm = rng.permutation(static_cast<std::size_t>(f.dim()));
    for (Index k = 0; k < f.dim(); ++k) values(i, k) = f.values()(i, static_cast<Index>(perm[static_cast<std::size_t>(k)]));
  }
  return FeatureMatrix(f.items(), std::move(values), f.label() + "+permute_columns", f.feature_names());
}

FeatureMatrix combined_shuffle(const FeatureMatrix& f, std::uint64_t seed) {
  const FeatureMatrix rows = shuffle_rows(f, derive_seed(seed, kRowStream));
  FeatureMatrix both = permute_columns_per_row(rows, derive_seed(seed, kColumnStream));
  return FeatureMatrix(both.items(), both.values(), f.label() + "+combined_shuffle", f.feature_names());
}

FeatureMatrix apply_baseline(BaselineKind kind, const FeatureMatrix& f, std::uint64_t seed) {
  switch (kind) {
    case BaselineKind::RowShuffle:
      return shuffle_rows(f, seed);
    case BaselineKind::ColumnPermutation:
      return permute_columns_per_row(f, seed);
    case BaselineKind::Combined:
      return combined_shuffle(f, seed);
  }
  throw ValidationError("unknown baseline kind");
}

BaselineKind parse_baseline_kind(std::string_view text) {
  if (text == "1" || text == "rows") return BaselineKind::RowShuffle;
  if (text == "2" || text == "columns") return BaselineKind::ColumnPermutation;
  if (text == "3" || text == "combined") return BaselineKind::Combined;
  throw ValidationError("unknown baseline kind '" + std::string(text) + "' (expected 1|rows, 2|columns, 3|combined)");
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::RowShuffle:
      return "rows";
    case BaselineKind::ColumnPermutation:
      return "columns";
    case BaselineKind::Combined:
      return "combined";
  }
  return "unknown";
}

} // namespace simalign
