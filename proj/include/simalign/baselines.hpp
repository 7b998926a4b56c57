#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "simalign/datamodel.hpp"

namespace simalign {

// Randomized feature controls. Each keeps the item identifiers in their
// original order so the shuffled features no longer belong to their items.

/// Rows permuted by a uniform permutation (fixed points allowed).
FeatureMatrix shuffle_rows(const FeatureMatrix& f, std::uint64_t seed);

/// Each row's values permuted by its own independent uniform permutation.
FeatureMatrix permute_columns_per_row(const FeatureMatrix& f, std::uint64_t seed);

/// shuffle_rows followed by permute_columns_per_row, each with a sub-seed derived from `seed`.
FeatureMatrix combined_shuffle(const FeatureMatrix& f, std::uint64_t seed);

enum class BaselineKind { RowShuffle = 1, ColumnPermutation = 2, Combined = 3 };

FeatureMatrix apply_baseline(BaselineKind kind, const FeatureMatrix& f, std::uint64_t seed);

// Accepts "1"/"rows", "2"/"columns", "3"/"combined".
BaselineKind parse_baseline_kind(std::string_view text);
std::string to_string(BaselineKind kind);

} // namespace simalign
