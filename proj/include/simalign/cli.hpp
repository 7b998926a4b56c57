#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "simalign/ridgefit.hpp"

namespace simalign::cli {

/// Fully resolved run configuration. Loaded from a JSON config file (keys as
/// below), then overridden by command-line flags, and echoed into every report.
struct RunConfig {
  std::vector<std::string> features;
  std::string similarity;
  std::string labels;
  std::string weights;
  std::string out = "out";

  int folds = 6;
  std::uint64_t seed = 0;
  std::vector<double> grid = default_lambda_grid();
  bool fit_intercept = true;
  bool standardize = false;
  bool normalize = false;
  int threads = 0;

  std::string linkage = "average";
  long mds_dims = 2;
  std::string dissimilarity = "max-shift";

  std::vector<std::string> baselines = {"rows", "columns", "combined"};
  std::vector<std::uint64_t> baseline_seeds = {0, 1, 2, 3, 4};

  bool nonneg = false;
  double alpha = 1e-3;
  double l1_ratio = 0.5;
  std::vector<double> alpha_grid;  // optional; selects alpha by CV when non-empty

  double l2 = 1e-2;
};

/// Entry point shared by the executable and the tests. Returns the process
/// exit status: 0 on success, nonzero when any stage fails.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace simalign::cli
