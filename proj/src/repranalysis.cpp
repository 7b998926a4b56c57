#include "simalign/repranalysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <tuple>

#include "simalign/error.hpp"
#include "simalign/simcore.hpp"

namespace simalign {

DissimilarityMatrix::DissimilarityMatrix(ItemList items, Eigen::MatrixXd values)
    : items_(std::move(items)), values_(std::move(values)) {
  if (values_.rows() != values_.cols()) throw ValidationError("DissimilarityMatrix: matrix is not square");
  if (static_cast<Index>(items_.size()) != values_.rows()) {
    throw ValidationError("DissimilarityMatrix: identifier count does not match matrix size");
  }
  if (!values_.allFinite()) throw ValidationError("DissimilarityMatrix: non-finite entry");
  for (Index i = 0; i < values_.rows(); ++i) {
    if (values_(i, i) != 0.0) throw ValidationError("DissimilarityMatrix: nonzero diagonal");
    for (Index j = 0; j < values_.cols(); ++j) {
      if (values_(i, j) < 0.0) throw ValidationError("DissimilarityMatrix: negative entry");
      if (std::abs(values_(i, j) - values_(j, i)) > SimilarityMatrix::kSymmetryTolerance) {
        throw ValidationError("DissimilarityMatrix: asymmetric");
      }
    }
  }
}

DissimilarityMatrix to_dissimilarity(const SimilarityMatrix& s, DissimilarityMethod method) {
  const Index n = s.size();
  const auto& v = s.values();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  if (method == DissimilarityMethod::MaxShift) {
    if (n < 2) throw ValidationError("to_dissimilarity: need at least 2 items");
    double s_max = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) s_max = std::max(s_max, v(i, j));
    }
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = s_max - v(i, j);
    }
  } else {
    if (!s.has_diagonal()) {
      throw ValidationError(
          "to_dissimilarity: gram-distance needs self-similarities but this matrix has no diagonal; use max-shift");
    }
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        d(i, j) = d(j, i) = std::sqrt(std::max(0.0, v(i, i) + v(j, j) - 2.0 * v(i, j)));
      }
    }
  }
  return DissimilarityMatrix(s.items(), std::move(d));
}

Embedding classical_mds(const DissimilarityMatrix& d, Index dims) {
  const Index n = d.size();
  if (dims < 1 || dims > n - 1) {
    throw ValidationError("classical_mds: dimensions must be in [1, " + std::to_string(n - 1) + "], got " +
                          std::to_string(dims));
  }
  const Eigen::MatrixXd d2 = d.values().array().square();
  const Eigen::VectorXd row_mean = d2.rowwise().mean();
  const double grand_mean = row_mean.mean();
  Eigen::MatrixXd b = d2;
  b.colwise() -= row_mean;
  b.rowwise() -= row_mean.transpose();
  b.array() += grand_mean;
  b *= -0.5;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  if (eig.info() != Eigen::Success) throw NumericalError("classical_mds: eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double scale = values.cwiseAbs().maxCoeff();
  const double positive_floor = 1e-10 * scale;

  Embedding out;
  out.items = d.items();
  out.coords = Eigen::MatrixXd::Zero(n, dims);
  out.eigenvalues.resize(dims);
  out.zero_filled.assign(static_cast<std::size_t>(dims), false);
  for (Index c = 0; c < dims; ++c) {
    const Index src = n - 1 - c;
    const double lambda = values(src);
    out.eigenvalues(c) = lambda;
    if (!(lambda > positive_floor)) {
      out.zero_filled[static_cast<std::size_t>(c)] = true;
      continue;
    }
    Eigen::VectorXd vec = eig.eigenvectors().col(src);
    Index pivot = 0;
    vec.cwiseAbs().maxCoeff(&pivot);
    if (vec(pivot) < 0.0) vec = -vec;
    out.coords.col(c) = vec * std::sqrt(lambda);
  }
  const auto filled = std::count(out.zero_filled.begin(), out.zero_filled.end(), true);
  if (filled > 0) {
    out.warnings.push_back(std::to_string(filled) + " of " + std::to_string(dims) +
                           " requested dimensions have non-positive eigenvalues and were zero-filled");
  }
  const Index negative = (values.array() < -positive_floor).count();
  if (negative > 0) {
    out.warnings.push_back("double-centered matrix has " + std::to_string(negative) +
                           " negative eigenvalues (dissimilarities are not Euclidean)");
  }
  return out;
}

double procrustes_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, bool standardize) {
  if (a.rows() != b.rows()) throw ValidationError("procrustes_residual: configurations differ in point count");
  const Index p = std::max(a.cols(), b.cols());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(a.rows(), p);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(b.rows(), p);
  x.leftCols(a.cols()) = a;
  y.leftCols(b.cols()) = b;
  x.rowwise() -= x.colwise().mean();
  y.rowwise() -= y.colwise().mean();
  if (standardize) {
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx == 0.0 || ny == 0.0) throw UndefinedMetricError("procrustes_residual: degenerate configuration");
    x /= nx;
    y /= ny;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(y.transpose() * x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (standardize) {
    const double trace = svd.singularValues().sum();
    return std::max(0.0, 1.0 - trace * trace);
  }
  const Eigen::MatrixXd rotation = svd.matrixU() * svd.matrixV().transpose();
  return (y * rotation - x).squaredNorm();
}

Dendrogram hierarchical_cluster(const DissimilarityMatrix& d, Linkage linkage) {
  const Index n = d.size();
  if (n < 2) throw ValidationError("hierarchical_cluster: need at least 2 items");

  // Slot s holds the live cluster with id cluster_id[s]; merged clusters reuse the lower slot.
  Eigen::MatrixXd dist = d.values();
  std::vector<int> cluster_id(static_cast<std::size_t>(n));
  std::vector<int> size(static_cast<std::size_t>(n), 1);
  std::vector<char> alive(static_cast<std::size_t>(n), 1);
  for (Index s = 0; s < n; ++s) cluster_id[static_cast<std::size_t>(s)] = static_cast<int>(s);

  Dendrogram tree;
  tree.leaves = d.items();
  double last_height = 0.0;
  for (Index step = 0; step < n - 1; ++step) {
    Index best_i = -1;
    Index best_j = -1;
    std::tuple<double, int, int> best_key{std::numeric_limits<double>::infinity(), 0, 0};
    for (Index i = 0; i < n; ++i) {
      if (!alive[static_cast<std::size_t>(i)]) continue;
      for (Index j = i + 1; j < n; ++j) {
        if (!alive[static_cast<std::size_t>(j)]) continue;
        const int ci = cluster_id[static_cast<std::size_t>(i)];
        const int cj = cluster_id[static_cast<std::size_t>(j)];
        const std::tuple<double, int, int> key{dist(i, j), std::min(ci, cj), std::max(ci, cj)};
        if (best_i < 0 || key < best_key) {
          best_key = key;
          best_i = i;
          best_j = j;
        }
      }
    }

    const auto si = static_cast<std::size_t>(best_i);
    const auto sj = static_cast<std::size_t>(best_j);
    const double ni = size[si];
    const double nj = size[sj];
    for (Index c = 0; c < n; ++c) {
      if (!alive[static_cast<std::size_t>(c)] || c == best_i || c == best_j) continue;
      double merged = 0.0;
      switch (linkage) {
        case Linkage::Single:
          merged = std::min(dist(best_i, c), dist(best_j, c));
          break;
        case Linkage::Complete:
          merged = std::max(dist(best_i, c), dist(best_j, c));
          break;
        case Linkage::Average:
          merged = (ni * dist(best_i, c) + nj * dist(best_j, c)) / (ni + nj);
          break;
      }
      dist(best_i, c) = dist(c, best_i) = merged;
    }

    // Average-linkage heights are monotone in exact arithmetic; rounding can
    // undershoot the previous height by an ulp.
    const double height = std::max(std::get<0>(best_key), last_height);
    last_height = height;
    tree.merges.push_back(Merge{std::get<1>(best_key), std::get<2>(best_key), height, size[si] + size[sj]});
    cluster_id[si] = static_cast<int>(n + step);
    size[si] += size[sj];
    alive[sj] = 0;
  }
  return tree;
}

namespace {

std::string newick_label(const std::string& name) {
  if (name.find_first_of(" \t\n()[]':;,") == std::string::npos && !name.empty()) return name;
  std::string quoted = "'";
  for (char c : name) {
    if (c == '\'') quoted += '\'';
    quoted += c;
  }
  return quoted + "'";
}

} // namespace

std::string to_newick(const Dendrogram& tree) {
  const auto n = static_cast<int>(tree.leaves.size());
  std::vector<std::string> text(static_cast<std::size_t>(n) + tree.merges.size());
  std::vector<double> height(text.size(), 0.0);
  for (int i = 0; i < n; ++i) text[static_cast<std::size_t>(i)] = newick_label(tree.leaves[static_cast<std::size_t>(i)]);
  for (std::size_t t = 0; t < tree.merges.size(); ++t) {
    const Merge& m = tree.merges[t];
    const auto node = static_cast<std::size_t>(n) + t;
    const auto a = static_cast<std::size_t>(m.a);
    const auto b = static_cast<std::size_t>(m.b);
    height[node] = m.height;
    text[node] = "(" + text[a] + ":" + format_double(m.height - height[a]) + "," + text[b] + ":" +
                 format_double(m.height - height[b]) + ")";
    text[a].clear();
    text[b].clear();
  }
  return (tree.merges.empty() ? text.front() : text.back()) + ";";
}

void write_merge_table(const Dendrogram& tree, std::ostream& out) {
  out << "a,b,height,size\n";
  for (const auto& m : tree.merges) out << m.a << ',' << m.b << ',' << format_double(m.height) << ',' << m.size << '\n';
}

void write_embedding(const Embedding& e, std::ostream& out) {
  out << "id";
  for (Index c = 0; c < e.coords.cols(); ++c) out << ",x" << (c + 1);
  out << '\n';
  for (Index i = 0; i < e.coords.rows(); ++i) {
    out << e.items[static_cast<std::size_t>(i)];
    for (Index c = 0; c < e.coords.cols(); ++c) out << ',' << format_double(e.coords(i, c));
    out << '\n';
  }
}

void write_eigenvalues(const Embedding& e, std::ostream& out) {
  out << "dimension,eigenvalue,zero_filled\n";
  for (Index c = 0; c < e.eigenvalues.size(); ++c) {
    out << (c + 1) << ',' << format_double(e.eigenvalues(c)) << ','
        << (e.zero_filled[static_cast<std::size_t>(c)] ? "true" : "false") << '\n';
  }
}

ComparisonReport compare_representations(const SimilarityMatrix& a, const SimilarityMatrix& b,
                                         const AnalysisOptions& options) {
  validate_alignment(a.items(), b.items());
  const PairIndex pairs(a.size());
  ComparisonReport report;
  report.r2 = r_squared(extract_targets(a, pairs), extract_targets(b, pairs));
  const auto da = to_dissimilarity(a, options.method);
  const auto db = to_dissimilarity(b, options.method);
  report.embedding_a = classical_mds(da, options.mds_dims);
  report.embedding_b = classical_mds(db, options.mds_dims);
  report.dendrogram_a = hierarchical_cluster(da, options.linkage);
  report.dendrogram_b = hierarchical_cluster(db, options.linkage);
  try {
    report.procrustes_disparity = procrustes_residual(report.embedding_a.coords, report.embedding_b.coords, true);
  } catch (const UndefinedMetricError&) {
    report.procrustes_disparity = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

DissimilarityMethod parse_dissimilarity_method(std::string_view text) {
  if (text == "max-shift") return DissimilarityMethod::MaxShift;
  if (text == "gram-distance") return DissimilarityMethod::GramDistance;
  throw ValidationError("unknown dissimilarity method '" + std::string(text) + "' (expected max-shift|gram-distance)");
}

Linkage parse_linkage(std::string_view text) {
  if (text == "average") return Linkage::Average;
  if (text == "complete") return Linkage::Complete;
  if (text == "single") return Linkage::Single;
  throw ValidationError("unknown linkage '" + std::string(text) + "' (expected average|complete|single)");
}

std::string to_string(DissimilarityMethod method) {
  return method == DissimilarityMethod::MaxShift ? "max-shift" : "gram-distance";
}

std::string to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::Average:
      return "average";
    case Linkage::Complete:
      return "complete";
    case Linkage::Single:
      return "single";
  }
  return "unknown";
}

} // namespace simalign
