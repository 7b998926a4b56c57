#include "simalign/reclassify.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "parallel.hpp"
#include "simalign/error.hpp"
#include "simalign/rng.hpp"
#include "simalign/simcore.hpp"

namespace simalign {

// ---------------------------------------------------------------------------
// Nonnegative elastic net

namespace {

double elastic_net_objective(const Eigen::VectorXd& residual, const Eigen::VectorXd& w, double alpha,
                             double l1_ratio) {
  const double m = static_cast<double>(residual.size());
  return residual.squaredNorm() / (2.0 * m) +
         alpha * (l1_ratio * w.sum() + 0.5 * (1.0 - l1_ratio) * w.squaredNorm());
}

// Largest violation of the KKT conditions for w >= 0.
double kkt_violation(const Eigen::MatrixXd& xc, const Eigen::VectorXd& residual, const Eigen::VectorXd& w,
                     double alpha, double l1_ratio) {
  const double m = static_cast<double>(residual.size());
  const Eigen::VectorXd grad =
      (-(xc.transpose() * residual) / m).array() + alpha * l1_ratio + alpha * (1.0 - l1_ratio) * w.array();
  double worst = 0.0;
  for (Index k = 0; k < w.size(); ++k) {
    worst = std::max(worst, w(k) > 0.0 ? std::abs(grad(k)) : std::max(0.0, -grad(k)));
  }
  return worst;
}

} // namespace

ElasticNetFit solve_nonneg_elastic_net(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                                       double l1_ratio, const ElasticNetOptions& options) {
  if (x.rows() != y.size() || x.rows() < 1) throw ValidationError("elastic net: design rows do not match targets");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("elastic net: alpha must be positive");
  if (!(l1_ratio >= 0.0 && l1_ratio <= 1.0)) throw ValidationError("elastic net: l1_ratio must lie in [0, 1]");

  const Index m = x.rows();
  const Index d = x.cols();
  Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(d);
  double y_mean = 0.0;
  if (options.fit_intercept) {
    x_mean = x.colwise().mean();
    y_mean = y.mean();
  }
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  Eigen::VectorXd residual = y.array() - y_mean;
  const Eigen::VectorXd curvature = xc.colwise().squaredNorm().transpose() / static_cast<double>(m);
  const double l1 = alpha * l1_ratio;
  const double l2 = alpha * (1.0 - l1_ratio);

  ElasticNetFit fit;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  bool converged = false;
  while (fit.sweeps < options.max_sweeps) {
    ++fit.sweeps;
    double max_delta = 0.0;
    for (Index k = 0; k < d; ++k) {
      const double denom = curvature(k) + l2;
      if (denom <= 0.0) continue;  // constant column with no ridge term: w_k stays 0
      const double z = xc.col(k).dot(residual) / static_cast<double>(m) + curvature(k) * w(k);
      const double updated = std::max(0.0, z - l1) / denom;
      const double delta = updated - w(k);
      if (delta != 0.0) {
        residual.noalias() -= delta * xc.col(k);
        w(k) = updated;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (options.record_objective) fit.objective_trace.push_back(elastic_net_objective(residual, w, alpha, l1_ratio));
    if (max_delta < options.tolerance * (1.0 + w.cwiseAbs().maxCoeff())) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    const double gap = kkt_violation(xc, residual, w, alpha, l1_ratio);
    throw ConvergenceError("elastic net did not converge in " + std::to_string(fit.sweeps) +
                               " sweeps (KKT violation " + format_double(gap) + ")",
                           fit.sweeps, gap);
  }
  fit.weights.intercept = options.fit_intercept ? y_mean - x_mean.dot(w) : 0.0;
  fit.weights.weights = std::move(w);
  return fit;
}

WeightVector fit_nonneg_elastic_net(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double l1_ratio,
                                    const ElasticNetOptions& options) {
  return solve_nonneg_elastic_net(x, y, alpha, l1_ratio, options).weights;
}

ElasticNetSelection select_nonneg_elastic_net(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                              std::span<const double> alphas, double l1_ratio,
                                              const FoldAssignment& folds, const ElasticNetOptions& options,
                                              int threads) {
  if (alphas.empty()) throw ValidationError("elastic net: alpha grid is empty");
  if (folds.size() != x.rows()) throw ValidationError("elastic net: fold assignment size does not match rows");
  const auto k = static_cast<std::size_t>(folds.k);
  const std::size_t a_count = alphas.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> scores(k, std::vector<double>(a_count, nan));

  detail::parallel_for(k, threads, [&](std::size_t f) {
    std::vector<Index> train;
    std::vector<Index> test;
    for (Index r = 0; r < x.rows(); ++r) {
      (folds.fold_of_pair[static_cast<std::size_t>(r)] == static_cast<int>(f) ? test : train).push_back(r);
    }
    const Eigen::VectorXd yt = y(test);
    if ((yt.array() == yt(0)).all()) return;
    const Eigen::MatrixXd x_train = x(train, Eigen::all);
    const Eigen::VectorXd y_train = y(train);
    const Eigen::MatrixXd x_test = x(test, Eigen::all);
    for (std::size_t a = 0; a < a_count; ++a) {
      const WeightVector w = fit_nonneg_elastic_net(x_train, y_train, alphas[a], l1_ratio, options);
      const Eigen::VectorXd pred = (x_test * w.weights).array() + w.intercept;
      scores[f][a] = (pred.array() == pred(0)).all() ? 0.0 : r_squared(pred, yt);
    }
  });

  ElasticNetSelection out;
  out.alpha_grid.assign(alphas.begin(), alphas.end());
  std::size_t best = a_count;
  for (std::size_t a = 0; a < a_count; ++a) {
    double sum = 0.0;
    int used = 0;
    for (std::size_t f = 0; f < k; ++f) {
      if (std::isnan(scores[f][a])) continue;
      sum += scores[f][a];
      ++used;
    }
    const double mean = used > 0 ? sum / used : nan;
    out.mean_cv_r2_by_alpha.push_back(mean);
    if (used == 0) continue;
    if (best == a_count || mean > out.mean_cv_r2_by_alpha[best] ||
        (mean == out.mean_cv_r2_by_alpha[best] && alphas[a] > alphas[best])) {
      best = a;
    }
  }
  if (best == a_count) throw NumericalError("elastic net: every fold is degenerate (constant targets)");
  out.alpha = alphas[best];
  out.weights = fit_nonneg_elastic_net(x, y, out.alpha, l1_ratio, options);
  return out;
}

FeatureMatrix reweight_features(const FeatureMatrix& f, const WeightVector& w) {
  if (w.weights.size() != f.dim()) {
    throw ValidationError("reweight_features: " + std::to_string(w.weights.size()) + " weights for " +
                          std::to_string(f.dim()) + " features");
  }
  std::vector<Index> negative;
  for (Index k = 0; k < w.weights.size(); ++k) {
    if (!(w.weights(k) >= 0.0)) negative.push_back(k);
  }
  if (!negative.empty()) {
    std::ostringstream os;
    os << "reweight_features: " << negative.size() << " negative weight(s) at indices";
    for (std::size_t i = 0; i < negative.size() && i < 20; ++i) os << ' ' << negative[i];
    if (negative.size() > 20) os << " ...";
    os << "; weights must come from a nonnegative fit";
    throw ValidationError(os.str());
  }
  const Eigen::RowVectorXd root = w.weights.array().sqrt().transpose();
  Eigen::MatrixXd values = f.values().array().rowwise() * root.array();
  return FeatureMatrix(f.items(), std::move(values), f.label() + "+reweighted", f.feature_names());
}

// ---------------------------------------------------------------------------
// Labeled data

LabeledDataset::LabeledDataset(FeatureMatrix features, std::vector<int> labels, std::vector<std::string> class_names)
    : features_(std::move(features)), labels_(std::move(labels)), class_names_(std::move(class_names)) {
  if (static_cast<Index>(labels_.size()) != features_.size()) {
    throw ValidationError("LabeledDataset: label count does not match item count");
  }
  const int c = class_count();
  if (c < 2) throw ValidationError("LabeledDataset: need at least 2 classes");
  std::vector<int> counts(static_cast<std::size_t>(c), 0);
  for (int label : labels_) {
    if (label < 0 || label >= c) throw ValidationError("LabeledDataset: label out of range");
    ++counts[static_cast<std::size_t>(label)];
  }
  for (int k = 0; k < c; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) {
      throw ValidationError("LabeledDataset: class '" + class_names_[static_cast<std::size_t>(k)] + "' has no items");
    }
  }
}

LabeledDataset LabeledDataset::with_features(FeatureMatrix features) const {
  validate_alignment(features_.items(), features.items());
  return LabeledDataset(std::move(features), labels_, class_names_);
}

LabeledDataset load_labeled_dataset(const FeatureMatrix& features, const std::filesystem::path& label_path) {
  std::ifstream in(label_path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + label_path.string());
  const std::string source = label_path.string();
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::unordered_map<std::string, std::string> class_of;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ParseError(source, line_no, 0, "expected exactly 2 cells");
    }
    std::string id = line.substr(0, comma);
    std::string name = line.substr(comma + 1);
    if (!header) {
      if (id != "id" || name != "class_name") throw ParseError(source, line_no, 1, "header must be 'id,class_name'");
      header = true;
      continue;
    }
    if (id.empty() || name.empty()) throw ParseError(source, line_no, 0, "empty identifier or class name");
    if (!class_of.emplace(id, name).second) throw ParseError(source, line_no, 1, "duplicate identifier '" + id + "'");
  }
  if (!header) throw ParseError(source, 0, 0, "empty label file");
  if (class_of.size() != features.items().size()) {
    throw AlignmentError(AlignmentError::Kind::Length, -1,
                         "label file has " + std::to_string(class_of.size()) + " items, feature file has " +
                             std::to_string(features.items().size()));
  }

  std::set<std::string> names;
  for (const auto& [id, name] : class_of) names.insert(name);
  const std::vector<std::string> class_names(names.begin(), names.end());
  std::map<std::string, int> index_of;
  for (std::size_t c = 0; c < class_names.size(); ++c) index_of[class_names[c]] = static_cast<int>(c);

  std::vector<int> labels;
  labels.reserve(features.items().size());
  for (const auto& id : features.items()) {
    const auto it = class_of.find(id);
    if (it == class_of.end()) {
      throw AlignmentError(AlignmentError::Kind::Set, -1, "item '" + id + "' has no label in " + source);
    }
    labels.push_back(index_of.at(it->second));
  }
  return LabeledDataset(features, std::move(labels), class_names);
}

// ---------------------------------------------------------------------------
// Multinomial logistic regression

namespace {

// Parameters are packed as [W (d x C, column-major), b (C)].
struct SoftmaxProblem {
  const Eigen::MatrixXd& x;
  const std::vector<int>& labels;
  Eigen::MatrixXd onehot;  // N x C
  double l2;
  Index d;
  Index c;

  double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
    const Eigen::Map<const Eigen::MatrixXd> w(theta.data(), d, c);
    const Eigen::Map<const Eigen::VectorXd> b(theta.data() + d * c, c);
    Eigen::MatrixXd z = x * w;
    z.rowwise() += b.transpose();
    const double n = static_cast<double>(x.rows());
    double loss = 0.0;
    for (Index i = 0; i < z.rows(); ++i) {
      const double top = z.row(i).maxCoeff();
      const double own = z(i, labels[static_cast<std::size_t>(i)]);
      z.row(i).array() = (z.row(i).array() - top).exp();
      const double total = z.row(i).sum();
      loss += std::log(total) + top - own;
      z.row(i) /= total;
    }
    z -= onehot;  // now P - Y
    grad.resize(theta.size());
    Eigen::Map<Eigen::MatrixXd> gw(grad.data(), d, c);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + d * c, c);
    gw.noalias() = x.transpose() * z / n;
    gw += l2 * w;
    gb = z.colwise().sum().transpose() / n;
    return loss / n + 0.5 * l2 * w.squaredNorm();
  }
};

Eigen::MatrixXd softmax_rows(Eigen::MatrixXd z) {
  for (Index i = 0; i < z.rows(); ++i) {
    const double top = z.row(i).maxCoeff();
    z.row(i).array() = (z.row(i).array() - top).exp();
    z.row(i) /= z.row(i).sum();
  }
  return z;
}

} // namespace

Eigen::MatrixXd ClassifierModel::predict_proba(const Eigen::MatrixXd& x) const {
  const Index d = coefficients.cols() - 1;
  if (x.cols() != d) throw ValidationError("predict_proba: feature count does not match model");
  Eigen::MatrixXd z = x * coefficients.leftCols(d).transpose();
  z.rowwise() += coefficients.col(d).transpose();
  return softmax_rows(std::move(z));
}

std::vector<int> ClassifierModel::predict(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd p = predict_proba(x);
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Index i = 0; i < p.rows(); ++i) {
    Index best = 0;
    p.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

ClassifierModel fit_multinomial_logreg(const Eigen::MatrixXd& x, const std::vector<int>& labels, int classes, double l2,
                                       const LogRegOptions& options) {
  if (classes < 2) throw ValidationError("logistic regression: need at least 2 classes");
  if (static_cast<Index>(labels.size()) != x.rows() || x.rows() == 0) {
    throw ValidationError("logistic regression: label count does not match rows");
  }
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ValidationError("logistic regression: l2 must be finite and >= 0");

  const Index d = x.cols();
  const Index c = classes;
  SoftmaxProblem problem{x, labels, Eigen::MatrixXd::Zero(x.rows(), c), l2, d, c};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) throw ValidationError("logistic regression: label out of range");
    problem.onehot(static_cast<Index>(i), labels[i]) = 1.0;
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d * c + c);
  Eigen::VectorXd grad;
  double f = problem.evaluate(theta, grad);
  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;

  std::size_t iter = 0;
  while (grad.norm() >= options.gradient_tolerance) {
    if (iter >= options.max_iterations) {
      throw ConvergenceError("logistic regression did not converge in " + std::to_string(iter) +
                                 " iterations (gradient norm " + format_double(grad.norm()) + ")",
                             iter, grad.norm());
    }
    ++iter;

    // Two-loop recursion.
    Eigen::VectorXd q = grad;
    std::vector<double> a(s_hist.size());
    for (std::size_t h = s_hist.size(); h-- > 0;) {
      a[h] = rho_hist[h] * s_hist[h].dot(q);
      q -= a[h] * y_hist[h];
    }
    const double gamma = s_hist.empty() ? 1.0 / std::max(1.0, grad.norm())
                                        : s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    q *= gamma;
    for (std::size_t h = 0; h < s_hist.size(); ++h) {
      const double beta = rho_hist[h] * y_hist[h].dot(q);
      q += (a[h] - beta) * s_hist[h];
    }
    Eigen::VectorXd direction = -q;
    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -grad / std::max(1.0, grad.norm());
      slope = grad.dot(direction);
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    Eigen::VectorXd next;
    Eigen::VectorXd next_grad;
    double next_f = 0.0;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      next = theta + step * direction;
      next_f = problem.evaluate(next, next_grad);
      if (std::isfinite(next_f) && next_f <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Objective is flat to rounding; accept only if the gradient still shrank.
      if (next_grad.size() == grad.size() && std::isfinite(next_f) && next_grad.norm() < grad.norm()) {
        accepted = true;
      } else {
        throw ConvergenceError("logistic regression line search failed (gradient norm " + format_double(grad.norm()) +
                                   ")",
                               iter, grad.norm());
      }
    }

    Eigen::VectorXd s = next - theta;
    Eigen::VectorXd yv = next_grad - grad;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta = std::move(next);
    grad = std::move(next_grad);
    f = next_f;
  }

  ClassifierModel model;
  model.regularization = l2;
  model.iterations = iter;
  model.coefficients.resize(c, d + 1);
  model.coefficients.leftCols(d) = Eigen::Map<const Eigen::MatrixXd>(theta.data(), d, c).transpose();
  model.coefficients.col(d) = Eigen::Map<const Eigen::VectorXd>(theta.data() + d * c, c);
  return model;
}

ClassifierModel fit_multinomial_logreg(const LabeledDataset& data, double l2, const LogRegOptions& options) {
  return fit_multinomial_logreg(data.features().values(), data.labels(), data.class_count(), l2, options);
}

std::vector<int> stratified_folds(const LabeledDataset& data, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("stratified_folds: need at least 2 folds");
  const int c = data.class_count();
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(c));
  for (std::size_t i = 0; i < data.labels().size(); ++i) {
    members[static_cast<std::size_t>(data.labels()[i])].push_back(i);
  }
  std::vector<int> fold(data.labels().size(), -1);
  std::size_t offset = 0;
  for (int cls = 0; cls < c; ++cls) {
    auto& list = members[static_cast<std::size_t>(cls)];
    if (static_cast<int>(list.size()) < k) {
      throw ValidationError("stratified_folds: class '" + data.class_names()[static_cast<std::size_t>(cls)] +
                            "' has " + std::to_string(list.size()) + " members, fewer than " + std::to_string(k) +
                            " folds");
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
    rng.shuffle(std::span<std::size_t>(list));
    for (std::size_t t = 0; t < list.size(); ++t) {
      fold[list[t]] = static_cast<int>((offset + t) % static_cast<std::size_t>(k));
    }
    offset += list.size();
  }
  return fold;
}

namespace {

ClassificationReport evaluate_on_folds(const LabeledDataset& data, const std::vector<int>& fold, int k, double l2,
                                       const ClassificationOptions& options) {
  const auto& x = data.features().values();
  const auto& labels = data.labels();
  const int c = data.class_count();
  ClassificationReport report;
  report.per_fold_accuracy.assign(static_cast<std::size_t>(k), 0.0);
  report.per_fold_macro_accuracy.assign(static_cast<std::size_t>(k), 0.0);

  detail::parallel_for(static_cast<std::size_t>(k), options.threads, [&](std::size_t f) {
    std::vector<Index> train;
    std::vector<Index> test;
    std::vector<int> train_labels;
    for (std::size_t i = 0; i < fold.size(); ++i) {
      if (fold[i] == static_cast<int>(f)) {
        test.push_back(static_cast<Index>(i));
      } else {
        train.push_back(static_cast<Index>(i));
        train_labels.push_back(labels[i]);
      }
    }
    const Eigen::MatrixXd x_train = x(train, Eigen::all);
    const ClassifierModel model = fit_multinomial_logreg(x_train, train_labels, c, l2, options.logreg);
    const std::vector<int> predicted = model.predict(x(test, Eigen::all));

    std::vector<int> hits(static_cast<std::size_t>(c), 0);
    std::vector<int> totals(static_cast<std::size_t>(c), 0);
    int correct = 0;
    for (std::size_t t = 0; t < test.size(); ++t) {
      const int truth = labels[static_cast<std::size_t>(test[t])];
      ++totals[static_cast<std::size_t>(truth)];
      if (predicted[t] == truth) {
        ++correct;
        ++hits[static_cast<std::size_t>(truth)];
      }
    }
    double recall_sum = 0.0;
    int present = 0;
    for (int cls = 0; cls < c; ++cls) {
      if (totals[static_cast<std::size_t>(cls)] == 0) continue;
      recall_sum += static_cast<double>(hits[static_cast<std::size_t>(cls)]) / totals[static_cast<std::size_t>(cls)];
      ++present;
    }
    report.per_fold_accuracy[f] = static_cast<double>(correct) / static_cast<double>(test.size());
    report.per_fold_macro_accuracy[f] = recall_sum / present;
  });

  for (int f = 0; f < k; ++f) {
    report.mean_accuracy += report.per_fold_accuracy[static_cast<std::size_t>(f)] / k;
    report.mean_macro_accuracy += report.per_fold_macro_accuracy[static_cast<std::size_t>(f)] / k;
  }
  return report;
}

} // namespace

ClassificationReport evaluate_classification(const LabeledDataset& data, double l2, int k, std::uint64_t seed,
                                             const ClassificationOptions& options) {
  return evaluate_on_folds(data, stratified_folds(data, k, seed), k, l2, options);
}

ReclassificationReport compare_reweighted(const LabeledDataset& data, const WeightVector& w, double l2, int k,
                                          std::uint64_t seed, const ClassificationOptions& options) {
  const LabeledDataset reweighted = data.with_features(reweight_features(data.features(), w));
  const std::vector<int> fold = stratified_folds(data, k, seed);
  return ReclassificationReport{evaluate_on_folds(data, fold, k, l2, options),
                                evaluate_on_folds(reweighted, fold, k, l2, options)};
}

} // namespace simalign
