#include "clam/metrics.hpp"

#include "clam/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace clam {

double auc_mw(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::Dimension, "auc: scores and labels differ in length");
  std::size_t positives = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw Error(ErrorKind::Metric, "auc: labels must be 0 or 1");
    positives += static_cast<std::size_t>(l);
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw Error(ErrorKind::Metric, "auc needs both positive and negative samples");

  // Sum of mid-ranks of the positives gives U without enumerating pairs.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + j + 1);  // 1-based ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) positive_rank_sum += mid_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

MacroAuc macro_ovr_auc(const Matrix& probs, std::span<const int> labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) {
    throw Error(ErrorKind::Dimension, "macro auc: probability rows and labels differ in length");
  }
  MacroAuc out;
  std::vector<double> column(labels.size());
  std::vector<int> binary(labels.size());
  for (Eigen::Index m = 0; m < probs.cols(); ++m) {
    bool present = false;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      column[i] = probs(static_cast<Eigen::Index>(i), m);
      binary[i] = labels[i] == m ? 1 : 0;
      present = present || binary[i] == 1;
    }
    if (!present) throw Error(ErrorKind::Metric, "class " + std::to_string(m) + " has no samples");
    out.per_class.push_back(auc_mw(column, binary));
  }
  out.macro = std::accumulate(out.per_class.begin(), out.per_class.end(), 0.0) /
              static_cast<double>(out.per_class.size());
  return out;
}

std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index best = 0;
    probs.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

ConfidenceSummary confidence_summary(const Matrix& probs, std::span<const int> labels,
                                     std::span<const int> predictions) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size() || labels.size() != predictions.size()) {
    throw Error(ErrorKind::Dimension, "confidence summary: inputs differ in length");
  }
  std::vector<double> correct, incorrect;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double conf = probs.row(static_cast<Eigen::Index>(i)).maxCoeff();
    (labels[i] == predictions[i] ? correct : incorrect).push_back(conf);
  }
  auto stats = [](const std::vector<double>& v, std::optional<double>& mean, std::optional<double>& sd) {
    if (v.empty()) return;
    const double mu = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    mean = mu;
    sd = std::sqrt(ss / static_cast<double>(v.size()));
  };
  ConfidenceSummary s;
  s.n_correct = correct.size();
  s.n_incorrect = incorrect.size();
  stats(correct, s.mean_correct, s.std_correct);
  stats(incorrect, s.mean_incorrect, s.std_incorrect);
  return s;
}

PcaResult pca(const Matrix& vectors, int n_components, int out_dims) {
  const Eigen::Index n = vectors.rows();
  const Eigen::Index d = vectors.cols();
  if (n < 2 || d < 2) throw Error(ErrorKind::Dimension, "pca needs at least 2 samples and 2 dimensions");
  if (n_components < 1 || out_dims < 1) throw Error(ErrorKind::Config, "pca component counts must be positive");

  const Eigen::Index keep = std::min<Eigen::Index>({n_components, d, n - 1});
  const Matrix centred = vectors.rowwise() - vectors.colwise().mean();
  const Matrix cov = (centred.transpose() * centred) / static_cast<double>(n - 1);

  PcaResult out;
  out.scores = Matrix::Zero(n, out_dims);
  out.variances = Vector::Zero(keep);
  out.components = Matrix::Zero(keep, d);
  if (cov.cwiseAbs().maxCoeff() == 0.0) return out;

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::Numeric, "pca eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  for (Eigen::Index c = 0; c < keep; ++c) {
    const Eigen::Index src = d - 1 - c;
    Vector axis = solver.eigenvectors().col(src);
    Eigen::Index lead = 0;
    axis.cwiseAbs().maxCoeff(&lead);
    if (axis[lead] < 0) axis = -axis;
    out.components.row(c) = axis.transpose();
    out.variances[c] = std::max(0.0, solver.eigenvalues()[src]);
  }
  const Eigen::Index project = std::min<Eigen::Index>(keep, out_dims);
  out.scores.leftCols(project) = centred * out.components.topRows(project).transpose();
  return out;
}

}  // namespace clam
