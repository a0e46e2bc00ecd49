#include "clam/losses.hpp"

#include "clam/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace clam {

namespace {

void require_class(int y, Eigen::Index n) {
  if (y < 0 || y >= n) {
    throw Error(ErrorKind::Label, "class " + std::to_string(y) + " outside [0, " + std::to_string(n) + ")");
  }
}

// Instance indices ordered by ascending score, ties by index.
std::vector<std::size_t> ascending_order(const Matrix& attention, Eigen::Index row) {
  std::vector<std::size_t> order(static_cast<std::size_t>(attention.cols()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return attention(row, static_cast<Eigen::Index>(a)) < attention(row, static_cast<Eigen::Index>(b));
  });
  return order;
}

}  // namespace

void LossConfig::validate() const {
  if (!(tau > 0)) throw Error(ErrorKind::Config, "tau must be positive");
  if (!(alpha >= 0)) throw Error(ErrorKind::Config, "alpha must be non-negative");
  if (!(c1 >= 0) || !(c2 >= 0)) throw Error(ErrorKind::Config, "loss weights must be non-negative");
  if (B < 1) throw Error(ErrorKind::Config, "B must be at least 1");
}

std::size_t PseudoLabelSet::total() const {
  std::size_t n = 0;
  for (const auto& b : branches) n += b.size();
  return n;
}

PseudoLabelSet generate_pseudo_labels(const Matrix& attention, int ground_truth, const LossConfig& config) {
  config.validate();
  const Eigen::Index n = attention.rows();
  const Eigen::Index k = attention.cols();
  if (k < 2) throw Error(ErrorKind::DegenerateBag, "pseudo-labelling needs at least 2 instances, got " + std::to_string(k));
  require_class(ground_truth, n);

  PseudoLabelSet out;
  out.branches.resize(static_cast<std::size_t>(n));
  out.mutually_exclusive = config.mutually_exclusive;
  out.B = config.B;
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(config.B), static_cast<std::size_t>(k / 2));
  out.effective_B = static_cast<int>(take);

  for (Eigen::Index m = 0; m < n; ++m) {
    const bool in_class = (m == ground_truth);
    if (!in_class && !config.mutually_exclusive) continue;
    const auto order = ascending_order(attention, m);
    auto& labels = out.branches[static_cast<std::size_t>(m)];
    if (in_class) {
      for (std::size_t b = 0; b < take; ++b) labels.push_back({order[b], 0});
    }
    const int top_label = in_class ? 1 : 0;
    for (std::size_t b = 0; b < take; ++b) labels.push_back({order[order.size() - take + b], top_label});
  }
  return out;
}

double svm_loss(const Vector& scores, int y, double alpha) {
  require_class(y, scores.size());
  double best_other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    if (j != y) best_other = std::max(best_other, scores[j] + alpha);
  }
  return std::max(best_other - scores[y], 0.0);
}

LossWithGrad smooth_svm_loss(const Vector& scores, int y, double alpha, double tau) {
  if (!(tau > 0)) throw Error(ErrorKind::Config, "smooth SVM temperature must be positive");
  require_class(y, scores.size());
  require_finite(scores, "smooth SVM scores");

  Vector scaled(scores.size());
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    scaled[j] = ((j != y ? alpha : 0.0) + scores[j] - scores[y]) / tau;
  }
  LossWithGrad out;
  out.value = tau * log_sum_exp(scaled);
  out.grad = softmax(scaled);
  out.grad[y] -= 1.0;
  return out;
}

LossWithGrad cross_entropy(const Vector& logits, int y) {
  require_class(y, logits.size());
  require_finite(logits, "cross-entropy logits");
  LossWithGrad out;
  out.value = log_sum_exp(logits) - logits[y];
  out.grad = softmax(logits);
  out.grad[y] -= 1.0;
  return out;
}

double total_loss(double slide_loss, const std::vector<double>& patch_losses, const LossConfig& config) {
  double patch = 0.0;
  if (!patch_losses.empty()) {
    patch = std::accumulate(patch_losses.begin(), patch_losses.end(), 0.0) / static_cast<double>(patch_losses.size());
  }
  return config.c1 * slide_loss + config.c2 * patch;
}

}  // namespace clam
