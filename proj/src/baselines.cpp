#include "clam/baselines.hpp"

#include "clam/error.hpp"

#include <cmath>
#include <string>

namespace clam {

const std::array<std::string_view, MilParams::kBlockCount>& MilParams::block_names() {
  static const std::array<std::string_view, kBlockCount> names = {"W1", "b1", "W2", "b2"};
  return names;
}

std::array<Matrix*, MilParams::kBlockCount> MilParams::blocks() { return {&w1, &b1, &w2, &b2}; }

std::array<const Matrix*, MilParams::kBlockCount> MilParams::blocks() const { return {&w1, &b1, &w2, &b2}; }

MilParams MilParams::zeros_like() const {
  MilParams z;
  z.n_classes = n_classes;
  z.feature_dim = feature_dim;
  z.w1 = Matrix::Zero(w1.rows(), w1.cols());
  z.b1 = Matrix::Zero(b1.rows(), b1.cols());
  z.w2 = Matrix::Zero(w2.rows(), w2.cols());
  z.b2 = Matrix::Zero(b2.rows(), b2.cols());
  return z;
}

void MilParams::validate() const {
  if (n_classes < 2) throw Error(ErrorKind::Config, "MIL needs at least 2 classes");
  require_shape(w1, kEmbedDim, feature_dim, "W1");
  require_shape(b1, 1, kEmbedDim, "b1");
  require_shape(w2, n_classes, kEmbedDim, "W2");
  require_shape(b2, 1, n_classes, "b2");
  auto names = block_names();
  auto bs = blocks();
  for (std::size_t i = 0; i < kBlockCount; ++i) require_finite(*bs[i], names[i]);
}

bool operator==(const MilParams& a, const MilParams& b) {
  if (a.n_classes != b.n_classes || a.feature_dim != b.feature_dim) return false;
  auto ab = a.blocks();
  auto bb = b.blocks();
  for (std::size_t i = 0; i < MilParams::kBlockCount; ++i) {
    if (ab[i]->rows() != bb[i]->rows() || ab[i]->cols() != bb[i]->cols() || *ab[i] != *bb[i]) return false;
  }
  return true;
}

MilParams init_mil_params(int n_classes, SeededRng& rng, ScaleRule rule, Eigen::Index feature_dim) {
  if (n_classes < 2) throw Error(ErrorKind::Config, "n_classes must be at least 2, got " + std::to_string(n_classes));
  MilParams p;
  p.n_classes = n_classes;
  p.feature_dim = feature_dim;
  auto weight = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix m = Matrix::Zero(rows, cols);
    if (rule == ScaleRule::Zero) return m;
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
    return m;
  };
  p.w1 = weight(kEmbedDim, feature_dim);
  p.b1 = Matrix::Zero(1, kEmbedDim);
  p.w2 = weight(n_classes, kEmbedDim);
  p.b2 = Matrix::Zero(1, n_classes);
  return p;
}

MilForward mil_scores(const Matrix& features, const MilParams& params) {
  if (features.cols() != params.feature_dim) {
    throw Error(ErrorKind::Dimension, "features have " + std::to_string(features.cols()) + " columns, model expects " +
                                          std::to_string(params.feature_dim));
  }
  if (features.rows() < 1) throw Error(ErrorKind::Dimension, "bag has no instances");
  MilForward f;
  f.pre_activation = features * params.w1.transpose();
  f.pre_activation.rowwise() += params.b1.row(0);
  f.hidden = f.pre_activation.cwiseMax(0.0);
  f.patch_scores = f.hidden * params.w2.transpose();
  f.patch_scores.rowwise() += params.b2.row(0);
  return f;
}

namespace {

void finish(MilForward& f, Eigen::Index selected) {
  f.selected = selected;
  f.slide_logits = f.patch_scores.row(selected).transpose();
  f.probs = softmax(f.slide_logits);
}

}  // namespace

MilForward mil_forward(const Matrix& features, const MilParams& params) {
  if (params.n_classes != 2) throw Error(ErrorKind::Dimension, "binary MIL requires exactly 2 classes");
  MilForward f = mil_scores(features, params);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < f.patch_scores.rows(); ++k) {
    if (f.patch_scores(k, 1) > f.patch_scores(best, 1)) best = k;
  }
  finish(f, best);
  return f;
}

MilForward mmil_forward(const Matrix& features, const MilParams& params) {
  MilForward f = mil_scores(features, params);
  Eigen::Index best = 0;
  double best_score = f.patch_scores.row(0).maxCoeff();
  for (Eigen::Index k = 1; k < f.patch_scores.rows(); ++k) {
    const double s = f.patch_scores.row(k).maxCoeff();
    if (s > best_score) {
      best = k;
      best_score = s;
    }
  }
  finish(f, best);
  return f;
}

MilForward max_pool_forward(const Matrix& features, const MilParams& params) {
  return params.n_classes == 2 ? mil_forward(features, params) : mmil_forward(features, params);
}

MilStep mil_loss_and_grad(const FeatureBag& bag, const MilParams& params) {
  const MilForward f = max_pool_forward(bag.features, params);
  const auto ce = cross_entropy(f.slide_logits, bag.label);
  MilStep out;
  out.loss = ce.value;
  out.selected = f.selected;
  out.grad = params.zeros_like();

  const Eigen::Index k = f.selected;
  out.grad.w2 = ce.grad * f.hidden.row(k);
  out.grad.b2 = ce.grad.transpose();
  Matrix d_hidden = ce.grad.transpose() * params.w2;  // 1 x 512
  for (Eigen::Index j = 0; j < d_hidden.cols(); ++j) {
    if (f.pre_activation(k, j) <= 0.0) d_hidden(0, j) = 0.0;
  }
  out.grad.w1 = d_hidden.transpose() * bag.features.row(k);
  out.grad.b1 = d_hidden;
  return out;
}

}  // namespace clam
