#include "clam/model.hpp"

#include "clam/error.hpp"

#include <cmath>
#include <string>

namespace clam {

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, SeededRng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

void add_row_bias(Matrix& m, const Matrix& bias) { m.rowwise() += bias.row(0); }

}  // namespace

const std::array<std::string_view, ClamParams::kBlockCount>& ClamParams::block_names() {
  static const std::array<std::string_view, kBlockCount> names = {
      "W1", "b1", "Ua", "bu", "Va", "bv", "Wa", "ba", "Wc", "bc", "Winst", "binst"};
  return names;
}

std::array<Matrix*, ClamParams::kBlockCount> ClamParams::blocks() {
  return {&w1, &b1, &ua, &bu, &va, &bv, &wa, &ba, &wc, &bc, &winst, &binst};
}

std::array<const Matrix*, ClamParams::kBlockCount> ClamParams::blocks() const {
  return {&w1, &b1, &ua, &bu, &va, &bv, &wa, &ba, &wc, &bc, &winst, &binst};
}

ClamParams ClamParams::zeros_like() const {
  ClamParams z;
  z.n_classes = n_classes;
  z.feature_dim = feature_dim;
  z.relu_embedding = relu_embedding;
  auto dst = z.blocks();
  auto src = blocks();
  for (std::size_t i = 0; i < kBlockCount; ++i) *dst[i] = Matrix::Zero(src[i]->rows(), src[i]->cols());
  return z;
}

std::size_t ClamParams::parameter_count() const {
  std::size_t count = 0;
  for (const Matrix* b : blocks()) count += static_cast<std::size_t>(b->size());
  return count;
}

void ClamParams::validate() const {
  if (n_classes < 2) throw Error(ErrorKind::Config, "CLAM needs at least 2 classes");
  if (feature_dim < 1) throw Error(ErrorKind::Config, "feature dimension must be positive");
  const Eigen::Index n = n_classes;
  require_shape(w1, kEmbedDim, feature_dim, "W1");
  require_shape(b1, 1, kEmbedDim, "b1");
  require_shape(ua, kAttentionDim, kEmbedDim, "Ua");
  require_shape(bu, 1, kAttentionDim, "bu");
  require_shape(va, kAttentionDim, kEmbedDim, "Va");
  require_shape(bv, 1, kAttentionDim, "bv");
  require_shape(wa, n, kAttentionDim, "Wa");
  require_shape(ba, 1, n, "ba");
  require_shape(wc, n, kEmbedDim, "Wc");
  require_shape(bc, 1, n, "bc");
  require_shape(winst, 2 * n, kEmbedDim, "Winst");
  require_shape(binst, 1, 2 * n, "binst");
  auto names = block_names();
  auto bs = blocks();
  for (std::size_t i = 0; i < kBlockCount; ++i) require_finite(*bs[i], names[i]);
}

bool operator==(const ClamParams& a, const ClamParams& b) {
  if (a.n_classes != b.n_classes || a.feature_dim != b.feature_dim || a.relu_embedding != b.relu_embedding) {
    return false;
  }
  auto ab = a.blocks();
  auto bb = b.blocks();
  for (std::size_t i = 0; i < ClamParams::kBlockCount; ++i) {
    if (ab[i]->rows() != bb[i]->rows() || ab[i]->cols() != bb[i]->cols()) return false;
    if (*ab[i] != *bb[i]) return false;
  }
  return true;
}

ClamParams init_params(int n_classes, SeededRng& rng, ScaleRule rule, Eigen::Index feature_dim) {
  if (n_classes < 2) throw Error(ErrorKind::Config, "n_classes must be at least 2, got " + std::to_string(n_classes));
  if (feature_dim < 1) throw Error(ErrorKind::Config, "feature dimension must be positive");

  ClamParams p;
  p.n_classes = n_classes;
  p.feature_dim = feature_dim;
  const Eigen::Index n = n_classes;

  // Weights are drawn block by block in declaration order, row-major.
  auto weight = [&](Eigen::Index rows, Eigen::Index cols) {
    if (rule == ScaleRule::Zero) return Matrix(Matrix::Zero(rows, cols));
    return uniform_matrix(rows, cols, 1.0 / std::sqrt(static_cast<double>(cols)), rng);
  };
  p.w1 = weight(kEmbedDim, feature_dim);
  p.b1 = Matrix::Zero(1, kEmbedDim);
  p.ua = weight(kAttentionDim, kEmbedDim);
  p.bu = Matrix::Zero(1, kAttentionDim);
  p.va = weight(kAttentionDim, kEmbedDim);
  p.bv = Matrix::Zero(1, kAttentionDim);
  p.wa = weight(n, kAttentionDim);
  p.ba = Matrix::Zero(1, n);
  p.wc = weight(n, kEmbedDim);
  p.bc = Matrix::Zero(1, n);
  p.winst = weight(2 * n, kEmbedDim);
  p.binst = Matrix::Zero(1, 2 * n);
  return p;
}

Matrix embed_instances(const Matrix& features, const ClamParams& params) {
  if (features.cols() != params.feature_dim) {
    throw Error(ErrorKind::Dimension, "features have " + std::to_string(features.cols()) + " columns, model expects " +
                                          std::to_string(params.feature_dim));
  }
  if (features.rows() < 1) throw Error(ErrorKind::Dimension, "bag has no instances");
  Matrix h = features * params.w1.transpose();
  add_row_bias(h, params.b1);
  if (params.relu_embedding) h = h.cwiseMax(0.0);
  return h;
}

AttentionResult attention_forward(const Matrix& embedded, const ClamParams& params) {
  if (embedded.cols() != kEmbedDim) throw Error(ErrorKind::Dimension, "embedded instances must have 512 columns");
  if (embedded.rows() < 1) throw Error(ErrorKind::Dimension, "bag has no instances");

  AttentionResult r;
  r.embedded = embedded;

  Matrix a = embedded * params.va.transpose();
  add_row_bias(a, params.bv);
  Matrix b = embedded * params.ua.transpose();
  add_row_bias(b, params.bu);
  r.gate_tanh = tanh_array(a);
  r.gate_sigm = sigmoid_array(b);

  const Matrix gated = r.gate_tanh.cwiseProduct(r.gate_sigm);
  r.raw_attention = params.wa * gated.transpose();
  r.raw_attention.colwise() += params.ba.row(0).transpose();
  r.attention = softmax_rows(r.raw_attention);

  r.slide_repr = r.attention * embedded;
  r.slide_logits = r.slide_repr.cwiseProduct(params.wc).rowwise().sum() + params.bc.row(0).transpose();
  r.probs = softmax(r.slide_logits);
  return r;
}

ClusterOutput cluster_forward(const Matrix& embedded, const ClamParams& params) {
  if (embedded.cols() != kEmbedDim) throw Error(ErrorKind::Dimension, "embedded instances must have 512 columns");
  ClusterOutput out;
  out.logits.reserve(static_cast<std::size_t>(params.n_classes));
  for (int m = 0; m < params.n_classes; ++m) {
    Matrix p = embedded * params.winst.middleRows(2 * m, 2).transpose();
    p.rowwise() += params.binst.block(0, 2 * m, 1, 2).row(0);
    out.logits.push_back(std::move(p));
  }
  return out;
}

ClamForward clam_forward(const FeatureBag& bag, const ClamParams& params) {
  if (bag.features.cols() != params.feature_dim) {
    throw Error(ErrorKind::Dimension, "bag '" + bag.slide_id + "' has feature dimension " +
                                          std::to_string(bag.features.cols()) + ", model expects " +
                                          std::to_string(params.feature_dim));
  }
  if (bag.features.rows() < 1) throw Error(ErrorKind::Dimension, "bag '" + bag.slide_id + "' is empty");
  ClamForward f;
  f.pre_activation = bag.features * params.w1.transpose();
  add_row_bias(f.pre_activation, params.b1);
  const Matrix h = params.relu_embedding ? Matrix(f.pre_activation.cwiseMax(0.0)) : f.pre_activation;
  f.attention = attention_forward(h, params);
  f.clusters = cluster_forward(f.attention.embedded, params);
  return f;
}

LossTerms clam_loss(const ClamForward& forward, int label, const PseudoLabelSet& pseudo, const LossConfig& config) {
  LossTerms t;
  t.slide = cross_entropy(forward.attention.slide_logits, label).value;
  std::vector<double> patch;
  for (std::size_t m = 0; m < pseudo.branches.size(); ++m) {
    const Matrix& logits = forward.clusters.logits[m];
    for (const auto& pl : pseudo.branches[m]) {
      const Vector s = logits.row(static_cast<Eigen::Index>(pl.instance)).transpose();
      patch.push_back(smooth_svm_loss(s, pl.label, config.alpha, config.tau).value);
    }
  }
  t.labelled = patch.size();
  for (double v : patch) t.patch += v;
  if (!patch.empty()) t.patch /= static_cast<double>(patch.size());
  t.total = total_loss(t.slide, patch, config);
  return t;
}

ClamParams model_backward(const FeatureBag& bag, const ClamParams& params, const ClamForward& forward,
                          const PseudoLabelSet& pseudo, const LossConfig& config) {
  const AttentionResult& fw = forward.attention;
  const Matrix& h = fw.embedded;
  const Eigen::Index n = params.n_classes;
  ClamParams g = params.zeros_like();

  // Slide-level cross-entropy.
  Vector d_logits = cross_entropy(fw.slide_logits, bag.label).grad * config.c1;
  g.wc = d_logits.asDiagonal() * fw.slide_repr;
  g.bc = d_logits.transpose();
  const Matrix d_repr = d_logits.asDiagonal() * params.wc;  // n x 512

  Matrix d_h = fw.attention.transpose() * d_repr;  // K x 512
  const Matrix d_attn = d_repr * h.transpose();     // n x K

  // Softmax over instances, per branch.
  Matrix d_raw(n, h.rows());
  for (Eigen::Index m = 0; m < n; ++m) {
    const double dot = fw.attention.row(m).dot(d_attn.row(m));
    d_raw.row(m) = fw.attention.row(m).cwiseProduct((d_attn.row(m).array() - dot).matrix());
  }

  const Matrix gated = fw.gate_tanh.cwiseProduct(fw.gate_sigm);
  g.wa = d_raw * gated;
  g.ba = d_raw.rowwise().sum().transpose();
  const Matrix d_gated = d_raw.transpose() * params.wa;  // K x 256

  const Matrix d_a = d_gated.cwiseProduct(fw.gate_sigm).cwiseProduct(
      (1.0 - fw.gate_tanh.array().square()).matrix());
  const Matrix d_b = d_gated.cwiseProduct(fw.gate_tanh).cwiseProduct(
      (fw.gate_sigm.array() * (1.0 - fw.gate_sigm.array())).matrix());
  g.va = d_a.transpose() * h;
  g.bv = d_a.colwise().sum();
  g.ua = d_b.transpose() * h;
  g.bu = d_b.colwise().sum();
  d_h.noalias() += d_a * params.va;
  d_h.noalias() += d_b * params.ua;

  // Instance clustering, averaged over every labelled instance.
  const std::size_t labelled = pseudo.total();
  if (labelled > 0 && config.c2 != 0.0) {
    const double w = config.c2 / static_cast<double>(labelled);
    for (std::size_t m = 0; m < pseudo.branches.size(); ++m) {
      const Eigen::Index row = 2 * static_cast<Eigen::Index>(m);
      const Matrix& logits = forward.clusters.logits[m];
      for (const auto& pl : pseudo.branches[m]) {
        const auto k = static_cast<Eigen::Index>(pl.instance);
        const Vector s = logits.row(k).transpose();
        const Vector d_s = smooth_svm_loss(s, pl.label, config.alpha, config.tau).grad * w;
        g.winst.middleRows(row, 2).noalias() += d_s * h.row(k);
        g.binst.block(0, row, 1, 2) += d_s.transpose();
        d_h.row(k).noalias() += d_s.transpose() * params.winst.middleRows(row, 2);
      }
    }
  }

  // Embedding layer.
  Matrix d_pre = d_h;
  if (params.relu_embedding) d_pre = d_h.cwiseProduct((forward.pre_activation.array() > 0.0).cast<double>().matrix());
  g.w1 = d_pre.transpose() * bag.features;
  g.b1 = d_pre.colwise().sum();
  return g;
}

StepResult clam_loss_and_grad(const FeatureBag& bag, const ClamParams& params, const LossConfig& config) {
  const ClamForward forward = clam_forward(bag, params);
  StepResult r;
  if (bag.features.rows() >= 2) {
    r.pseudo = generate_pseudo_labels(forward.attention.attention, bag.label, config);
  } else {
    r.pseudo.branches.resize(static_cast<std::size_t>(params.n_classes));
  }
  r.loss = clam_loss(forward, bag.label, r.pseudo, config);
  r.grad = model_backward(bag, params, forward, r.pseudo, config);
  return r;
}

double attention_mass(const AttentionResult& result, int branch, const std::vector<std::size_t>& instances) {
  if (branch < 0 || branch >= result.attention.rows()) throw Error(ErrorKind::Dimension, "attention_mass: branch out of range");
  double mass = 0.0;
  for (std::size_t k : instances) {
    if (k >= static_cast<std::size_t>(result.attention.cols())) {
      throw Error(ErrorKind::Dimension, "attention_mass: instance out of range");
    }
    mass += result.attention(branch, static_cast<Eigen::Index>(k));
  }
  return mass;
}

}  // namespace clam
