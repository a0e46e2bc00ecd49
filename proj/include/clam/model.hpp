#pragma once

#include "clam/bag.hpp"
#include "clam/losses.hpp"
#include "clam/numerics.hpp"
#include "clam/rng.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace clam {

inline constexpr Eigen::Index kEmbedDim = 512;
inline constexpr Eigen::Index kAttentionDim = 256;
inline constexpr Eigen::Index kDefaultFeatureDim = 1024;

enum class ScaleRule {
  UniformFanIn,  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero
  Zero,
};

/// All learnable weights of the CLAM network.
///
/// Per-class heads are stacked: row m of `wa`/`wc` is branch m, rows 2m and
/// 2m+1 of `winst` are the clustering head of class m. Biases are row vectors.
/// The same struct holds gradients.
struct ClamParams {
  int n_classes = 0;
  Eigen::Index feature_dim = kDefaultFeatureDim;
  // Not serialized; a model-level switch for the activation after the embedder.
  bool relu_embedding = true;

  Matrix w1, b1;       // 512 x D, 1 x 512
  Matrix ua, bu;       // 256 x 512, 1 x 256
  Matrix va, bv;       // 256 x 512, 1 x 256
  Matrix wa, ba;       // n x 256, 1 x n
  Matrix wc, bc;       // n x 512, 1 x n
  Matrix winst, binst; // 2n x 512, 1 x 2n

  static constexpr std::size_t kBlockCount = 12;
  static const std::array<std::string_view, kBlockCount>& block_names();

  std::array<Matrix*, kBlockCount> blocks();
  std::array<const Matrix*, kBlockCount> blocks() const;

  /// Same shapes, all entries zero.
  ClamParams zeros_like() const;
  std::size_t parameter_count() const;

  /// Throws a dimension error if any block has the wrong shape, a numeric
  /// error if any entry is non-finite.
  void validate() const;

  friend bool operator==(const ClamParams& a, const ClamParams& b);
};

ClamParams init_params(int n_classes, SeededRng& rng, ScaleRule rule = ScaleRule::UniformFanIn,
                       Eigen::Index feature_dim = kDefaultFeatureDim);

struct AttentionResult {
  Matrix embedded;       // K x 512
  Matrix gate_tanh;      // K x 256, tanh(Va h + bv)
  Matrix gate_sigm;      // K x 256, sigm(Ua h + bu)
  Matrix raw_attention;  // n x K
  Matrix attention;      // n x K, rows sum to 1
  Matrix slide_repr;     // n x 512
  Vector slide_logits;   // n
  Vector probs;          // n
};

struct ClusterOutput {
  std::vector<Matrix> logits;  // n entries of K x 2
};

Matrix embed_instances(const Matrix& features, const ClamParams& params);
AttentionResult attention_forward(const Matrix& embedded, const ClamParams& params);
ClusterOutput cluster_forward(const Matrix& embedded, const ClamParams& params);

struct ClamForward {
  Matrix pre_activation;  // K x 512, W1 z + b1
  AttentionResult attention;
  ClusterOutput clusters;
};

ClamForward clam_forward(const FeatureBag& bag, const ClamParams& params);

struct LossTerms {
  double slide = 0.0;
  double patch = 0.0;  // mean over all pseudo-labelled instances
  double total = 0.0;
  std::size_t labelled = 0;
};

/// Loss of one bag for fixed pseudo-labels.
LossTerms clam_loss(const ClamForward& forward, int label, const PseudoLabelSet& pseudo, const LossConfig& config);

/// Analytic gradient of c1 * L_slide + c2 * L_patch. Pseudo-labels are
/// treated as constants (selection is not differentiated).
ClamParams model_backward(const FeatureBag& bag, const ClamParams& params, const ClamForward& forward,
                          const PseudoLabelSet& pseudo, const LossConfig& config);

struct StepResult {
  LossTerms loss;
  ClamParams grad;
  PseudoLabelSet pseudo;
};

/// Forward, pseudo-label generation, loss and backward for one bag.
StepResult clam_loss_and_grad(const FeatureBag& bag, const ClamParams& params, const LossConfig& config);

/// Total attention that branch `branch` places on the given instances.
double attention_mass(const AttentionResult& result, int branch, const std::vector<std::size_t>& instances);

}  // namespace clam
