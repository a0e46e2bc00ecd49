#pragma once

#include "clam/bag.hpp"
#include "clam/losses.hpp"
#include "clam/model.hpp"
#include "clam/numerics.hpp"
#include "clam/rng.hpp"

#include <array>
#include <string_view>

namespace clam {

/// Max-pooling MIL: one 512-unit hidden layer, then an n-way patch classifier.
/// n = 2 is the binary baseline, n > 2 the multi-class (mMIL) variant.
struct MilParams {
  int n_classes = 2;
  Eigen::Index feature_dim = kDefaultFeatureDim;

  Matrix w1, b1;  // 512 x D, 1 x 512
  Matrix w2, b2;  // n x 512, 1 x n

  static constexpr std::size_t kBlockCount = 4;
  static const std::array<std::string_view, kBlockCount>& block_names();

  std::array<Matrix*, kBlockCount> blocks();
  std::array<const Matrix*, kBlockCount> blocks() const;

  MilParams zeros_like() const;
  void validate() const;

  friend bool operator==(const MilParams& a, const MilParams& b);
};

MilParams init_mil_params(int n_classes, SeededRng& rng, ScaleRule rule = ScaleRule::UniformFanIn,
                          Eigen::Index feature_dim = kDefaultFeatureDim);

struct MilForward {
  Matrix pre_activation;  // K x 512
  Matrix hidden;          // K x 512 after ReLU
  Matrix patch_scores;    // K x n raw scores
  Eigen::Index selected = 0;
  Vector slide_logits;    // scores of the selected patch
  Vector probs;
};

/// Per-patch raw scores s_k = W2 ReLU(W1 z_k + b1) + b2.
MilForward mil_scores(const Matrix& features, const MilParams& params);

/// Binary rule: the patch with the highest positive-class (index 1) score. Ties go to the lowest index.
MilForward mil_forward(const Matrix& features, const MilParams& params);

/// Multi-class rule: the patch whose largest single-class raw score is
/// highest. Ties go to the lowest patch index.
MilForward mmil_forward(const Matrix& features, const MilParams& params);

/// Dispatches to mil_forward for n = 2, mmil_forward otherwise.
MilForward max_pool_forward(const Matrix& features, const MilParams& params);

struct MilStep {
  double loss = 0.0;
  MilParams grad;
  Eigen::Index selected = 0;
};

/// Cross-entropy on the selected patch's scores. Only the selected patch
/// contributes to the gradient.
MilStep mil_loss_and_grad(const FeatureBag& bag, const MilParams& params);

}  // namespace clam
