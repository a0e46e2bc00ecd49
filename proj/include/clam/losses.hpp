#pragma once

#include "clam/numerics.hpp"

#include <cstddef>
#include <vector>

namespace clam {

struct LossConfig {
  double alpha = 1.0;  // SVM margin
  double tau = 1.0;    // smoothing temperature
  double c1 = 0.7;     // slide-level weight
  double c2 = 0.3;     // instance-level weight
  int B = 8;           // evidence instances per side
  bool mutually_exclusive = true;

  void validate() const;
};

struct PseudoLabel {
  std::size_t instance = 0;
  int label = 0;  // 1 = positive evidence, 0 = negative / false-positive evidence
};

/// Instance-level clustering targets for one bag and one iteration.
struct PseudoLabelSet {
  std::vector<std::vector<PseudoLabel>> branches;  // indexed by class
  bool mutually_exclusive = true;
  int B = 8;            // requested count
  int effective_B = 0;  // min(B, floor(K/2))

  std::size_t total() const;
};

/// Rank-based evidence selection over an n x K attention matrix.
///
/// The ground-truth branch is sorted ascending (ties by instance index) and
/// its bottom B' instances labeled 0, top B' labeled 1, B' = min(B, K/2).
/// Under mutual exclusivity every other branch labels its own top B'
/// instances 0. Otherwise only the ground-truth branch carries labels.
PseudoLabelSet generate_pseudo_labels(const Matrix& attention, int ground_truth, const LossConfig& config);

/// Hard multiclass SVM loss: max(max_{j != y}(s_j + alpha) - s_y, 0).
double svm_loss(const Vector& scores, int y, double alpha);

struct LossWithGrad {
  double value = 0.0;
  Vector grad;
};

/// Smooth top-1 SVM loss tau * log sum_j exp((alpha [j != y] + s_j - s_y) / tau).
/// Gradient is q - onehot(y) where q is the softmax of the scaled terms.
LossWithGrad smooth_svm_loss(const Vector& scores, int y, double alpha, double tau);

/// -log softmax(s)_y with gradient softmax(s) - onehot(y).
LossWithGrad cross_entropy(const Vector& logits, int y);

/// c1 * slide + c2 * mean(patch). An empty patch list contributes 0.
double total_loss(double slide_loss, const std::vector<double>& patch_losses, const LossConfig& config);

}  // namespace clam
