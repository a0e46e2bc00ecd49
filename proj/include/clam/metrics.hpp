#pragma once

#include "clam/numerics.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clam {

/// ROC AUC as the normalized Mann-Whitney U statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
/// Labels are 0/1; both classes must be present.
double auc_mw(std::span<const double> scores, std::span<const int> labels);

struct MacroAuc {
  std::vector<double> per_class;
  double macro = 0.0;
};

/// One-vs-rest AUC of column m against (label == m), then the unweighted mean.
MacroAuc macro_ovr_auc(const Matrix& probs, std::span<const int> labels);

struct ConfidenceSummary {
  std::size_t n_correct = 0;
  std::size_t n_incorrect = 0;
  // Absent when the group is empty. Standard deviations are population (ddof 0).
  std::optional<double> mean_correct, std_correct;
  std::optional<double> mean_incorrect, std_incorrect;
};

/// Confidence is the largest class probability of each slide.
ConfidenceSummary confidence_summary(const Matrix& probs, std::span<const int> labels,
                                     std::span<const int> predictions);

std::vector<int> argmax_rows(const Matrix& probs);

struct PcaResult {
  Matrix scores;      // N x out_dims
  Vector variances;   // variance along each retained component, descending
  Matrix components;  // retained components as rows
};

/// Mean-centres the rows, keeps min(n_components, d, N - 1) principal axes of
/// the sample covariance and projects onto the first `out_dims`. Each axis is
/// signed so that its largest-magnitude loading is positive. Zero-variance
/// input projects to zeros.
PcaResult pca(const Matrix& vectors, int n_components = 50, int out_dims = 2);

inline Matrix pca_project(const Matrix& vectors, int n_components = 50, int out_dims = 2) {
  return pca(vectors, n_components, out_dims).scores;
}

}  // namespace clam
