#pragma once

#include "clam/model.hpp"
#include "clam/numerics.hpp"
#include "clam/rng.hpp"

#include <algorithm>
#include <array>
#include <vector>

namespace testing {

inline clam::Matrix random_matrix(clam::SeededRng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  clam::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

inline clam::FeatureBag random_bag(clam::SeededRng& rng, Eigen::Index k, Eigen::Index d, int label) {
  clam::FeatureBag bag;
  bag.slide_id = "bag";
  bag.label = label;
  bag.features = random_matrix(rng, k, d);
  for (Eigen::Index i = 0; i < k; ++i) bag.coords.push_back({static_cast<int>(i) * 256, 0});
  return bag;
}

/// Params with every block (biases included) drawn at a scale that keeps
/// activations away from saturation, so finite differences stay informative.
inline clam::ClamParams random_params(clam::SeededRng& rng, int n, Eigen::Index d) {
  clam::ClamParams p = clam::init_params(n, rng, clam::ScaleRule::UniformFanIn, d);
  for (clam::Matrix* b : p.blocks()) {
    if (b->rows() == 1) *b = random_matrix(rng, 1, b->cols(), 0.1);
  }
  return p;
}

/// Max central-difference relative error of the CLAM objective per parameter
/// block, with the pseudo-labels frozen at their values for `params`.
inline std::array<double, clam::ClamParams::kBlockCount> clam_block_fd_errors(
    const clam::FeatureBag& bag, const clam::ClamParams& params, const clam::LossConfig& cfg, std::size_t coords_per_block,
    clam::SeededRng& rng, double eps = 1e-6) {
  const auto fwd = clam::clam_forward(bag, params);
  clam::PseudoLabelSet pseudo;
  if (bag.size() >= 2) pseudo = clam::generate_pseudo_labels(fwd.attention.attention, bag.label, cfg);
  else pseudo.branches.assign(static_cast<std::size_t>(params.n_classes), {});
  const clam::ClamParams grad = clam::model_backward(bag, params, fwd, pseudo, cfg);

  std::array<double, clam::ClamParams::kBlockCount> errors{};
  for (std::size_t b = 0; b < clam::ClamParams::kBlockCount; ++b) {
    clam::ClamParams work = params;
    clam::Matrix& block = *work.blocks()[b];
    const auto size = static_cast<std::size_t>(block.size());
    std::vector<std::size_t> coords;
    if (size <= coords_per_block) {
      for (std::size_t i = 0; i < size; ++i) coords.push_back(i);
    } else {
      while (coords.size() < coords_per_block) {
        const auto c = static_cast<std::size_t>(rng.below(size));
        if (std::find(coords.begin(), coords.end(), c) == coords.end()) coords.push_back(c);
      }
    }
    auto f = [&](std::span<const double>) {
      const auto fw = clam::clam_forward(bag, work);
      return clam::clam_loss(fw, bag.label, pseudo, cfg).total;
    };
    const clam::Matrix& g = *grad.blocks()[b];
    errors[b] = clam::finite_diff_check(f, std::span<double>(block.data(), size),
                                        std::span<const double>(g.data(), size), eps, coords);
  }
  return errors;
}

}  // namespace testing
