#pragma once

#include "clam/bag.hpp"
#include "clam/numerics.hpp"

#include <cstdint>
#include <vector>

namespace clam {

/// Gaussian-mixture bags. Class c's evidence instances are drawn around
/// mu_c = separation * u_c, u_c a random unit direction fixed by the seed;
/// background instances around mu_bg = 0, shared by every class. Both use
/// isotropic noise with standard deviation noise_std. Random directions
/// spread the signal over all coordinates instead of one axis, which keeps
/// per-coordinate optimisers from overfitting the pure-noise axes.
struct SynthSpec {
  int n_classes = 2;
  int feature_dim = 64;
  int k_min = 50;
  int k_max = 150;
  double evidence_fraction = 0.1;
  double class_mean_separation = 2.0;
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticBag {
  FeatureBag bag;
  std::vector<std::size_t> evidence;  // hidden ground truth, ascending
};

/// n_classes x feature_dim matrix of evidence means; each row has norm separation.
Matrix class_means(const SynthSpec& spec);

/// Bag i uses its own generator seeded with seed ^ i and has class i mod n
/// (balanced). It draws K uniformly from [k_min, k_max], picks ceil(rho K)
/// evidence positions by partial shuffle, then fills rows in index order.
std::vector<SyntheticBag> generate_bags(const SynthSpec& spec, std::size_t count, std::size_t first_index = 0);

std::vector<FeatureBag> strip_evidence(const std::vector<SyntheticBag>& bags);

}  // namespace clam
