#include "clam/synth.hpp"

#include "clam/error.hpp"
#include "clam/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace clam {

void SynthSpec::validate() const {
  if (n_classes < 2) throw Error(ErrorKind::Config, "synth: n_classes must be at least 2");
  if (feature_dim < n_classes) throw Error(ErrorKind::Config, "synth: feature_dim must be at least n_classes");
  if (k_min < 1 || k_max < k_min) throw Error(ErrorKind::Config, "synth: need 1 <= k_min <= k_max");
  if (!(evidence_fraction > 0.0 && evidence_fraction <= 1.0)) {
    throw Error(ErrorKind::Config, "synth: evidence_fraction must lie in (0, 1]");
  }
  if (evidence_fraction * k_min < 1.0) throw Error(ErrorKind::Config, "synth: evidence_fraction * k_min must be >= 1");
  if (!(class_mean_separation > 0.0)) throw Error(ErrorKind::Config, "synth: class means must be distinct");
  if (!(noise_std >= 0.0)) throw Error(ErrorKind::Config, "synth: noise_std must be non-negative");
}

Matrix class_means(const SynthSpec& spec) {
  spec.validate();
  SeededRng rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  Matrix means(spec.n_classes, spec.feature_dim);
  for (int c = 0; c < spec.n_classes; ++c) {
    double norm = 0.0;
    do {
      for (int j = 0; j < spec.feature_dim; ++j) means(c, j) = rng.normal();
      norm = means.row(c).norm();
    } while (norm < 1e-12);
    means.row(c) *= spec.class_mean_separation / norm;
  }
  return means;
}

std::vector<SyntheticBag> generate_bags(const SynthSpec& spec, std::size_t count, std::size_t first_index) {
  const Matrix means = class_means(spec);
  std::vector<SyntheticBag> out;
  out.reserve(count);
  for (std::size_t i = first_index; i < first_index + count; ++i) {
    SeededRng rng(spec.seed ^ static_cast<std::uint64_t>(i));
    SyntheticBag s;
    const int label = static_cast<int>(i % static_cast<std::size_t>(spec.n_classes));
    const auto k = static_cast<std::size_t>(spec.k_min) +
                   static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(spec.k_max - spec.k_min + 1)));
    // Guard the ceiling against rho * K landing a hair above an integer.
    const double raw = spec.evidence_fraction * static_cast<double>(k);
    auto n_evidence = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    n_evidence = std::clamp<std::size_t>(n_evidence, 1, k);

    std::vector<std::size_t> positions(k);
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    for (std::size_t j = 0; j < n_evidence; ++j) {
      const std::size_t pick = j + static_cast<std::size_t>(rng.below(k - j));
      std::swap(positions[j], positions[pick]);
    }
    s.evidence.assign(positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(n_evidence));
    std::sort(s.evidence.begin(), s.evidence.end());

    std::vector<bool> is_evidence(k, false);
    for (std::size_t e : s.evidence) is_evidence[e] = true;

    s.bag.slide_id = "synth_" + std::to_string(i);
    s.bag.label = label;
    s.bag.features.resize(static_cast<Eigen::Index>(k), spec.feature_dim);
    for (std::size_t r = 0; r < k; ++r) {
      for (int c = 0; c < spec.feature_dim; ++c) {
        const double mean = is_evidence[r] ? means(label, c) : 0.0;
        // Stored features are f32 in the bag container; keep them representable.
        s.bag.features(static_cast<Eigen::Index>(r), c) =
            static_cast<double>(static_cast<float>(mean + spec.noise_std * rng.normal()));
      }
      s.bag.coords.push_back({static_cast<std::int32_t>(r % 64) * 256, static_cast<std::int32_t>(r / 64) * 256});
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<FeatureBag> strip_evidence(const std::vector<SyntheticBag>& bags) {
  std::vector<FeatureBag> out;
  out.reserve(bags.size());
  for (const auto& b : bags) out.push_back(b.bag);
  return out;
}

}  // namespace clam
