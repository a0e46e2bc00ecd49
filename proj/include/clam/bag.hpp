#pragma once

#include "clam/numerics.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace clam {

// One slide: K instance feature rows, their patch coordinates, and the
// slide-level label that is the only supervision.
struct FeatureBag {
  std::string slide_id;
  std::int32_t label = 0;
  Matrix features;  // K x D
  std::vector<std::array<std::int32_t, 2>> coords;
  std::uint32_t patch_size = 256;
  std::uint32_t step = 256;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  friend bool operator==(const FeatureBag& a, const FeatureBag& b) {
    return a.slide_id == b.slide_id && a.label == b.label && a.patch_size == b.patch_size && a.step == b.step &&
           a.coords == b.coords && a.features.rows() == b.features.rows() &&
           a.features.cols() == b.features.cols() && a.features == b.features;
  }
};

}  // namespace clam
