#include "clam/error.hpp"
#include "clam/losses.hpp"
#include "clam/rng.hpp"

#include "oracle/scalar_oracle.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace clam;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("svm_loss examples") {
  CHECK(svm_loss(vec({5, 0}), 0, 1.0) == 0.0);
  CHECK(svm_loss(vec({0, 0}), 0, 1.0) == 1.0);
  CHECK(svm_loss(vec({0, 2}), 0, 1.0) == 3.0);
  CHECK_THROWS_AS(svm_loss(vec({0, 2}), 2, 1.0), Error);
}

TEST_CASE("smooth_svm_loss examples") {
  CHECK(smooth_svm_loss(vec({0, 0}), 0, 1.0, 1.0).value == doctest::Approx(std::log(1.0 + std::exp(1.0))).epsilon(1e-14));
  CHECK(smooth_svm_loss(vec({0, 0}), 0, 1.0, 1.0).value == doctest::Approx(1.313262).epsilon(1e-6));
  CHECK(smooth_svm_loss(vec({10, 0}), 0, 1.0, 1.0).value == doctest::Approx(std::log1p(std::exp(-9.0))).epsilon(1e-12));
  CHECK(smooth_svm_loss(vec({10, 0}), 0, 1.0, 1.0).value == doctest::Approx(1.234e-4).epsilon(1e-3));
  CHECK_THROWS_AS(smooth_svm_loss(vec({0, 0}), 0, 1.0, 0.0), Error);
  CHECK_THROWS_AS(smooth_svm_loss(vec({0, 0}), 0, 1.0, -1.0), Error);
  CHECK_THROWS_AS(smooth_svm_loss(vec({0, 0}), -1, 1.0, 1.0), Error);
}

TEST_CASE("smooth_svm_loss properties on random draws") {
  SeededRng rng(21);
  for (int t = 0; t < 200; ++t) {
    const auto n = 2 + static_cast<Eigen::Index>(rng.below(5));
    const Vector s = testing::random_matrix(rng, n, 1, 3.0);
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const double alpha = rng.uniform() * 2.0;
    const auto smooth = smooth_svm_loss(s, y, alpha, 1.0);
    CHECK(smooth.value >= 0.0);
    CHECK(smooth.value >= svm_loss(s, y, alpha) - 1e-15);
    CHECK(std::abs(smooth.grad.sum()) < 1e-12);

    // tau * log-sum-exp against a direct evaluation
    const double tau = 0.25 + rng.uniform();
    double direct = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) direct += std::exp(((j != y ? alpha : 0.0) + s(j) - s(y)) / tau);
    CHECK(smooth_svm_loss(s, y, alpha, tau).value == doctest::Approx(tau * std::log(direct)).epsilon(1e-12));

    // alpha = 0, tau = 1 reduces to cross-entropy
    const double ce = oracle::cross_entropy(std::vector<double>(s.data(), s.data() + n), y);
    CHECK(std::abs(smooth_svm_loss(s, y, 0.0, 1.0).value - ce) < 1e-12);
  }
}

TEST_CASE("smooth_svm_loss gradient matches finite differences") {
  SeededRng rng(22);
  for (int t = 0; t < 100; ++t) {
    const auto n = 2 + static_cast<Eigen::Index>(rng.below(4));
    Vector s = testing::random_matrix(rng, n, 1, 2.0);
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const auto g = smooth_svm_loss(s, y, 1.0, 1.0).grad;
    auto f = [&](std::span<const double> x) {
      return smooth_svm_loss(Eigen::Map<const Vector>(x.data(), n), y, 1.0, 1.0).value;
    };
    CHECK(finite_diff_check(f, std::span<double>(s.data(), static_cast<std::size_t>(n)),
                            std::span<const double>(g.data(), static_cast<std::size_t>(n))) < 1e-6);
  }
}

TEST_CASE("cross_entropy examples") {
  const auto a = cross_entropy(vec({0, 0}), 0);
  CHECK(a.value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(a.grad(0) == doctest::Approx(-0.5));
  CHECK(a.grad(1) == doctest::Approx(0.5));
  CHECK(cross_entropy(vec({50, 0}), 0).value < 1e-20);
  CHECK(cross_entropy(vec({50, 0}), 0).value >= 0.0);
  CHECK(std::isfinite(cross_entropy(vec({0, 1e6}), 0).value));
  CHECK(cross_entropy(vec({0, 1e6}), 0).value == doctest::Approx(1e6));
}

TEST_CASE("total_loss") {
  LossConfig cfg;
  CHECK(total_loss(1.0, {2.0}, cfg) == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(total_loss(1.0, {1.0, 3.0}, cfg) == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(total_loss(1.0, {}, cfg) == 0.7);
  cfg.c2 = 0.0;
  CHECK(total_loss(2.5, {4.0, 9.0}, cfg) == 0.7 * 2.5);
}

TEST_CASE("LossConfig validation") {
  LossConfig c;
  CHECK_NOTHROW(c.validate());
  c.tau = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = LossConfig{};
  c.alpha = -0.1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = LossConfig{};
  c.B = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = LossConfig{};
  c.c1 = -1;
  CHECK_THROWS_AS(c.validate(), Error);
}

namespace {

struct BranchSets {
  std::set<std::size_t> zeros, ones;
};

BranchSets split(const std::vector<PseudoLabel>& labels) {
  BranchSets s;
  for (const auto& l : labels) (l.label == 1 ? s.ones : s.zeros).insert(l.instance);
  return s;
}

std::vector<std::size_t> ranked(const Matrix& a, Eigen::Index row) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(a.cols()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    return a(row, static_cast<Eigen::Index>(x)) < a(row, static_cast<Eigen::Index>(y));
  });
  return idx;
}

}  // namespace

TEST_CASE("pseudo-label counts") {
  SeededRng rng(23);
  LossConfig cfg;
  SUBCASE("K=20, n=3, mutually exclusive") {
    const auto p = generate_pseudo_labels(testing::random_matrix(rng, 3, 20), 1, cfg);
    CHECK(p.total() == 32);
    CHECK(p.branches[1].size() == 16);
    CHECK(p.branches[0].size() == 8);
    CHECK(p.branches[2].size() == 8);
    for (int m : {0, 2})
      for (const auto& l : p.branches[static_cast<std::size_t>(m)]) CHECK(l.label == 0);
  }
  SUBCASE("K=20, n=2, not mutually exclusive") {
    cfg.mutually_exclusive = false;
    const auto p = generate_pseudo_labels(testing::random_matrix(rng, 2, 20), 0, cfg);
    CHECK(p.total() == 16);
    CHECK(p.branches[0].size() == 16);
    CHECK(p.branches[1].empty());
  }
  SUBCASE("K=10 truncates to 5 + 5") {
    const auto p = generate_pseudo_labels(testing::random_matrix(rng, 2, 10), 0, cfg);
    CHECK(p.effective_B == 5);
    const auto s = split(p.branches[0]);
    CHECK(s.zeros.size() == 5);
    CHECK(s.ones.size() == 5);
    for (std::size_t i : s.zeros) CHECK(s.ones.count(i) == 0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(generate_pseudo_labels(testing::random_matrix(rng, 2, 1), 0, cfg), Error);
    CHECK_THROWS_AS(generate_pseudo_labels(testing::random_matrix(rng, 2, 5), 2, cfg), Error);
    CHECK_THROWS_AS(generate_pseudo_labels(testing::random_matrix(rng, 2, 5), -1, cfg), Error);
  }
}

TEST_CASE("pseudo-labels match a brute-force sort") {
  SeededRng rng(24);
  for (int t = 0; t < 300; ++t) {
    LossConfig cfg;
    cfg.B = 1 + static_cast<int>(rng.below(10));
    cfg.mutually_exclusive = rng.below(2) == 1;
    const int n = 2 + static_cast<int>(rng.below(3));
    const auto k = 2 + static_cast<Eigen::Index>(rng.below(40));
    Matrix a = testing::random_matrix(rng, n, k);
    if (t % 5 == 0) a = a.array().round();  // force ties
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const auto p = generate_pseudo_labels(a, y, cfg);
    const std::size_t bp = std::min<std::size_t>(static_cast<std::size_t>(cfg.B), static_cast<std::size_t>(k / 2));
    CHECK(p.effective_B == static_cast<int>(bp));

    const auto order = ranked(a, y);
    const auto s = split(p.branches[static_cast<std::size_t>(y)]);
    CHECK(s.zeros == std::set<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(bp)));
    CHECK(s.ones == std::set<std::size_t>(order.end() - static_cast<std::ptrdiff_t>(bp), order.end()));
    for (int m = 0; m < n; ++m) {
      if (m == y) continue;
      const auto& br = p.branches[static_cast<std::size_t>(m)];
      if (!cfg.mutually_exclusive) {
        CHECK(br.empty());
        continue;
      }
      const auto om = ranked(a, m);
      const auto sm = split(br);
      CHECK(sm.ones.empty());
      CHECK(sm.zeros == std::set<std::size_t>(om.end() - static_cast<std::ptrdiff_t>(bp), om.end()));
      CHECK(br.size() <= 2 * static_cast<std::size_t>(cfg.B));
    }
  }
}

TEST_CASE("pseudo-labels are invariant under increasing transforms") {
  SeededRng rng(25);
  LossConfig cfg;
  for (int t = 0; t < 50; ++t) {
    const Matrix a = testing::random_matrix(rng, 3, 30);
    const Matrix b = (a.array() * 3.0).exp() + 7.0;
    const Matrix c = a.array().cube();
    const auto pa = generate_pseudo_labels(a, t % 3, cfg);
    for (const Matrix* m : {&b, &c}) {
      const auto pb = generate_pseudo_labels(*m, t % 3, cfg);
      for (std::size_t br = 0; br < 3; ++br) {
        REQUIRE(pa.branches[br].size() == pb.branches[br].size());
        const auto x = split(pa.branches[br]), z = split(pb.branches[br]);
        CHECK(x.zeros == z.zeros);
        CHECK(x.ones == z.ones);
      }
    }
  }
}
