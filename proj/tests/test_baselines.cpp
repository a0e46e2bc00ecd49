#include "clam/baselines.hpp"
#include "clam/error.hpp"
#include "clam/training.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace clam;

namespace {

MilParams scripted(int n) {
  SeededRng rng(1);
  return init_mil_params(n, rng, ScaleRule::Zero, 2);
}

// Patch scores equal to the (non-negative) 2-D inputs: hidden = relu(z), W2 picks coordinates.
MilParams identity_scores(int n) {
  MilParams p = scripted(n);
  p.w1(0, 0) = 1.0;
  p.w1(1, 1) = 1.0;
  p.w2(n - 2, 0) = 1.0;
  p.w2(n - 1, 1) = 1.0;
  return p;
}

}  // namespace

TEST_CASE("mil_forward examples") {
  const MilParams p = identity_scores(2);
  Matrix one(1, 2);
  one << 5.0, 0.0;
  CHECK(mil_forward(one, p).selected == 0);

  Matrix two(2, 2);
  two << 0.0, 0.2, 0.0, 0.9;
  const auto f = mil_forward(two, p);
  CHECK(f.selected == 1);
  CHECK(f.slide_logits(1) == doctest::Approx(0.9));

  Matrix three(3, 2);
  three << 0.0, 0.2, 0.0, 0.9, 4.0, 0.5;
  const auto g = mil_forward(three, p);
  CHECK(g.selected == 1);
  CHECK(g.probs == f.probs);

  CHECK_THROWS_AS(mil_forward(Matrix::Zero(2, 3), p), Error);
  CHECK_THROWS_AS(mil_forward(Matrix::Zero(0, 2), p), Error);
  CHECK_THROWS_AS(mil_forward(two, scripted(3)), Error);
}

TEST_CASE("mmil_forward examples") {
  MilParams p = scripted(3);
  p.w1(0, 0) = 1.0;
  p.w1(1, 1) = 1.0;
  p.w2(0, 0) = 1.0;
  p.w2(2, 1) = 1.0;
  Matrix z(2, 2);
  z << 1.0, 0.0, 0.0, 3.0;  // scores [1,0,0] and [0,0,3]
  const auto f = mmil_forward(z, p);
  CHECK(f.selected == 1);
  CHECK(argmax_rows(f.probs.transpose())[0] == 2);

  Matrix same(4, 2);
  same.setConstant(0.7);
  CHECK(mmil_forward(same, p).selected == 0);
  CHECK(mil_forward(same, identity_scores(2)).selected == 0);
}

TEST_CASE("mmil agrees with a brute-force double loop") {
  SeededRng rng(3);
  for (int t = 0; t < 50; ++t) {
    MilParams p = init_mil_params(3, rng, ScaleRule::UniformFanIn, 5);
    p.b2 = testing::random_matrix(rng, 1, 3, 0.1);
    const Matrix z = testing::random_matrix(rng, 7, 5);
    const auto f = mmil_forward(z, p);
    Eigen::Index best = 0;
    double best_score = -INFINITY;
    for (Eigen::Index k = 0; k < 7; ++k) {
      for (int c = 0; c < 3; ++c) {
        double s = p.b2(0, c);
        for (Eigen::Index h = 0; h < 512; ++h) {
          double a = p.b1(0, h);
          for (Eigen::Index j = 0; j < 5; ++j) a += p.w1(h, j) * z(k, j);
          s += p.w2(c, h) * std::max(a, 0.0);
        }
        if (s > best_score) {
          best_score = s;
          best = k;
        }
      }
    }
    CHECK(f.selected == best);
  }
}

TEST_CASE("MIL prediction ignores non-argmax patches; mMIL matches MIL when class 1 dominates") {
  SeededRng rng(4);
  for (int t = 0; t < 30; ++t) {
    MilParams p = init_mil_params(2, rng, ScaleRule::UniformFanIn, 4);
    const Matrix z = testing::random_matrix(rng, 6, 4);
    const auto f = mil_forward(z, p);
    for (Eigen::Index drop = 0; drop < 6; ++drop) {
      if (drop == f.selected) continue;
      Matrix r(5, 4);
      Eigen::Index o = 0;
      for (Eigen::Index k = 0; k < 6; ++k)
        if (k != drop) r.row(o++) = z.row(k);
      CHECK((mil_forward(r, p).slide_logits - f.slide_logits).cwiseAbs().maxCoeff() < 1e-12);
    }
    // shift class 1 above class 0 everywhere
    p.b2(0, 1) = 100.0;
    CHECK(mmil_forward(z, p).selected == mil_forward(z, p).selected);
  }
}

TEST_CASE("MIL gradient flows only through the selected patch") {
  SeededRng rng(5);
  for (int t = 0; t < 10; ++t) {
    MilParams p = init_mil_params(2, rng, ScaleRule::UniformFanIn, 6);
    p.b1 = testing::random_matrix(rng, 1, 512, 0.1);
    FeatureBag bag = testing::random_bag(rng, 8, 6, t % 2);
    const auto step = mil_loss_and_grad(bag, p);

    // The same loss computed on the selected patch alone has identical gradients.
    FeatureBag single = bag;
    single.features = bag.features.row(step.selected);
    const auto alone = mil_loss_and_grad(single, p);
    CHECK(alone.loss == doctest::Approx(step.loss).epsilon(1e-14));
    for (std::size_t b = 0; b < MilParams::kBlockCount; ++b)
      CHECK((*step.grad.blocks()[b] - *alone.grad.blocks()[b]).cwiseAbs().maxCoeff() < 1e-14);

    // Perturbing a non-selected patch slightly changes neither loss nor gradient.
    const Eigen::Index other = (step.selected + 1) % 8;
    FeatureBag moved = bag;
    moved.features.row(other) *= 0.999;
    const auto m = mil_loss_and_grad(moved, p);
    if (m.selected == step.selected) CHECK(m.loss == step.loss);
  }
}

TEST_CASE("MIL gradient matches finite differences") {
  SeededRng rng(6);
  for (int n : {2, 3}) {
    MilParams p = init_mil_params(n, rng, ScaleRule::UniformFanIn, 5);
    p.b1 = testing::random_matrix(rng, 1, 512, 0.1);
    p.b2 = testing::random_matrix(rng, 1, n, 0.1);
    const FeatureBag bag = testing::random_bag(rng, 6, 5, 1);
    const auto step = mil_loss_and_grad(bag, p);
    for (std::size_t b = 0; b < MilParams::kBlockCount; ++b) {
      MilParams work = p;
      Matrix& block = *work.blocks()[b];
      const auto size = static_cast<std::size_t>(block.size());
      std::vector<std::size_t> coords;
      for (std::size_t i = 0; i < std::min<std::size_t>(size, 40); ++i) coords.push_back(rng.below(size));
      auto f = [&](std::span<const double>) {
        // Keep the selection fixed to the analytic step's patch.
        FeatureBag sel = bag;
        sel.features = bag.features.row(step.selected);
        return mil_loss_and_grad(sel, work).loss;
      };
      const Matrix& g = *step.grad.blocks()[b];
      CHECK(finite_diff_check(f, std::span<double>(block.data(), size), std::span<const double>(g.data(), size), 1e-6,
                              coords) < 1e-6);
    }
  }
}

TEST_CASE("MIL training step is deterministic") {
  SeededRng r1(7), r2(7);
  MilParams a = init_mil_params(2, r1, ScaleRule::UniformFanIn, 4), b = init_mil_params(2, r2, ScaleRule::UniformFanIn, 4);
  SeededRng data(8);
  const FeatureBag bag = testing::random_bag(data, 5, 4, 1);
  OptimizerState sa = make_optimizer(a), sb = make_optimizer(b);
  TrainConfig cfg;
  for (int i = 0; i < 5; ++i) CHECK(mil_train_step(bag, a, sa, cfg) == mil_train_step(bag, b, sb, cfg));
  CHECK(a == b);
}

TEST_CASE("MIL params validate") {
  SeededRng rng(9);
  MilParams p = init_mil_params(2, rng);
  CHECK(p.w1.rows() == 512);
  CHECK(p.w1.cols() == 1024);
  CHECK(p.w2.rows() == 2);
  CHECK_NOTHROW(p.validate());
  p.b2(0, 0) = INFINITY;
  CHECK_THROWS_AS(p.validate(), Error);
}
