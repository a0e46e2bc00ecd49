#include "clam/config.hpp"
#include "clam/error.hpp"
#include "clam/synth.hpp"

#include <doctest.h>

#include <cmath>

using namespace clam;

TEST_CASE("synthetic bags") {
  SynthSpec spec;
  spec.n_classes = 3;
  spec.feature_dim = 16;
  spec.seed = 81;

  SUBCASE("rho = 1 makes every instance evidence") {
    spec.evidence_fraction = 1.0;
    for (const auto& b : generate_bags(spec, 6)) CHECK(b.evidence.size() == static_cast<std::size_t>(b.bag.size()));
  }
  SUBCASE("determinism and index addressing") {
    const auto a = generate_bags(spec, 5, 10);
    const auto b = generate_bags(spec, 5, 10);
    const auto c = generate_bags(spec, 2, 13);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(a[i].bag == b[i].bag);
      CHECK(a[i].evidence == b[i].evidence);
      CHECK(a[i].bag.label == static_cast<int>((10 + i) % 3));
    }
    CHECK(c[0].bag == a[3].bag);
  }
  SUBCASE("rho = 0.05 at K = 100 gives 5 evidence instances") {
    spec.evidence_fraction = 0.05;
    spec.k_min = spec.k_max = 100;
    for (const auto& b : generate_bags(spec, 9)) CHECK(b.evidence.size() == 5);
  }
  SUBCASE("evidence and background means") {
    spec.k_min = spec.k_max = 100;
    spec.evidence_fraction = 0.2;
    const Matrix mu = class_means(spec);
    for (int c = 0; c < 3; ++c) CHECK(mu.row(c).norm() == doctest::Approx(spec.class_mean_separation));
    const auto bags = generate_bags(spec, 300);
    Matrix ev_sum = Matrix::Zero(3, 16);
    std::vector<double> ev_n(3, 0.0);
    std::vector<Matrix> bg_sum(3, Matrix::Zero(1, 16));
    std::vector<double> bg_n(3, 0.0);
    for (const auto& s : bags) {
      const auto c = static_cast<std::size_t>(s.bag.label);
      std::vector<bool> is_ev(100, false);
      for (auto e : s.evidence) is_ev[e] = true;
      for (Eigen::Index r = 0; r < 100; ++r) {
        if (is_ev[static_cast<std::size_t>(r)]) {
          ev_sum.row(static_cast<Eigen::Index>(c)) += s.bag.features.row(r);
          ev_n[c] += 1;
        } else {
          bg_sum[c] += s.bag.features.row(r);
          bg_n[c] += 1;
        }
      }
    }
    for (int c = 0; c < 3; ++c) {
      const double n = ev_n[static_cast<std::size_t>(c)];
      const Matrix mean = ev_sum.row(c) / n;
      CHECK(((mean - mu.row(c)).cwiseAbs().array() <= 3.0 * spec.noise_std / std::sqrt(n)).all());
      // Background means: two-sample z test between classes, well inside p = 0.01 per coordinate.
      const Matrix m0 = bg_sum[0] / bg_n[0], mc = bg_sum[static_cast<std::size_t>(c)] / bg_n[static_cast<std::size_t>(c)];
      const double se = spec.noise_std * std::sqrt(1.0 / bg_n[0] + 1.0 / bg_n[static_cast<std::size_t>(c)]);
      CHECK(((m0 - mc).cwiseAbs().array() <= 4.0 * se).all());
    }
  }
  SUBCASE("invalid specs") {
    SynthSpec bad = spec;
    bad.evidence_fraction = 0.0;
    CHECK_THROWS_AS(generate_bags(bad, 1), Error);
    bad = spec;
    bad.evidence_fraction = 0.01;
    bad.k_min = 50;
    CHECK_THROWS_AS(generate_bags(bad, 1), Error);
    bad = spec;
    bad.n_classes = 1;
    CHECK_THROWS_AS(generate_bags(bad, 1), Error);
  }
}

TEST_CASE("config files") {
  SUBCASE("train config round trip") {
    TrainConfig c;
    c.learning_rate = 1e-3;
    c.seed = 123456789012345ULL;
    c.loss.mutually_exclusive = false;
    c.loss.B = 4;
    const TrainConfig d = parse_train_config(format_train_config(c));
    CHECK(d.learning_rate == c.learning_rate);
    CHECK(d.seed == c.seed);
    CHECK(d.loss.B == 4);
    CHECK_FALSE(d.loss.mutually_exclusive);
    CHECK(format_train_config(d) == format_train_config(c));
  }
  SUBCASE("synth spec round trip") {
    SynthSpec s;
    s.evidence_fraction = 0.03;
    s.n_classes = 4;
    const SynthSpec t = parse_synth_spec(format_synth_spec(s));
    CHECK(t.evidence_fraction == 0.03);
    CHECK(t.n_classes == 4);
  }
  SUBCASE("comments, partial files, errors") {
    const TrainConfig c = parse_train_config("# comment\n\nmax_epochs = 60\n");
    CHECK(c.max_epochs == 60);
    CHECK(c.min_epochs == 50);
    CHECK_THROWS_AS(parse_train_config("bogus=1\n"), Error);
    CHECK_THROWS_AS(parse_train_config("patience=1\npatience=2\n"), Error);
    CHECK_THROWS_AS(parse_train_config("patience=abc\n"), Error);
    CHECK_THROWS_AS(parse_train_config("patience\n"), Error);
    CHECK_THROWS_AS(parse_train_config("min_epochs=300\n"), Error);
    CHECK_THROWS_AS(parse_synth_spec("noise_std=-1\n"), Error);
  }
}
