// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 = all pass).
//
//   clam_acceptance [--only name[,name...]] [--quick]
//
// --quick shrinks the two training experiments (for local iteration only;
// ctest runs the full configuration).

#include "clam/bag_io.hpp"
#include "clam/checkpoint.hpp"
#include "clam/heatmap.hpp"
#include "clam/losses.hpp"
#include "clam/metrics.hpp"
#include "clam/model.hpp"
#include "clam/synth.hpp"
#include "clam/training.hpp"

#include "oracle/scalar_oracle.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace clam;
using Clock = std::chrono::steady_clock;

namespace {

bool g_quick = false;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  SeededRng rng(20240601);
  LossConfig cfg;  // c1 0.7, c2 0.3, B 8, alpha = tau = 1
  std::array<double, ClamParams::kBlockCount> worst{};
  for (int i = 0; i < 50; ++i) {
    const int n = 2 + static_cast<int>(rng.below(2));
    const auto k = static_cast<Eigen::Index>(4 + rng.below(29));
    const Eigen::Index d = 8;
    const ClamParams params = testing::random_params(rng, n, d);
    const FeatureBag bag = testing::random_bag(rng, k, d, static_cast<int>(rng.below(static_cast<std::uint64_t>(n))));
    const auto errs = testing::clam_block_fd_errors(bag, params, cfg, 8, rng);
    for (std::size_t b = 0; b < errs.size(); ++b) worst[b] = std::max(worst[b], errs[b]);
  }
  const double secs = seconds_since(t0);
  double max_err = 0.0;
  std::string per_block;
  for (std::size_t b = 0; b < worst.size(); ++b) {
    max_err = std::max(max_err, worst[b]);
    per_block += fmt(" %s=%.1e", std::string(ClamParams::block_names()[b]).c_str(), worst[b]);
  }
  return {max_err < 1e-6 && secs < 120.0, fmt("max rel err %.2e over 50 bags, %.1fs;", max_err, secs) + per_block};
}

Outcome loss_identity() {
  SeededRng rng(7);
  double worst_ce = 0.0, worst_gap = INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const int n = 2 + static_cast<int>(rng.below(5));
    Vector s(n);
    for (int j = 0; j < n; ++j) s(j) = 3.0 * rng.normal();
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const double smooth0 = smooth_svm_loss(s, y, 0.0, 1.0).value;
    const double ce = oracle::cross_entropy(std::vector<double>(s.data(), s.data() + n), y);
    worst_ce = std::max(worst_ce, std::abs(smooth0 - ce));
    const double alpha = rng.uniform(0.0, 2.0);
    worst_gap = std::min(worst_gap, smooth_svm_loss(s, y, alpha, 1.0).value - svm_loss(s, y, alpha));
  }
  return {worst_ce <= 1e-12 && worst_gap >= 0.0,
          fmt("max |smooth(a=0,t=1) - CE| = %.2e; min(smooth - hard) = %.3e", worst_ce, worst_gap)};
}

Outcome algorithm1_counts() {
  SeededRng rng(99);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 2 + static_cast<int>(rng.below(4));
    const auto k = static_cast<Eigen::Index>(2 + rng.below(40));
    LossConfig cfg;
    cfg.B = 1 + static_cast<int>(rng.below(12));
    cfg.mutually_exclusive = rng.below(2) == 1;
    Matrix raw = testing::random_matrix(rng, n, k);
    if (rng.below(4) == 0) raw = raw.array().round();  // plenty of ties
    const Matrix att = softmax_rows(raw);
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const PseudoLabelSet set = generate_pseudo_labels(att, y, cfg);

    const auto bp = static_cast<std::size_t>(std::min<Eigen::Index>(cfg.B, k / 2));
    bool ok = set.effective_B == static_cast<int>(bp) && set.branches.size() == static_cast<std::size_t>(n);
    for (int m = 0; m < n && ok; ++m) {
      const auto& br = set.branches[static_cast<std::size_t>(m)];
      // Brute-force reference ranks: stable ascending sort by attention.
      std::vector<std::size_t> order(static_cast<std::size_t>(k));
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return att(m, a) < att(m, b); });
      std::set<std::size_t> zeros, ones;
      for (const auto& pl : br) (pl.label == 0 ? zeros : ones).insert(pl.instance);
      std::set<std::size_t> want_zero, want_one;
      if (m == y) {
        for (std::size_t j = 0; j < bp; ++j) want_zero.insert(order[j]);
        for (std::size_t j = 0; j < bp; ++j) want_one.insert(order[order.size() - 1 - j]);
        ok = br.size() == 2 * bp;
      } else if (cfg.mutually_exclusive) {
        for (std::size_t j = 0; j < bp; ++j) want_zero.insert(order[order.size() - 1 - j]);
        ok = br.size() == bp;
      } else {
        ok = br.empty();
      }
      ok = ok && zeros == want_zero && ones == want_one;
      for (std::size_t z : zeros) ok = ok && !ones.count(z);
    }
    const std::size_t expect_total = 2 * bp + (cfg.mutually_exclusive ? static_cast<std::size_t>(n - 1) * bp : 0);
    ok = ok && set.total() == expect_total;
    if (!ok) ++failures;
  }
  return {failures == 0, fmt("%d/1000 attention matrices disagree with closed-form counts", failures)};
}

Outcome permutation_invariance() {
  SeededRng rng(31);
  double worst_logit = 0.0, worst_att = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int n = 2 + static_cast<int>(rng.below(2));
    const auto k = static_cast<Eigen::Index>(1 + rng.below(40));
    const Eigen::Index d = 16;
    const ClamParams p = testing::random_params(rng, n, d);
    const FeatureBag bag = testing::random_bag(rng, k, d, 0);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    rng.shuffle(std::span<Eigen::Index>(perm));
    FeatureBag shuffled = bag;
    for (Eigen::Index r = 0; r < k; ++r) shuffled.features.row(r) = bag.features.row(perm[static_cast<std::size_t>(r)]);
    const auto a = clam_forward(bag, p).attention;
    const auto b = clam_forward(shuffled, p).attention;
    worst_logit = std::max(worst_logit, (a.slide_logits - b.slide_logits).cwiseAbs().maxCoeff());
    worst_logit = std::max(worst_logit, (a.probs - b.probs).cwiseAbs().maxCoeff());
    for (int m = 0; m < n; ++m)
      for (Eigen::Index r = 0; r < k; ++r)
        worst_att = std::max(worst_att, std::abs(b.attention(m, r) - a.attention(m, perm[static_cast<std::size_t>(r)])));
  }
  return {worst_logit <= 1e-10 && worst_att <= 1e-10,
          fmt("max logit/prob diff %.2e, max permuted-attention diff %.2e over 200 bags", worst_logit, worst_att)};
}

Outcome oracle_equivalence() {
  SeededRng rng(5);
  double worst = 0.0;
  for (int i = 0; i < 60; ++i) {
    const int n = 2 + static_cast<int>(rng.below(2));
    const auto k = static_cast<Eigen::Index>(1 + rng.below(8));
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(24));
    ClamParams p = testing::random_params(rng, n, d);
    p.relu_embedding = i % 5 != 4;
    const FeatureBag bag = testing::random_bag(rng, k, d, 0);
    const auto lib = clam_forward(bag, p);
    const auto ref = oracle::clam_forward(bag.features, p);
    for (int m = 0; m < n; ++m) {
      worst = std::max(worst, std::abs(lib.attention.slide_logits(m) - ref.logits[m]));
      worst = std::max(worst, std::abs(lib.attention.probs(m) - ref.probs[m]));
      for (Eigen::Index r = 0; r < k; ++r) {
        worst = std::max(worst, std::abs(lib.attention.raw_attention(m, r) - ref.raw[m][r]));
        worst = std::max(worst, std::abs(lib.attention.attention(m, r) - ref.att[m][r]));
        for (int c = 0; c < 2; ++c) worst = std::max(worst, std::abs(lib.clusters.logits[m](r, c) - ref.clusters[m][r][c]));
      }
      for (int j = 0; j < 512; ++j) worst = std::max(worst, std::abs(lib.attention.slide_repr(m, j) - ref.repr[m][j]));
    }
  }
  return {worst <= 1e-10, fmt("max |library - scalar oracle| = %.2e over 60 bags (K<=8, n<=3)", worst)};
}

double mean_evidence_mass(const ClamParams& p, const std::vector<SyntheticBag>& bags) {
  double total = 0.0;
  for (const auto& b : bags) total += attention_mass(clam_forward(b.bag, p).attention, b.bag.label, b.evidence);
  return total / static_cast<double>(bags.size());
}

Outcome synthetic_learning() {
  const auto t0 = Clock::now();
  SynthSpec spec;
  spec.n_classes = 3;
  spec.feature_dim = 64;
  spec.k_min = 50;
  spec.k_max = 150;
  spec.evidence_fraction = 0.1;
  spec.class_mean_separation = 2.0;
  spec.noise_std = 1.0;
  spec.seed = 1234;
  const std::size_t n_train = g_quick ? 90 : 300, n_val = g_quick ? 30 : 60, n_test = 100;
  const auto train = strip_evidence(generate_bags(spec, n_train, 0));
  const auto val = strip_evidence(generate_bags(spec, n_val, 100000));
  const auto test = generate_bags(spec, n_test, 200000);

  TrainConfig cfg;  // defaults
  if (g_quick) cfg.min_epochs = 10, cfg.patience = 5;
  SeededRng init(cfg.seed);
  const auto fit = fit_clam(train, val, init_params(3, init, ScaleRule::UniformFanIn, 64), cfg);
  const auto ev = evaluate_fold(fit.best, strip_evidence(test));
  const double mass = mean_evidence_mass(fit.best, test);
  const double secs = seconds_since(t0);
  const double macro = ev.macro ? ev.macro->macro : 0.0;
  return {macro >= 0.95 && mass >= 3 * spec.evidence_fraction && secs < 600.0,
          fmt("macro AUC %.4f (>= 0.95), evidence attention mass %.3f (>= %.2f), best epoch %d of %d, %.0fs", macro, mass,
              3 * spec.evidence_fraction, fit.best_epoch, fit.epochs_run, secs)};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

Outcome clam_vs_mil() {
  const auto t0 = Clock::now();
  const std::size_t full = g_quick ? 80 : 200, n_val = g_quick ? 20 : 50, n_test = 200;
  const int seeds = 5;
  std::string detail;
  bool pass = true;
  for (const double fraction : {0.25, 1.0}) {
    const auto n_train = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(full)));
    std::vector<double> clam_auc, mil_auc;
    for (int s = 0; s < seeds; ++s) {
      SynthSpec spec;
      spec.n_classes = 2;
      spec.feature_dim = 64;
      spec.evidence_fraction = 0.03;
      spec.seed = 5000 + static_cast<std::uint64_t>(s);
      // The first n_train of the full training pool, so 25% is a subset of 100%.
      const auto train = strip_evidence(generate_bags(spec, n_train, 0));
      const auto val = strip_evidence(generate_bags(spec, n_val, 100000));
      const auto test = strip_evidence(generate_bags(spec, n_test, 200000));
      TrainConfig cfg;
      cfg.seed = 77 + static_cast<std::uint64_t>(s);
      if (g_quick) cfg.min_epochs = 10, cfg.patience = 5;
      SeededRng r1(cfg.seed), r2(cfg.seed);
      const auto c = fit_clam(train, val, init_params(2, r1, ScaleRule::UniformFanIn, 64), cfg);
      const auto m = fit_mil(train, val, init_mil_params(2, r2, ScaleRule::UniformFanIn, 64), cfg);
      clam_auc.push_back(*evaluate_fold(c.best, test).auc);
      mil_auc.push_back(*evaluate_fold(m.best, test).auc);
    }
    const double mc = median(clam_auc), mm = median(mil_auc);
    pass = pass && mc >= mm;
    detail += fmt("%s%d%% (%zu bags): median CLAM %.4f vs MIL %.4f", detail.empty() ? "" : "; ",
                  static_cast<int>(fraction * 100), n_train, mc, mm);
  }
  detail += fmt("; %.0fs", seconds_since(t0));
  return {pass, detail};
}

// Toy model whose single parameter moves every step, so the returned
// checkpoint identifies the epoch it was taken at.
struct Counter {
  int n_classes = 2;
  Matrix w = Matrix::Zero(1, 1);
  std::array<Matrix*, 1> blocks() { return {&w}; }
  std::array<const Matrix*, 1> blocks() const { return {&w}; }
  Counter zeros_like() const { return Counter{}; }
};

Outcome early_stopping() {
  SeededRng rng(3);
  std::vector<std::vector<double>> scripts;
  {
    std::vector<double> plateau;  // strictly decreasing to epoch 60, flat afterwards
    for (int e = 0; e < 200; ++e) plateau.push_back(e <= 60 ? 10.0 - 0.1 * e : 10.0 - 0.1 * 60);
    scripts.push_back(plateau);
    std::vector<double> early_min;  // minimum at epoch 10
    for (int e = 0; e < 200; ++e) early_min.push_back(std::abs(e - 10.0));
    scripts.push_back(early_min);
    std::vector<double> falling;  // always improving: runs to the cap
    for (int e = 0; e < 200; ++e) falling.push_back(1.0 / (1.0 + e));
    scripts.push_back(falling);
  }
  for (int i = 0; i < 300; ++i) {
    std::vector<double> s;
    double level = 5.0;
    for (int e = 0; e < 200; ++e) {
      level += rng.normal() * 0.05 - (rng.below(3) == 0 ? 0.02 : 0.0);
      s.push_back(std::round(level * 50.0) / 50.0);  // coarse grid: frequent exact ties
    }
    scripts.push_back(s);
  }

  TrainConfig cfg;  // min 50, max 200, patience 20
  cfg.weight_decay = 0.0;
  FeatureBag dummy;
  dummy.label = 0;
  dummy.features = Matrix::Zero(1, 1);
  dummy.coords = {{0, 0}};
  FeatureBag dummy1 = dummy;
  dummy1.label = 1;
  int failures = 0;
  std::string first_failure;
  int plateau_stop = -1, plateau_best = -1;
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    const auto& losses = scripts[i];
    const auto want = oracle::early_stop(losses, cfg.min_epochs, cfg.max_epochs, cfg.patience);
    int epoch_calls = 0;
    std::vector<double> w_at_epoch;
    ModelOps<Counter> ops;
      ops.loss_and_grad = [](const FeatureBag&, const Counter&, Counter& g) {
      g.w(0, 0) = -1.0;
      return 0.0;
    };
    ops.val_loss = [&](const FeatureBag&, const Counter& p) {
      w_at_epoch.push_back(p.w(0, 0));
      return ValLoss{losses[static_cast<std::size_t>(epoch_calls++)], 0.0};
    };
    const auto res = fit(std::vector<FeatureBag>{dummy, dummy1}, std::vector<FeatureBag>{dummy}, Counter{}, cfg, ops);
    const int stop = res.epochs_run - 1;
    double min_seen = INFINITY;
    for (int e = 0; e <= stop; ++e) min_seen = std::min(min_seen, losses[static_cast<std::size_t>(e)]);
    // Closed form: stop at max(min_epochs, best + patience + 1), capped by max_epochs.
    const int closed = std::min(std::max(cfg.min_epochs, res.best_epoch + cfg.patience + 1), cfg.max_epochs - 1);
    const bool ok = stop == want.stop_epoch && res.best_epoch == want.best_epoch && stop == closed &&
                    stop >= cfg.min_epochs && stop < cfg.max_epochs && res.best_val_loss == min_seen &&
                    res.best.w(0, 0) == w_at_epoch[static_cast<std::size_t>(res.best_epoch)];
    if (i == 0) plateau_stop = stop, plateau_best = res.best_epoch;
    if (!ok) {
      if (failures == 0) first_failure = fmt(" first failure script %zu: stop %d (want %d) best %d (want %d)", i, stop,
                                             want.stop_epoch, res.best_epoch, want.best_epoch);
      ++failures;
    }
  }
  const bool plateau_ok = plateau_stop == 81 && plateau_best == 60;
  return {failures == 0 && plateau_ok,
          fmt("%d/%zu scripted sequences disagree; plateau-after-60 stops at %d with best %d", failures, scripts.size(),
              plateau_stop, plateau_best) + first_failure};
}

Outcome heatmap_exactness() {
  // Constant score tiled at 95% overlap: every covered cell has that score.
  const double c = 0.37;
  HeatmapGrid grid(64, 48, 8);
  const int step = 12;
  for (int y = 0; y + 256 <= 48 * 8; y += step)
    for (int x = 0; x + 256 <= 64 * 8; x += step) accumulate(grid, {x, y}, 256, c);
  const RgbImage img = render(grid, std::nullopt, 0.5);
  const auto cm = colormap(c);
  const std::array<std::uint8_t, 3> want{static_cast<std::uint8_t>(std::floor(cm[0] + 0.5)),
                                         static_cast<std::uint8_t>(std::floor(cm[1] + 0.5)),
                                         static_cast<std::uint8_t>(std::floor(cm[2] + 0.5))};
  bool constant = true;
  for (int y = 0; y < grid.height; ++y)
    for (int x = 0; x < grid.width; ++x)
      if (grid.covered(x, y)) constant = constant && img.at(x, y) == want && std::abs(grid.value(x, y) - c) < 1e-12;

  const std::vector<double> ref{1, 2, 3, 4};
  const auto pct = percentile_normalize(ref, ref);
  const bool pct_ok = pct == std::vector<double>{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};

  HeatmapGrid one(1, 1, 1);
  accumulate(one, {0, 0}, 1, 1.0);
  const auto px = render(one, RgbImage(1, 1), 0.5).at(0, 0);
  const bool blend_ok = px == std::array<std::uint8_t, 3>{218, 130, 147};
  return {constant && pct_ok && blend_ok,
          fmt("constant tiling uniform=%d; percentile [1,2,3,4] -> [%.6g,%.6g,%.6g,%.6g]; red over white = (%d,%d,%d)",
              constant, pct[0], pct[1], pct[2], pct[3], px[0], px[1], px[2])};
}

Outcome formats_fuzz() {
  SeededRng rng(4242);
  int mismatches = 0, crashes = 0, accepted_truncations = 0;
  // Bags.
  for (int i = 0; i < 10000; ++i) {
    FeatureBag bag;
    const auto k = static_cast<Eigen::Index>(rng.below(12));
    const auto d = static_cast<Eigen::Index>(1 + rng.below(9));
    bag.slide_id = std::string(rng.below(20), 'a' + static_cast<char>(rng.below(26)));
    bag.label = static_cast<std::int32_t>(rng.next_u64());
    bag.patch_size = static_cast<std::uint32_t>(rng.next_u64());
    bag.step = static_cast<std::uint32_t>(rng.next_u64());
    bag.features.resize(k, d);
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        const auto bits = static_cast<std::uint32_t>(rng.next_u64());
        float v;
        std::memcpy(&v, &bits, 4);
        if (!std::isfinite(v)) v = static_cast<float>(rng.normal());
        bag.features(r, c) = v;
      }
      bag.coords.push_back({static_cast<std::int32_t>(rng.next_u64()), static_cast<std::int32_t>(rng.next_u64())});
    }
    const std::string bytes = write_bag(bag);
    try {
      const FeatureBag back = read_bag(bytes);
      if (!(back == bag) || write_bag(back) != bytes) ++mismatches;
    } catch (...) {
      ++mismatches;
    }
    const auto cut = static_cast<std::size_t>(rng.below(bytes.size()));
    try {
      (void)read_bag(std::string_view(bytes).substr(0, cut));
      ++accepted_truncations;
    } catch (const FormatError&) {
    } catch (...) {
      ++crashes;
    }
  }
  // Checkpoints: a few base parameter sets, each iteration mutating random entries.
  std::vector<ClamParams> bases;
  for (int n = 2; n <= 4; ++n) bases.push_back(init_params(n, rng, ScaleRule::UniformFanIn, 1 + rng.below(6)));
  for (int i = 0; i < 10000; ++i) {
    ClamParams& p = bases[rng.below(bases.size())];
    for (int j = 0; j < 16; ++j) {
      Matrix& b = *p.blocks()[rng.below(ClamParams::kBlockCount)];
      const std::uint64_t bits = rng.next_u64();
      double v;
      std::memcpy(&v, &bits, 8);
      if (!std::isfinite(v)) v = -0.0;
      b.data()[rng.below(static_cast<std::uint64_t>(b.size()))] = v;
    }
    const std::string bytes = encode_checkpoint(p);
    try {
      const ClamParams back = decode_checkpoint(bytes);
      if (encode_checkpoint(back) != bytes) ++mismatches;
      for (std::size_t b = 0; b < ClamParams::kBlockCount; ++b) {
        if (std::memcmp(back.blocks()[b]->data(), p.blocks()[b]->data(), sizeof(double) * p.blocks()[b]->size()) != 0)
          ++mismatches;
      }
    } catch (...) {
      ++mismatches;
    }
    const auto cut = static_cast<std::size_t>(rng.below(bytes.size()));
    try {
      (void)decode_checkpoint(std::string_view(bytes).substr(0, cut));
      ++accepted_truncations;
    } catch (const FormatError&) {
    } catch (...) {
      ++crashes;
    }
  }
  return {mismatches == 0 && crashes == 0 && accepted_truncations == 0,
          fmt("10000 bag + 10000 checkpoint round trips: %d mismatches, %d non-format failures, %d truncations accepted",
              mismatches, crashes, accepted_truncations)};
}

Outcome metrics_check() {
  const double a = auc_mw(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1});
  const double ties = auc_mw(std::vector<double>{0.3, 0.3, 0.3, 0.3, 0.3}, std::vector<int>{0, 1, 0, 1, 1});
  SeededRng rng(8);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + rng.below(30);
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = static_cast<double>(rng.below(6));  // heavy ties
      l[j] = j < 2 ? static_cast<int>(j) : static_cast<int>(rng.below(2));
    }
    worst = std::max(worst, std::abs(auc_mw(s, l) - oracle::auc_pairs(s, l)));
  }
  return {a == 0.75 && ties == 0.5 && worst < 1e-12,
          fmt("example %.6g (0.75), all-tied %.6g (0.5), max |auc - pair enumeration| %.1e on tied draws", a, ties, worst)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--quick") {
      g_quick = true;
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string name;
      while (std::getline(ss, name, ',')) only.insert(name);
    } else {
      std::fprintf(stderr, "usage: %s [--quick] [--only name,...]\n", argv[0]);
      return 64;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient_correctness", gradient_correctness},
      {"loss_identity", loss_identity},
      {"algorithm1_counts", algorithm1_counts},
      {"permutation_invariance", permutation_invariance},
      {"oracle_equivalence", oracle_equivalence},
      {"synthetic_learning", synthetic_learning},
      {"clam_vs_mil", clam_vs_mil},
      {"early_stopping", early_stopping},
      {"heatmap_exactness", heatmap_exactness},
      {"formats", formats_fuzz},
      {"metrics", metrics_check},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %-24s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed;
}
