#pragma once

#include "clam/bag.hpp"
#include "clam/baselines.hpp"
#include "clam/error.hpp"
#include "clam/losses.hpp"
#include "clam/metrics.hpp"
#include "clam/model.hpp"
#include "clam/rng.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clam {

struct TrainConfig {
  double learning_rate = 2e-4;
  double weight_decay = 1e-5;  // L2 term added to the gradient
  int batch_size = 1;
  int min_epochs = 50;
  int max_epochs = 200;
  int patience = 20;
  LossConfig loss;
  std::uint64_t seed = 1;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Adam

struct OptimizerState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

/// Adam with bias correction. The L2 term decay * theta is added to the
/// gradient before the moment update (coupled weight decay).
void adam_update(std::span<Matrix* const> params, std::span<const Matrix* const> grads, OptimizerState& state,
                 double learning_rate, double weight_decay);

template <typename Params>
OptimizerState make_optimizer(const Params& params) {
  OptimizerState s;
  for (const Matrix* m : params.blocks()) {
    s.first_moment.push_back(Matrix::Zero(m->rows(), m->cols()));
    s.second_moment.push_back(Matrix::Zero(m->rows(), m->cols()));
  }
  return s;
}

template <typename Params>
void adam_step(Params& params, const Params& grads, OptimizerState& state, const TrainConfig& config) {
  auto p = params.blocks();
  auto g = grads.blocks();
  adam_update(p, g, state, config.learning_rate, config.weight_decay);
}

// ---------------------------------------------------------------------------
// Early stopping

/// Tracks the lowest validation loss. An epoch improves only if its loss is
/// strictly below the best so far. should_stop() becomes true once at least
/// min_epochs have elapsed (epoch index >= min_epochs) and more than
/// `patience` epochs have passed without improvement.
class EarlyStopping {
 public:
  EarlyStopping(int min_epochs, int max_epochs, int patience);

  /// Records epoch `epoch` (0-based) and returns should_stop().
  bool update(int epoch, double val_loss);

  bool should_stop() const { return stop_; }
  bool improved() const { return improved_; }
  double best_loss() const { return best_loss_; }
  int best_epoch() const { return best_epoch_; }
  int epochs_since_best() const { return since_best_; }
  int max_epochs() const { return max_epochs_; }

 private:
  int min_epochs_;
  int max_epochs_;
  int patience_;
  double best_loss_;
  int best_epoch_ = -1;
  int since_best_ = 0;
  bool improved_ = false;
  bool stop_ = false;
};

// ---------------------------------------------------------------------------
// Splits and sampling

struct CaseRecord {
  std::string case_id;
  int label = 0;
  std::vector<std::string> slide_ids;
};

struct Fold {
  std::vector<std::string> train, val, test;  // case ids
};

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct SplitPlan {
  std::vector<Fold> folds;
  SplitFractions fractions;
  bool stratified_by_class = true;
  bool group_by_case = true;
};

/// Independent stratified case-level partitions, one per fold. Within each
/// class the cases are shuffled, then max(1, round(f_val * n)) go to
/// validation, max(1, round(f_test * n)) to test and the rest to training.
SplitPlan monte_carlo_split(const std::vector<CaseRecord>& cases, int n_folds, const SplitFractions& fractions,
                            SeededRng& rng);

/// Multinomial slide sampler with probability proportional to 1 / count(class).
class BalancedSampler {
 public:
  BalancedSampler(std::span<const int> labels, int n_classes);

  const std::vector<double>& probabilities() const { return probabilities_; }
  std::size_t draw(SeededRng& rng) const;
  /// N draws with replacement, N = number of slides.
  std::vector<std::size_t> epoch(SeededRng& rng) const;

 private:
  std::vector<double> probabilities_;
  std::vector<double> cumulative_;
};

// ---------------------------------------------------------------------------
// Training loop

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean training objective over the epoch's draws
  double val_loss = 0.0;    // mean slide-level cross-entropy, used for model selection
  double val_total = 0.0;   // mean full objective on validation bags
  bool stopped = false;
};

/// "epoch=3 train_loss=... val_loss=... val_total=... stopped=0", floats in %.17g.
std::string format_epoch_record(const EpochRecord& record);
EpochRecord parse_epoch_record(const std::string& line);

template <typename Params>
struct FitResult {
  Params best;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  int epochs_run = 0;
  bool early_stopped = false;
  std::vector<EpochRecord> log;
};

struct ValLoss {
  double slide = 0.0;
  double total = 0.0;
};

/// The pieces of a model the generic loop needs.
template <typename Params>
struct ModelOps {
  std::function<double(const FeatureBag&, const Params&, Params& grad)> loss_and_grad;
  std::function<ValLoss(const FeatureBag&, const Params&)> val_loss;
};

template <typename Params>
FitResult<Params> fit(const std::vector<FeatureBag>& train, const std::vector<FeatureBag>& val, Params params,
                      const TrainConfig& config, const ModelOps<Params>& ops,
                      const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  config.validate();
  if (train.empty()) throw Error(ErrorKind::Training, "empty training set");
  if (val.empty()) throw Error(ErrorKind::Training, "empty validation set");

  std::vector<int> labels;
  labels.reserve(train.size());
  for (const auto& b : train) labels.push_back(b.label);
  const BalancedSampler sampler(labels, params.n_classes);
  SeededRng rng(config.seed);
  OptimizerState opt = make_optimizer(params);
  EarlyStopping stopper(config.min_epochs, config.max_epochs, config.patience);

  FitResult<Params> result;
  result.best = params;
  Params grad = params.zeros_like();
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    double train_sum = 0.0;
    const auto draws = sampler.epoch(rng);
    for (std::size_t idx : draws) {
      const double loss = ops.loss_and_grad(train[idx], params, grad);
      if (!std::isfinite(loss)) throw TrainingError(epoch, "non-finite training loss on slide '" + train[idx].slide_id + "'");
      train_sum += loss;
      adam_step(params, grad, opt, config);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_sum / static_cast<double>(draws.size());
    for (const auto& b : val) {
      const ValLoss v = ops.val_loss(b, params);
      rec.val_loss += v.slide;
      rec.val_total += v.total;
    }
    rec.val_loss /= static_cast<double>(val.size());
    rec.val_total /= static_cast<double>(val.size());
    if (!std::isfinite(rec.val_loss)) throw TrainingError(epoch, "non-finite validation loss");

    const bool stop = stopper.update(epoch, rec.val_loss);
    if (stopper.improved()) result.best = params;
    rec.stopped = stop;
    result.log.push_back(rec);
    result.epochs_run = epoch + 1;
    if (on_epoch) on_epoch(rec);
    if (stop) {
      result.early_stopped = true;
      break;
    }
  }
  result.best_epoch = stopper.best_epoch();
  result.best_val_loss = stopper.best_loss();
  return result;
}

ModelOps<ClamParams> clam_ops(const LossConfig& loss);
ModelOps<MilParams> mil_ops();

FitResult<ClamParams> fit_clam(const std::vector<FeatureBag>& train, const std::vector<FeatureBag>& val,
                               ClamParams params, const TrainConfig& config,
                               const std::function<void(const EpochRecord&)>& on_epoch = {});
FitResult<MilParams> fit_mil(const std::vector<FeatureBag>& train, const std::vector<FeatureBag>& val,
                             MilParams params, const TrainConfig& config,
                             const std::function<void(const EpochRecord&)>& on_epoch = {});

/// One optimization step of the max-pooling baseline. Returns the loss.
double mil_train_step(const FeatureBag& bag, MilParams& params, OptimizerState& state, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Evaluation

struct FoldEvaluation {
  std::vector<std::string> slide_ids;
  std::vector<int> labels;
  Matrix probs;  // N x n
  std::vector<int> predictions;
  double mean_loss = 0.0;          // mean slide-level cross-entropy
  std::optional<double> auc;       // binary AUC on the class-1 column (n = 2)
  std::optional<MacroAuc> macro;   // absent when a class is missing from the labels
  ConfidenceSummary confidence;
};

/// Metrics from per-slide probabilities (also used for checkpoint ensembles).
FoldEvaluation summarize_predictions(std::vector<std::string> slide_ids, std::vector<int> labels, Matrix probs);

FoldEvaluation evaluate_fold(const ClamParams& params, const std::vector<FeatureBag>& test);
FoldEvaluation evaluate_fold(const MilParams& params, const std::vector<FeatureBag>& test);

}  // namespace clam
