#include "clam/training.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace clam {

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw Error(ErrorKind::Config, "learning_rate must be positive");
  if (!(weight_decay >= 0)) throw Error(ErrorKind::Config, "weight_decay must be non-negative");
  if (batch_size != 1) throw Error(ErrorKind::Config, "only batch_size 1 is supported");
  if (min_epochs < 0 || max_epochs < 1 || min_epochs > max_epochs) {
    throw Error(ErrorKind::Config, "epoch bounds must satisfy 0 <= min_epochs <= max_epochs, max_epochs >= 1");
  }
  if (patience < 1) throw Error(ErrorKind::Config, "patience must be at least 1");
  loss.validate();
}

void adam_update(std::span<Matrix* const> params, std::span<const Matrix* const> grads, OptimizerState& state,
                 double learning_rate, double weight_decay) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw Error(ErrorKind::Dimension, "adam: parameter, gradient and state block counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i]->rows() || params[i]->cols() != grads[i]->cols() ||
        params[i]->rows() != state.first_moment[i].rows() || params[i]->cols() != state.first_moment[i].cols()) {
      throw Error(ErrorKind::Dimension, "adam: shape mismatch in block " + std::to_string(i));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i]->array();
    auto m = state.first_moment[i].array();
    auto v = state.second_moment[i].array();
    const auto g = (grads[i]->array() + weight_decay * theta).eval();
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.square();
    theta -= learning_rate * (m / correction1) / ((v / correction2).sqrt() + state.eps);
  }
}

EarlyStopping::EarlyStopping(int min_epochs, int max_epochs, int patience)
    : min_epochs_(min_epochs),
      max_epochs_(max_epochs),
      patience_(patience),
      best_loss_(std::numeric_limits<double>::infinity()) {
  if (min_epochs < 0 || max_epochs < 1 || min_epochs > max_epochs || patience < 1) {
    throw Error(ErrorKind::Config, "early stopping: need 0 <= min_epochs <= max_epochs and patience >= 1");
  }
}

bool EarlyStopping::update(int epoch, double val_loss) {
  improved_ = val_loss < best_loss_;
  if (improved_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  stop_ = epoch >= min_epochs_ && since_best_ > patience_;
  return stop_;
}

SplitPlan monte_carlo_split(const std::vector<CaseRecord>& cases, int n_folds, const SplitFractions& fractions,
                            SeededRng& rng) {
  if (n_folds < 1) throw Error(ErrorKind::Config, "n_folds must be at least 1");
  const double sum = fractions.train + fractions.val + fractions.test;
  if (std::abs(sum - 1.0) > 1e-9 || fractions.train <= 0 || fractions.val <= 0 || fractions.test <= 0) {
    throw Error(ErrorKind::Config, "split fractions must be positive and sum to 1");
  }
  std::map<int, std::vector<std::string>> by_class;
  for (const auto& c : cases) by_class[c.label].push_back(c.case_id);
  for (const auto& [label, ids] : by_class) {
    if (ids.size() < 3) {
      throw Error(ErrorKind::Split, "class " + std::to_string(label) + " has " + std::to_string(ids.size()) +
                                        " case(s); at least 3 are needed");
    }
  }

  SplitPlan plan;
  plan.fractions = fractions;
  for (int f = 0; f < n_folds; ++f) {
    Fold fold;
    for (const auto& [label, ids] : by_class) {
      std::vector<std::string> shuffled = ids;
      rng.shuffle(std::span<std::string>(shuffled));
      const auto n = static_cast<double>(shuffled.size());
      const std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fractions.val * n)));
      const std::size_t n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fractions.test * n)));
      const std::size_t n_train = shuffled.size() - n_val - n_test;
      auto it = shuffled.begin();
      fold.train.insert(fold.train.end(), it, it + static_cast<std::ptrdiff_t>(n_train));
      it += static_cast<std::ptrdiff_t>(n_train);
      fold.val.insert(fold.val.end(), it, it + static_cast<std::ptrdiff_t>(n_val));
      it += static_cast<std::ptrdiff_t>(n_val);
      fold.test.insert(fold.test.end(), it, shuffled.end());
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

BalancedSampler::BalancedSampler(std::span<const int> labels, int n_classes) {
  if (n_classes < 1) throw Error(ErrorKind::Sampler, "sampler needs at least one class");
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
  for (int l : labels) {
    if (l < 0 || l >= n_classes) throw Error(ErrorKind::Sampler, "label " + std::to_string(l) + " out of range");
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int c = 0; c < n_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw Error(ErrorKind::Sampler, "class " + std::to_string(c) + " has no training slides");
    }
  }
  double total = 0.0;
  for (int l : labels) total += 1.0 / static_cast<double>(counts[static_cast<std::size_t>(l)]);
  double running = 0.0;
  for (int l : labels) {
    const double p = 1.0 / static_cast<double>(counts[static_cast<std::size_t>(l)]) / total;
    probabilities_.push_back(p);
    running += p;
    cumulative_.push_back(running);
  }
}

std::size_t BalancedSampler::draw(SeededRng& rng) const {
  const double u = rng.uniform() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
}

std::vector<std::size_t> BalancedSampler::epoch(SeededRng& rng) const {
  std::vector<std::size_t> out(cumulative_.size());
  for (auto& i : out) i = draw(rng);
  return out;
}

std::string format_epoch_record(const EpochRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "epoch=%d train_loss=%.17g val_loss=%.17g val_total=%.17g stopped=%d", r.epoch,
                r.train_loss, r.val_loss, r.val_total, r.stopped ? 1 : 0);
  return buf;
}

EpochRecord parse_epoch_record(const std::string& line) {
  EpochRecord r;
  std::istringstream in(line);
  std::string field;
  int seen = 0;
  while (in >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Format, "log field without '=': " + field);
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    try {
      if (key == "epoch") r.epoch = std::stoi(value);
      else if (key == "train_loss") r.train_loss = std::stod(value);
      else if (key == "val_loss") r.val_loss = std::stod(value);
      else if (key == "val_total") r.val_total = std::stod(value);
      else if (key == "stopped") r.stopped = std::stoi(value) != 0;
      else throw Error(ErrorKind::Format, "unknown log key '" + key + "'");
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Format, "bad value for log key '" + key + "'");
    }
    ++seen;
  }
  if (seen != 5) throw Error(ErrorKind::Format, "log record must have 5 fields: " + line);
  return r;
}

ModelOps<ClamParams> clam_ops(const LossConfig& loss) {
  ModelOps<ClamParams> ops;
  ops.loss_and_grad = [loss](const FeatureBag& bag, const ClamParams& params, ClamParams& grad) {
    StepResult step = clam_loss_and_grad(bag, params, loss);
    grad = std::move(step.grad);
    return step.loss.total;
  };
  ops.val_loss = [loss](const FeatureBag& bag, const ClamParams& params) {
    const ClamForward f = clam_forward(bag, params);
    PseudoLabelSet pseudo;
    if (bag.size() >= 2) {
      pseudo = generate_pseudo_labels(f.attention.attention, bag.label, loss);
    } else {
      pseudo.branches.resize(static_cast<std::size_t>(params.n_classes));
    }
    const LossTerms t = clam_loss(f, bag.label, pseudo, loss);
    return ValLoss{t.slide, t.total};
  };
  return ops;
}

ModelOps<MilParams> mil_ops() {
  ModelOps<MilParams> ops;
  ops.loss_and_grad = [](const FeatureBag& bag, const MilParams& params, MilParams& grad) {
    MilStep step = mil_loss_and_grad(bag, params);
    grad = std::move(step.grad);
    return step.loss;
  };
  ops.val_loss = [](const FeatureBag& bag, const MilParams& params) {
    const MilForward f = max_pool_forward(bag.features, params);
    const double ce = cross_entropy(f.slide_logits, bag.label).value;
    return ValLoss{ce, ce};
  };
  return ops;
}

FitResult<ClamParams> fit_clam(const std::vector<FeatureBag>& train, const std::vector<FeatureBag>& val,
                               ClamParams params, const TrainConfig& config,
                               const std::function<void(const EpochRecord&)>& on_epoch) {
  params.validate();
  return fit(train, val, std::move(params), config, clam_ops(config.loss), on_epoch);
}

FitResult<MilParams> fit_mil(const std::vector<FeatureBag>& train, const std::vector<FeatureBag>& val,
                             MilParams params, const TrainConfig& config,
                             const std::function<void(const EpochRecord&)>& on_epoch) {
  params.validate();
  return fit(train, val, std::move(params), config, mil_ops(), on_epoch);
}

double mil_train_step(const FeatureBag& bag, MilParams& params, OptimizerState& state, const TrainConfig& config) {
  MilStep step = mil_loss_and_grad(bag, params);
  adam_step(params, step.grad, state, config);
  return step.loss;
}

FoldEvaluation summarize_predictions(std::vector<std::string> slide_ids, std::vector<int> labels, Matrix probs) {
  if (labels.empty()) throw Error(ErrorKind::Evaluation, "empty test set");
  FoldEvaluation e;
  e.slide_ids = std::move(slide_ids);
  e.labels = std::move(labels);
  e.probs = std::move(probs);
  e.predictions = argmax_rows(e.probs);
  double loss = 0.0;
  for (std::size_t i = 0; i < e.labels.size(); ++i) {
    loss -= std::log(std::max(e.probs(static_cast<Eigen::Index>(i), e.labels[i]), 1e-300));
  }
  e.mean_loss = loss / static_cast<double>(e.labels.size());

  std::vector<bool> present(static_cast<std::size_t>(e.probs.cols()), false);
  for (int l : e.labels) present[static_cast<std::size_t>(l)] = true;
  if (std::all_of(present.begin(), present.end(), [](bool b) { return b; })) {
    e.macro = macro_ovr_auc(e.probs, e.labels);
    if (e.probs.cols() == 2) {
      const Vector positive = e.probs.col(1);
      e.auc = auc_mw(std::span<const double>(positive.data(), static_cast<std::size_t>(positive.size())), e.labels);
    }
  }
  e.confidence = confidence_summary(e.probs, e.labels, e.predictions);
  return e;
}

namespace {

template <typename Params, typename Forward>
FoldEvaluation evaluate_with(const Params& params, const std::vector<FeatureBag>& test, Forward forward) {
  if (test.empty()) throw Error(ErrorKind::Evaluation, "empty test set");
  std::vector<std::string> ids;
  std::vector<int> labels;
  Matrix probs(static_cast<Eigen::Index>(test.size()), params.n_classes);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& bag = test[i];
    if (bag.label < 0 || bag.label >= params.n_classes) {
      throw Error(ErrorKind::Label, "slide '" + bag.slide_id + "' has label outside the model's classes");
    }
    ids.push_back(bag.slide_id);
    labels.push_back(bag.label);
    probs.row(static_cast<Eigen::Index>(i)) = forward(bag).transpose();
  }
  return summarize_predictions(std::move(ids), std::move(labels), std::move(probs));
}

}  // namespace

FoldEvaluation evaluate_fold(const ClamParams& params, const std::vector<FeatureBag>& test) {
  return evaluate_with(params, test, [&](const FeatureBag& bag) { return clam_forward(bag, params).attention.probs; });
}

FoldEvaluation evaluate_fold(const MilParams& params, const std::vector<FeatureBag>& test) {
  return evaluate_with(params, test, [&](const FeatureBag& bag) { return max_pool_forward(bag.features, params).probs; });
}

}  // namespace clam
