#include "deceptlab/train.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace deceptlab::train {

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer: " + name);
}

std::string to_string(OptimizerKind k) {
  return k == OptimizerKind::sgd ? "sgd" : "adam";
}

void TrainConfig::validate() const {
  if (!(lr_initial > 0)) throw ConfigError("train config: lr_initial must be positive");
  if (es_patience_phase1 < 1 || es_patience_phase2 < 1)
    throw ConfigError("train config: early-stopping patiences must be >= 1");
  if (plateau_patience < 1) throw ConfigError("train config: plateau_patience must be >= 1");
  if (!(plateau_factor > 0 && plateau_factor < 1))
    throw ConfigError("train config: plateau_factor must lie in (0, 1)");
  if (folds < 2) throw ConfigError("train config: folds must be >= 2");
  if (repetitions < 1) throw ConfigError("train config: repetitions must be >= 1");
  if (!(val_fraction > 0 && val_fraction < 1))
    throw ConfigError("train config: val_fraction must lie in (0, 1)");
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (max_epochs_per_phase < 1)
    throw ConfigError("train config: max_epochs_per_phase must be >= 1");
}

ClassWeights class_weights(std::size_t n_truthful, std::size_t n_deceptive) {
  if (n_truthful == 0 || n_deceptive == 0)
    throw DomainError("class_weights: both classes need at least one example");
  const double total = static_cast<double>(n_truthful + n_deceptive);
  return {total / (2.0 * static_cast<double>(n_truthful)),
          total / (2.0 * static_cast<double>(n_deceptive))};
}

double weighted_bce(double prob, int label, const ClassWeights& weights) {
  const double p = std::clamp(prob, 1e-7, 1.0 - 1e-7);
  const double y = static_cast<double>(label);
  return -weights.of(label) * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

Optimizer::Optimizer(OptimizerKind kind, std::vector<LayerParamsPtr> groups)
    : kind_(kind), groups_(std::move(groups)) {
  for (const auto& group : groups_)
    for (const auto& [key, tensor] : group->weights) {
      Slot slot;
      slot.tensor = tensor;
      slot.group = group.get();
      if (kind_ == OptimizerKind::adam) {
        slot.m.assign(tensor->size(), 0.0);
        slot.v.assign(tensor->size(), 0.0);
      }
      slots_.push_back(std::move(slot));
    }
}

void Optimizer::step(double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++t_;
  for (auto& slot : slots_) {
    if (slot.group->frozen) continue;
    Tensor& p = *slot.tensor;
    if (p.grad.size() != p.data.size()) continue;  // no gradient reached this tensor
    if (kind_ == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] -= lr * p.grad[i];
    } else {
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
      for (std::size_t i = 0; i < p.data.size(); ++i) {
        const double g = p.grad[i];
        slot.m[i] = beta1 * slot.m[i] + (1.0 - beta1) * g;
        slot.v[i] = beta2 * slot.v[i] + (1.0 - beta2) * g * g;
        const double mhat = slot.m[i] / bc1;
        const double vhat = slot.v[i] / bc2;
        p.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
}

void Optimizer::zero_grad() {
  for (auto& slot : slots_) slot.tensor->zero_grad();
}

TrainLoopControl::TrainLoopControl(int es_patience, int plateau_patience,
                                   double plateau_factor, double lr0)
    : es_patience_(es_patience),
      plateau_patience_(plateau_patience),
      plateau_factor_(plateau_factor),
      lr_(lr0),
      best_loss_(std::numeric_limits<double>::infinity()) {}

TrainLoopControl::Decision TrainLoopControl::observe(double val_loss) {
  ++epoch_;
  Decision d;
  if (val_loss < best_loss_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch_;
    es_counter_ = 0;
    plateau_counter_ = 0;
    d.improved = true;
  } else {
    ++es_counter_;
    ++plateau_counter_;
    if (plateau_counter_ >= plateau_patience_) {
      lr_ *= plateau_factor_;
      plateau_counter_ = 0;
    }
    if (es_counter_ >= es_patience_) d.stop = true;
  }
  d.lr = lr_;
  return d;
}

namespace {

Model::Graph example_forward(const Model& model, const Example& ex) {
  const bool paired = model.config().paired();
  const bool liwc = model.config().architecture == Architecture::coatt_liwc;
  return model.forward_graph(ex.q1, paired ? &ex.q2 : nullptr, liwc ? &ex.lexicon : nullptr);
}

std::vector<std::vector<double>> snapshot_params(const Model& model) {
  std::vector<std::vector<double>> out;
  for (const auto& group : model.parameters())
    for (const auto& [key, tensor] : group->weights) out.push_back(tensor->data);
  return out;
}

void restore_params(Model& model, const std::vector<std::vector<double>>& snapshot) {
  std::size_t i = 0;
  for (const auto& group : model.parameters())
    for (const auto& [key, tensor] : group->weights) tensor->data = snapshot[i++];
}

}  // namespace

double mean_loss(const Model& model, const Dataset& set, const ClassWeights& weights) {
  NoGradGuard guard;
  double acc = 0.0;
  for (const auto& ex : set) {
    const double p = example_forward(model, ex).prob->data[0];
    acc += weighted_bce(p, ex.label, weights);
  }
  return acc / static_cast<double>(set.size());
}

std::vector<double> score(const Model& model, const Dataset& set) {
  NoGradGuard guard;
  std::vector<double> probs;
  probs.reserve(set.size());
  for (const auto& ex : set) probs.push_back(example_forward(model, ex).prob->data[0]);
  return probs;
}

FitHistory fit(Model& model, const Dataset& train_set, const Dataset& val_set,
               const TrainConfig& config, int phase, const ClassWeights& weights,
               std::uint64_t seed) {
  config.validate();
  if (phase != 1 && phase != 2) throw ConfigError("fit: phase must be 1 or 2");
  if (train_set.empty() || val_set.empty())
    throw ConfigError("fit: training and validation splits must be non-empty");

  model.set_encoder_frozen(phase == 1);
  const int patience = phase == 1 ? config.es_patience_phase1 : config.es_patience_phase2;
  TrainLoopControl control(patience, config.plateau_patience, config.plateau_factor,
                           config.lr_initial);
  Optimizer optimizer(config.optimizer, model.parameters());
  Rng rng(seed);

  FitHistory history;
  auto best = snapshot_params(model);

  std::vector<std::size_t> indices(train_set.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;

  double lr = control.lr();
  for (int epoch = 1; epoch <= config.max_epochs_per_phase; ++epoch) {
    rng.shuffle(indices);
    double train_loss_sum = 0.0;
    for (std::size_t start = 0; start < indices.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(indices.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<TensorPtr> losses;
      losses.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const Example& ex = train_set[indices[i]];
        auto g = example_forward(model, ex);
        losses.push_back(ops::bce_loss(g.prob, ex.label, weights.of(ex.label)));
      }
      auto batch_loss = ops::mean_scalars(losses);
      train_loss_sum += batch_loss->data[0] * static_cast<double>(stop - start);
      backward(batch_loss);
      optimizer.step(lr);
      optimizer.zero_grad();
    }
    EpochRecord rec;
    rec.train_loss = train_loss_sum / static_cast<double>(train_set.size());
    rec.val_loss = mean_loss(model, val_set, weights);
    rec.lr = lr;
    history.epochs.push_back(rec);

    const auto decision = control.observe(rec.val_loss);
    if (decision.improved) best = snapshot_params(model);
    lr = decision.lr;
    if (decision.stop) break;
  }

  restore_params(model, best);
  history.best_epoch = control.best_epoch();
  history.best_val_loss = control.best_loss();
  history.final_lr = control.lr();
  return history;
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels,
                                                       int folds, Rng& rng) {
  // Per class: an even share per fold, the remainder going to the currently
  // lightest folds so overall fold sizes also balance (1640/5 -> 328 each).
  std::vector<std::vector<std::size_t>> out(folds);
  const auto k = static_cast<std::size_t>(folds);
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) members.push_back(i);
    rng.shuffle(members);
    std::vector<std::size_t> order(k);
    for (std::size_t f = 0; f < k; ++f) order[f] = f;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return out[a].size() < out[b].size(); });
    const std::size_t base = members.size() / k, rem = members.size() % k;
    std::size_t next = 0;
    for (std::size_t rank = 0; rank < k; ++rank) {
      const std::size_t quota = base + (rank < rem ? 1 : 0);
      auto& fold = out[order[rank]];
      for (std::size_t i = 0; i < quota; ++i) fold.push_back(members[next++]);
    }
  }
  for (auto& fold : out) std::sort(fold.begin(), fold.end());
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<int>& labels, const std::vector<std::size_t>& indices,
    double val_fraction, Rng& rng) {
  std::vector<std::size_t> train, val;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t idx : indices)
      if (labels[idx] == cls) members.push_back(idx);
    rng.shuffle(members);
    std::size_t n_val = static_cast<std::size_t>(
        std::llround(val_fraction * static_cast<double>(members.size())));
    if (n_val >= members.size() && !members.empty()) n_val = members.size() - 1;
    for (std::size_t i = 0; i < members.size(); ++i)
      (i < n_val ? val : train).push_back(members[i]);
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {std::move(train), std::move(val)};
}

namespace {

Example encode_example(const data::StatementPair& pair, const data::Vocabulary& vocab,
                       const ModelConfig& cfg, const FeatureLookup& features) {
  Example ex;
  ex.id = pair.id;
  ex.label = pair.label;
  ex.q1 = data::encode(pair.q1, vocab, cfg.max_len_q1);
  ex.q2 = data::encode(pair.q2, vocab, cfg.max_len_q2);
  if (cfg.architecture == Architecture::coatt_liwc) ex.lexicon = features(pair);
  return ex;
}

}  // namespace

CvResult cross_validate(const std::vector<data::StatementPair>& dataset,
                        const ModelConfig& model_config, const TrainConfig& train_config,
                        const FeatureLookup& features, const CvHooks* hooks) {
  train_config.validate();
  if (model_config.architecture == Architecture::coatt_liwc && !features)
    throw ConfigError("cross_validate: coatt_liwc needs a lexicon feature lookup");

  std::vector<int> labels;
  labels.reserve(dataset.size());
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& pair : dataset) {
    labels.push_back(pair.label);
    (pair.label == 1 ? n_pos : n_neg)++;
  }
  const auto folds = static_cast<std::size_t>(train_config.folds);
  if (n_pos < folds || n_neg < folds)
    throw ConfigError("cross_validate: a class has fewer members (" +
                      std::to_string(std::min(n_pos, n_neg)) + ") than folds (" +
                      std::to_string(folds) + ")");

  // Folds are re-drawn per repetition from repetition-specific seeds.
  std::vector<std::vector<std::vector<std::size_t>>> fold_plan(train_config.repetitions);
  for (int rep = 0; rep < train_config.repetitions; ++rep) {
    Rng fold_rng(derive_seed(train_config.seed, static_cast<std::uint64_t>(rep), 0xF01D));
    fold_plan[rep] = stratified_folds(labels, train_config.folds, fold_rng);
  }

  const int n_runs = train_config.repetitions * train_config.folds;
  std::vector<RunResult> results(n_runs);
  std::vector<std::exception_ptr> errors(n_runs);

  auto run_one = [&](int job) {
    const int rep = job / train_config.folds;
    const int fold = job % train_config.folds;
    const std::uint64_t run_seed =
        derive_seed(train_config.seed, static_cast<std::uint64_t>(job), 0x5EED);

    if (hooks && hooks->lookup) {
      if (auto cached = hooks->lookup(rep, fold)) {
        results[job] = *cached;
        return;
      }
    }

    const auto& test_idx = fold_plan[rep][fold];
    std::vector<std::size_t> trainval;
    for (int f = 0; f < train_config.folds; ++f)
      if (f != fold)
        trainval.insert(trainval.end(), fold_plan[rep][f].begin(), fold_plan[rep][f].end());
    std::sort(trainval.begin(), trainval.end());

    Rng split_rng(derive_seed(run_seed, 1));
    auto [train_idx, val_idx] =
        stratified_split(labels, trainval, train_config.val_fraction, split_rng);

    // Vocabulary from the training split only; test-fold text must never
    // influence any fitted state.
    std::vector<std::string> train_texts;
    train_texts.reserve(train_idx.size() * 2);
    for (std::size_t idx : train_idx) {
      train_texts.push_back(dataset[idx].q1);
      if (!dataset[idx].q2.empty()) train_texts.push_back(dataset[idx].q2);
    }
    const auto vocab = data::build_vocab(train_texts);

    ModelConfig cfg = model_config;
    cfg.vocab_size = vocab.size();

    auto encode_set = [&](const std::vector<std::size_t>& idx) {
      Dataset set;
      set.reserve(idx.size());
      for (std::size_t i : idx)
        set.push_back(encode_example(dataset[i], vocab, cfg, features));
      return set;
    };
    const Dataset train_set = encode_set(train_idx);
    const Dataset val_set = encode_set(val_idx);
    const Dataset test_set = encode_set(test_idx);

    std::size_t train_pos = 0;
    for (std::size_t idx : train_idx) train_pos += labels[idx] == 1 ? 1 : 0;
    const auto weights = class_weights(train_idx.size() - train_pos, train_pos);

    Model model = Model::build(cfg, run_seed);
    const auto h1 = fit(model, train_set, val_set, train_config, 1, weights,
                        derive_seed(run_seed, 2));
    const auto h2 = fit(model, train_set, val_set, train_config, 2, weights,
                        derive_seed(run_seed, 3));

    const auto probs = score(model, test_set);
    std::vector<int> test_labels;
    test_labels.reserve(test_idx.size());
    for (std::size_t idx : test_idx) test_labels.push_back(labels[idx]);

    RunResult r;
    r.repetition = rep;
    r.fold = fold;
    r.seed = run_seed;
    r.epochs_phase1 = static_cast<int>(h1.epochs.size());
    r.epochs_phase2 = static_cast<int>(h2.epochs.size());
    r.final_lr = h2.final_lr;
    r.metrics = point_metrics(confusion(probs, test_labels));
    r.metrics.auroc = auroc(probs, test_labels);
    results[job] = r;

    if (hooks && hooks->on_run) {
#ifdef _OPENMP
#pragma omp critical(deceptlab_cv_hooks)
#endif
      hooks->on_run(r, model, vocab);
    }
  };

  if (train_config.parallel_runs) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int job = 0; job < n_runs; ++job) {
      try {
        run_one(job);
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  } else {
    for (int job = 0; job < n_runs; ++job) {
      try {
        run_one(job);
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  CvResult cv;
  cv.runs = std::move(results);
  std::vector<MetricsReport> rows;
  rows.reserve(cv.runs.size());
  for (const auto& r : cv.runs) rows.push_back(r.metrics);
  cv.aggregate = aggregate(rows);
  return cv;
}

}  // namespace deceptlab::train
