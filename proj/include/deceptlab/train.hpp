#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "deceptlab/data.hpp"
#include "deceptlab/metrics.hpp"
#include "deceptlab/model.hpp"
#include "deceptlab/rng.hpp"

namespace deceptlab::train {

enum class OptimizerKind { sgd, adam };

OptimizerKind optimizer_from_string(const std::string& name);
std::string to_string(OptimizerKind k);

struct TrainConfig {
  double lr_initial = 0.001;
  OptimizerKind optimizer = OptimizerKind::sgd;
  int es_patience_phase1 = 10;
  int es_patience_phase2 = 2;
  int plateau_patience = 3;
  double plateau_factor = 0.1;
  int folds = 5;
  int repetitions = 5;
  double val_fraction = 0.2;
  std::uint64_t seed = 42;
  int batch_size = 16;
  int max_epochs_per_phase = 200;  // safety bound; early stopping is the regularizer
  bool parallel_runs = true;

  void validate() const;
};

struct ClassWeights {
  double weight_truthful = 1.0;
  double weight_deceptive = 1.0;
  double of(int label) const { return label == 1 ? weight_deceptive : weight_truthful; }
};

// w_c = (n_truthful + n_deceptive) / (2 n_c): weighted class masses match.
ClassWeights class_weights(std::size_t n_truthful, std::size_t n_deceptive);

// Scalar convenience mirror of the graph-level loss op.
double weighted_bce(double prob, int label, const ClassWeights& weights);

// SGD or Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias-corrected) over the
// model's parameter groups; frozen groups are skipped entirely.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::vector<LayerParamsPtr> groups);
  void step(double lr);
  void zero_grad();

 private:
  struct Slot {
    TensorPtr tensor;
    const LayerParams* group;
    std::vector<double> m, v;
  };
  OptimizerKind kind_;
  std::vector<LayerParamsPtr> groups_;
  std::vector<Slot> slots_;
  long long t_ = 0;
};

// Early-stopping and reduce-on-plateau bookkeeping. Strict improvement;
// both counters reset on any improvement; the plateau counter also resets
// when it fires.
class TrainLoopControl {
 public:
  TrainLoopControl(int es_patience, int plateau_patience, double plateau_factor, double lr0);

  struct Decision {
    bool improved = false;
    bool stop = false;
    double lr = 0;
  };
  Decision observe(double val_loss);

  double best_loss() const { return best_loss_; }
  int best_epoch() const { return best_epoch_; }
  double lr() const { return lr_; }

 private:
  int es_patience_, plateau_patience_;
  double plateau_factor_, lr_;
  double best_loss_;
  int best_epoch_ = 0, epoch_ = 0, es_counter_ = 0, plateau_counter_ = 0;
};

struct EpochRecord {
  double train_loss = 0;
  double val_loss = 0;
  double lr = 0;
};

struct FitHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 1-based within this phase
  double best_val_loss = 0;
  double final_lr = 0;
};

struct Example {
  EncodedStatement q1;
  EncodedStatement q2;
  std::vector<double> lexicon;
  int label = 0;
  std::string id;
};

using Dataset = std::vector<Example>;

// One training phase: phase 1 freezes the encoder (patience
// es_patience_phase1), phase 2 unfreezes it (patience es_patience_phase2).
// The weights achieving minimum validation loss are restored at the end.
FitHistory fit(Model& model, const Dataset& train_set, const Dataset& val_set,
               const TrainConfig& config, int phase, const ClassWeights& weights,
               std::uint64_t seed);

double mean_loss(const Model& model, const Dataset& set, const ClassWeights& weights);
std::vector<double> score(const Model& model, const Dataset& set);

// Stratified index partitions: per-fold class counts within +-1 of an even
// split. Indices are grouped by label, shuffled, and dealt round-robin.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels,
                                                       int folds, Rng& rng);
// Stratified (1 - val_fraction)/val_fraction split of `indices`.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<int>& labels, const std::vector<std::size_t>& indices,
    double val_fraction, Rng& rng);

// Per-document lexicon features for coatt_liwc, keyed by statement id.
using FeatureLookup = std::function<std::vector<double>(const data::StatementPair&)>;

struct RunResult {
  int repetition = 0;
  int fold = 0;
  std::uint64_t seed = 0;
  int epochs_phase1 = 0;
  int epochs_phase2 = 0;
  double final_lr = 0;
  MetricsReport metrics;
};

struct CvResult {
  std::vector<RunResult> runs;
  MetricsReport aggregate;
};

struct CvHooks {
  // Return a finished result to skip refitting this run (resume support).
  std::function<std::optional<RunResult>(int repetition, int fold)> lookup;
  // Called once per freshly fitted run, serialized across threads.
  std::function<void(const RunResult&, const Model&, const data::Vocabulary&)> on_run;
};

// repetitions x folds independent runs. Folds are re-drawn per repetition
// with repetition-specific seeds; within each run the training portion is
// split 80/20 (stratified) into train/validation, the vocabulary is built
// from the training split only, and the test fold never touches training.
CvResult cross_validate(const std::vector<data::StatementPair>& dataset,
                        const ModelConfig& model_config, const TrainConfig& train_config,
                        const FeatureLookup& features = nullptr, const CvHooks* hooks = nullptr);

}  // namespace deceptlab::train
