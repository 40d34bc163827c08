#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "zslforge/evaluate.hpp"
#include "zslforge/train.hpp"

namespace zslforge {

struct EvalOptions {
  int n_per_class = 200;
  double clf_lr = 1e-3;
  int clf_epochs = 100;
  double gate_lr = 1e-3;
  int gate_epochs = 100;
  double gate_threshold = 0.5;
  bool synth_seen_for_seen_clf = false;  // add synthesized seen features to
                                         // the seen expert's training set
};

struct ZslEvaluation {
  EvalReport czsl;
  EvalReport gzsl;
  CascadeClassifier cascade;
  LabeledFeatures synthesized;
};

/// Synthesis + classifier training + both protocols for a trained generator.
/// Deterministic given the seed. Draw order: synthesis, unseen expert, gate,
/// seen expert.
ZslEvaluation evaluate_generator(const MlpT<double>& generator,
                                 const SplitDataset& ds,
                                 const EvalOptions& opts, std::uint64_t seed);

/// Generalized protocol with one flat softmax over all classes, trained on
/// real seen plus synthesized unseen features. Baseline for the cascade.
EvalReport evaluate_flat_baseline(const MlpT<double>& generator,
                                  const SplitDataset& ds,
                                  const EvalOptions& opts, std::uint64_t seed);

struct AblationRow {
  int stage1_epochs = 0;
  std::uint64_t seed = 0;
  double czsl_accuracy = 0;  // percent
};

/// Table-3 style sweep: for each seed and each stage-1 epoch count, run the
/// full two-stage pipeline and record conventional accuracy. `make_dataset`
/// supplies the per-seed dataset. Requires at least two grid values. Rows
/// come back ordered by (seed, grid) regardless of worker parallelism.
std::vector<AblationRow> run_ablation(
    const std::function<SplitDataset(std::uint64_t)>& make_dataset,
    const TrainConfig& base_cfg, const EvalOptions& eval_opts,
    const std::vector<int>& stage1_grid,
    const std::vector<std::uint64_t>& seeds, int max_workers = 1);

/// Worker cap from ZSLFORGE_THREADS (defaults to 1 = sequential).
int env_thread_cap();

/// Runs one job per index, in parallel when workers > 1. Each job must be
/// self-contained; results are kept in index order.
void parallel_for_indices(int n, int workers,
                          const std::function<void(int)>& job);

}  // namespace zslforge
