#include "zslforge/pipeline.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

namespace zslforge {

ZslEvaluation evaluate_generator(const MlpT<double>& generator,
                                 const SplitDataset& ds,
                                 const EvalOptions& opts, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "evaluate"));
  ZslEvaluation out;
  out.synthesized =
      synthesize_unseen(generator, ds.attrs(), opts.n_per_class, rng);

  out.cascade.unseen_clf =
      train_softmax(out.synthesized.x, out.synthesized.y, opts.clf_lr,
                    opts.clf_epochs, rng, ds.attrs().unseen_classes);
  out.cascade.gate = train_gate(ds.seen_train_x(), ds.unseen_x(), opts.gate_lr,
                                opts.gate_epochs, rng);
  if (opts.synth_seen_for_seen_clf) {
    Rng synth_rng(derive_seed(seed, "synth-seen"));
    Matd x(ds.seen_train_x().rows() * 2, ds.d());
    x.topRows(ds.seen_train_x().rows()) = ds.seen_train_x();
    std::vector<int> y = ds.seen_train_y();
    Eigen::Index at = ds.seen_train_x().rows();
    for (Eigen::Index i = 0; i < ds.seen_train_x().rows(); ++i) {
      const int c = ds.seen_train_y()[static_cast<size_t>(i)];
      const Matd z = sample_gaussian(1, generator.in_dim() - ds.k(), synth_rng);
      x.row(at++) = generate(generator, z,
                             Matd(ds.attrs().attribute_of(c)));
      y.push_back(c);
    }
    out.cascade.seen_clf = train_softmax(x, y, opts.clf_lr, opts.clf_epochs,
                                         rng, ds.attrs().seen_classes);
  } else {
    out.cascade.seen_clf =
        train_softmax(ds.seen_train_x(), ds.seen_train_y(), opts.clf_lr,
                      opts.clf_epochs, rng, ds.attrs().seen_classes);
  }
  out.cascade.gate_threshold = opts.gate_threshold;

  out.czsl = evaluate_czsl(out.cascade.unseen_clf, ds);
  out.gzsl = evaluate_gzsl(out.cascade, ds);
  out.czsl.seed = seed;
  out.gzsl.seed = seed;
  return out;
}

EvalReport evaluate_flat_baseline(const MlpT<double>& generator,
                                  const SplitDataset& ds,
                                  const EvalOptions& opts, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "evaluate"));
  const LabeledFeatures synth =
      synthesize_unseen(generator, ds.attrs(), opts.n_per_class, rng);
  Matd x(ds.seen_train_x().rows() + synth.x.rows(), ds.d());
  x.topRows(ds.seen_train_x().rows()) = ds.seen_train_x();
  x.bottomRows(synth.x.rows()) = synth.x;
  std::vector<int> y = ds.seen_train_y();
  y.insert(y.end(), synth.y.begin(), synth.y.end());
  std::vector<int> all_classes = ds.attrs().seen_classes;
  all_classes.insert(all_classes.end(), ds.attrs().unseen_classes.begin(),
                     ds.attrs().unseen_classes.end());
  const SoftmaxClassifier flat =
      train_softmax(x, y, opts.clf_lr, opts.clf_epochs, rng, all_classes);
  EvalReport rep = evaluate_gzsl_flat(flat, ds);
  rep.seed = seed;
  return rep;
}

int env_thread_cap() {
  const char* env = std::getenv("ZSLFORGE_THREADS");
  if (!env) return 1;
  const long v = std::strtol(env, nullptr, 10);
  if (v < 1) return 1;
  return static_cast<int>(v);
}

void parallel_for_indices(int n, int workers,
                          const std::function<void(int)>& job) {
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) job(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::vector<AblationRow> run_ablation(
    const std::function<SplitDataset(std::uint64_t)>& make_dataset,
    const TrainConfig& base_cfg, const EvalOptions& eval_opts,
    const std::vector<int>& stage1_grid,
    const std::vector<std::uint64_t>& seeds, int max_workers) {
  if (stage1_grid.size() < 2)
    throw InvalidArgument("ablation: need a grid of at least two epoch values");
  if (seeds.empty()) throw InvalidArgument("ablation: need at least one seed");
  for (int e : stage1_grid)
    if (e < 0) throw InvalidArgument("ablation: negative epoch count");

  struct Job {
    std::uint64_t seed;
    int stage1_epochs;
  };
  std::vector<Job> jobs;
  for (const std::uint64_t s : seeds)
    for (const int e : stage1_grid) jobs.push_back({s, e});

  std::vector<AblationRow> rows(jobs.size());
  parallel_for_indices(
      static_cast<int>(jobs.size()), max_workers, [&](int i) {
        const Job& job = jobs[static_cast<size_t>(i)];
        const SplitDataset ds = make_dataset(job.seed);
        TrainConfig cfg = base_cfg;
        cfg.seed = job.seed;
        cfg.epochs_stage1 = job.stage1_epochs;
        auto [stage1, hist1] = train_stage1<double>(ds.train_view(), cfg);
        auto [stage2, hist2] =
            train_stage2<double>(ds.train_view(), stage1, cfg);
        const auto eval =
            evaluate_generator(stage2.generator, ds, eval_opts, job.seed);
        rows[static_cast<size_t>(i)] = {job.stage1_epochs, job.seed,
                                        eval.czsl.u};
      });
  return rows;
}

}  // namespace zslforge
