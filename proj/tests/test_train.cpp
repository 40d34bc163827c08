#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "zslforge/dataset.hpp"
#include "zslforge/pipeline.hpp"
#include "zslforge/train.hpp"

using namespace zslforge;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.n_seen_classes = 4;
  spec.n_unseen_classes = 2;
  spec.d = 12;
  spec.k = 4;
  spec.samples_per_class_train = 10;
  spec.samples_per_class_test = 4;
  spec.cluster_noise = 0.15;
  spec.overlap = 0.2;
  return spec;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.hidden_dim = 24;
  cfg.batch_size = 16;
  cfg.epochs_stage1 = 4;
  cfg.epochs_stage2 = 4;
  cfg.seed = 3;
  return cfg;
}

bool mlp_equal(const MlpT<double>& a, const MlpT<double>& b) {
  return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
}

}  // namespace

TEST_CASE("zero stage-1 epochs returns the initialized models untouched") {
  const auto ds = make_synthetic(small_spec(), 1);
  TrainConfig cfg = small_config();
  cfg.epochs_stage1 = 0;
  const auto [models, history] = train_stage1<double>(ds.train_view(), cfg);
  CHECK(history.epochs.empty());
  Rng rng(derive_seed(cfg.seed, "stage1"));
  const auto fresh = init_models<double>(ds.d(), ds.k(), cfg.hidden_dim, 1, rng);
  CHECK(mlp_equal(models.generator, fresh.generator));
  CHECK(mlp_equal(models.decoder, fresh.decoder));
}

TEST_CASE("training is deterministic per seed") {
  const auto ds = make_synthetic(small_spec(), 1);
  const TrainConfig cfg = small_config();
  const auto [m1, h1] = train_stage1<double>(ds.train_view(), cfg);
  const auto [m2, h2] = train_stage1<double>(ds.train_view(), cfg);
  CHECK(mlp_equal(m1.generator, m2.generator));
  CHECK(mlp_equal(m1.seen_critic, m2.seen_critic));
  CHECK(mlp_equal(m1.unseen_critic, m2.unseen_critic));
  CHECK(mlp_equal(m1.decoder, m2.decoder));
  REQUIRE(h1.epochs.size() == h2.epochs.size());
  for (size_t i = 0; i < h1.epochs.size(); ++i)
    CHECK(h1.epochs[i].recon == h2.epochs[i].recon);
}

TEST_CASE("history holds one finite record per epoch and renders as CSV") {
  const auto ds = make_synthetic(small_spec(), 1);
  const TrainConfig cfg = small_config();
  const auto [models, history] = train_stage1<double>(ds.train_view(), cfg);
  REQUIRE(history.epochs.size() == 4);
  for (const auto& e : history.epochs) {
    CHECK(std::isfinite(e.seen_obj));
    CHECK(std::isfinite(e.unseen_obj));
    CHECK(std::isfinite(e.recon));
    CHECK(std::isfinite(e.gp_seen));
    CHECK(std::isfinite(e.gp_unseen));
    CHECK(e.seconds >= 0.0);
  }
  const std::string csv = history.to_csv();
  CHECK(csv.rfind("epoch,L_S,L_U_or_L'_U,L_R,gp_s,gp_u,seconds\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("stage 2 keeps the decoder and reinitializes everything else") {
  const auto ds = make_synthetic(small_spec(), 1);
  const TrainConfig cfg = small_config();
  auto [stage1, h1] = train_stage1<double>(ds.train_view(), cfg);

  TrainConfig frozen = cfg;
  frozen.epochs_stage2 = 0;
  const auto [fresh2, h2] = train_stage2<double>(ds.train_view(), stage1, frozen);
  CHECK(h2.epochs.empty());
  CHECK(fresh2.stage == 2);
  // Decoder weights carried over bit-exactly; critics and generator differ.
  CHECK(mlp_equal(fresh2.decoder, stage1.decoder));
  CHECK_FALSE(mlp_equal(fresh2.generator, stage1.generator));
  CHECK_FALSE(mlp_equal(fresh2.seen_critic, stage1.seen_critic));
  CHECK(fresh2.unseen_critic.in_dim() == ds.d() + ds.k());
  CHECK(stage1.unseen_critic.in_dim() == ds.d());

  // Probe scores: the carried decoder answers exactly like stage 1's.
  const Matd probe = ds.unseen_x().topRows(4);
  CHECK(decode_attributes(fresh2.decoder, probe) ==
        decode_attributes(stage1.decoder, probe));

  const auto [trained2, h3] = train_stage2<double>(ds.train_view(), stage1, cfg);
  CHECK(h3.epochs.size() == 4);
  CHECK_FALSE(mlp_equal(trained2.decoder, stage1.decoder));  // fine-tuned
}

TEST_CASE("stage 2 refuses models that are not a stage-1 set") {
  const auto ds = make_synthetic(small_spec(), 1);
  const TrainConfig cfg = small_config();
  auto [stage1, h1] = train_stage1<double>(ds.train_view(), cfg);
  auto [stage2, h2] = train_stage2<double>(ds.train_view(), stage1, cfg);
  CHECK_THROWS_AS(train_stage2<double>(ds.train_view(), stage2, cfg),
                  StageMismatch);

  Rng rng(1);
  const auto wrong_dims = init_models<double>(5, 2, 8, 1, rng);
  CHECK_THROWS_AS(train_stage2<double>(ds.train_view(), wrong_dims, cfg),
                  StageMismatch);
}

TEST_CASE("a runaway learning rate raises a divergence error") {
  const auto ds = make_synthetic(small_spec(), 1);
  TrainConfig cfg = small_config();
  cfg.lr = 1e5;
  cfg.epochs_stage1 = 50;
  CHECK_THROWS_AS(train_stage1<double>(ds.train_view(), cfg),
                  NumericDivergence);
}

TEST_CASE("config invariants are enforced") {
  TrainConfig cfg;
  cfg.lambda_gp = -1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = TrainConfig{};
  cfg.critic_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = TrainConfig{};
  cfg.lr = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("float training runs and is deterministic") {
  const auto ds = make_synthetic(small_spec(), 1);
  TrainConfig cfg = small_config();
  cfg.epochs_stage1 = 2;
  const auto [m1, h1] = train_stage1<float>(ds.train_view(), cfg);
  const auto [m2, h2] = train_stage1<float>(ds.train_view(), cfg);
  CHECK(m1.generator.w1 == m2.generator.w1);
  CHECK(h1.epochs.size() == 2);
}

TEST_CASE("reconstruction loss falls below a quarter of its first-epoch "
          "value over the benchmark run" * doctest::timeout(300)) {
  const auto ds = make_synthetic(standard_benchmark_spec(), 2);
  TrainConfig cfg;
  cfg.seed = 2;
  cfg.epochs_stage1 = 300;
  const auto [models, history] = train_stage1<double>(ds.train_view(), cfg);
  REQUIRE(history.epochs.size() == 300);
  CHECK(history.epochs.back().recon < 0.25 * history.epochs.front().recon);
}
