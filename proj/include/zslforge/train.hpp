#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "zslforge/adam.hpp"
#include "zslforge/dataset.hpp"
#include "zslforge/io.hpp"
#include "zslforge/losses.hpp"

namespace zslforge {

struct TrainConfig {
  double lambda_gp = 5.0;
  double w = 0.1;
  double w_prime = 0.1;
  double lr = 1e-4;
  int batch_size = 64;
  int critic_iters = 5;
  int epochs_stage1 = 300;
  int epochs_stage2 = 300;
  int hidden_dim = 256;
  std::uint64_t seed = 1;
  bool pseudo_attr_clamp = true;
  double divergence_limit = 1e6;

  void validate() const {
    if (lambda_gp < 0.0) throw InvalidArgument("config: lambda_gp >= 0");
    if (w < 0.0 || w_prime < 0.0) throw InvalidArgument("config: w, w' >= 0");
    if (!(lr > 0.0)) throw InvalidArgument("config: lr > 0");
    if (batch_size < 1) throw InvalidArgument("config: batch_size >= 1");
    if (critic_iters < 1) throw InvalidArgument("config: critic_iters >= 1");
    if (epochs_stage1 < 0 || epochs_stage2 < 0)
      throw InvalidArgument("config: epochs >= 0");
    if (hidden_dim < 1) throw InvalidArgument("config: hidden_dim >= 1");
  }
};

struct EpochRecord {
  int epoch = 0;        // 1-based within the stage
  double seen_obj = 0;  // L_S
  double unseen_obj = 0;  // L_U (stage 1) or L'_U (stage 2)
  double recon = 0;       // L_R or L'_R
  double gp_seen = 0;
  double gp_unseen = 0;
  double seconds = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  std::string to_csv() const {
    std::string out = "epoch,L_S,L_U_or_L'_U,L_R,gp_s,gp_u,seconds\n";
    for (const auto& e : epochs) {
      out += std::to_string(e.epoch) + ',' + format_double(e.seen_obj) + ',' +
             format_double(e.unseen_obj) + ',' + format_double(e.recon) + ',' +
             format_double(e.gp_seen) + ',' + format_double(e.gp_unseen) +
             ',' + format_double(e.seconds) + '\n';
    }
    return out;
  }
  void write_csv(const std::filesystem::path& path) const {
    write_text_file(path, to_csv());
  }
};

template <typename Scalar>
using EpochCallback =
    std::function<void(int epoch, const ModelSetT<Scalar>&)>;

namespace detail {

template <typename Scalar>
Mat<Scalar> rows_of(const Mat<Scalar>& m, const std::vector<int>& idx) {
  Mat<Scalar> out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

template <typename Scalar>
struct MlpAdam {
  AdamStateT<Scalar> w1, b1, w2, b2;

  static MlpAdam for_net(const MlpT<Scalar>& net) {
    MlpAdam a;
    a.w1 = AdamStateT<Scalar>::zeros(net.w1.rows(), net.w1.cols());
    a.b1 = AdamStateT<Scalar>::zeros(net.b1.rows(), net.b1.cols());
    a.w2 = AdamStateT<Scalar>::zeros(net.w2.rows(), net.w2.cols());
    a.b2 = AdamStateT<Scalar>::zeros(net.b2.rows(), net.b2.cols());
    return a;
  }

  void update(MlpT<Scalar>& net, const std::vector<Mat<Scalar>>& grads,
              Scalar lr) {
    adam_step(net.w1, grads[0], w1, lr);
    adam_step(net.b1, grads[1], b1, lr);
    adam_step(net.w2, grads[2], w2, lr);
    adam_step(net.b2, grads[3], b2, lr);
  }
};

template <typename Scalar>
std::array<VarT<Scalar>, 4> leaves_of(const MlpVarsT<Scalar>& v) {
  return {v.w1, v.b1, v.w2, v.b2};
}

inline void check_finite_loss(double v, const char* name, int epoch,
                              double limit) {
  if (!std::isfinite(v) || std::abs(v) > limit)
    throw NumericDivergence(std::string(name) + " diverged at epoch " +
                            std::to_string(epoch) + " (value " +
                            std::to_string(v) + ")");
}

/// One optimization pass shared by both stages; `stage` picks the unseen
/// objective and the reconstruction weight.
template <typename Scalar>
TrainHistory run_stage(const TrainView& data, const TrainConfig& cfg,
                       ModelSetT<Scalar>& models, int stage, int epochs,
                       Rng& rng, const EpochCallback<Scalar>& on_epoch) {
  const Mat<Scalar> seen_x = data.seen_x.template cast<Scalar>();
  const Mat<Scalar> unseen_x = data.unseen_x.template cast<Scalar>();
  Mat<Scalar> seen_a(seen_x.rows(), data.k());
  for (Eigen::Index i = 0; i < seen_x.rows(); ++i)
    seen_a.row(i) = data.attrs.attribute_of(data.seen_y[static_cast<size_t>(i)])
                        .template cast<Scalar>();
  const Scalar lambda = static_cast<Scalar>(cfg.lambda_gp);
  const Scalar lr = static_cast<Scalar>(cfg.lr);
  const Scalar recon_w =
      static_cast<Scalar>(stage == 1 ? cfg.w : cfg.w_prime);
  const int n_seen = static_cast<int>(seen_x.rows());
  const int n_unseen = static_cast<int>(unseen_x.rows());
  const int unseen_batch = std::min(cfg.batch_size, n_unseen);

  auto adam_g = MlpAdam<Scalar>::for_net(models.generator);
  auto adam_ds = MlpAdam<Scalar>::for_net(models.seen_critic);
  auto adam_du = MlpAdam<Scalar>::for_net(models.unseen_critic);
  auto adam_dec = MlpAdam<Scalar>::for_net(models.decoder);

  auto gauss = [&rng](Eigen::Index n, Eigen::Index dim) -> Mat<Scalar> {
    return sample_gaussian(n, dim, rng).template cast<Scalar>();
  };
  auto unif = [&rng](Eigen::Index n) -> Eigen::Matrix<Scalar, Eigen::Dynamic, 1> {
    return sample_uniform01(n, rng).template cast<Scalar>();
  };
  auto unseen_attr_sample = [&](Eigen::Index n) -> Mat<Scalar> {
    return sample_unseen_attribute_rows(data.attrs, n, rng)
        .template cast<Scalar>();
  };

  TrainHistory history;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto batches = epoch_batches(n_seen, cfg.batch_size, rng);
    double sum_ls = 0, sum_lu = 0, sum_lr = 0, sum_gps = 0, sum_gpu = 0;

    for (const auto& batch : batches) {
      const Mat<Scalar> x_s = rows_of(seen_x, batch);
      const Mat<Scalar> a_s = rows_of(seen_a, batch);
      const Eigen::Index nb = x_s.rows();
      const Mat<Scalar> x_u =
          rows_of(unseen_x, sample_indices(n_unseen, unseen_batch, rng));
      const Eigen::Index nu = x_u.rows();

      // Stage-2 conditioning: pseudo-attributes from the current decoder,
      // detached, fixed for the whole batch.
      Mat<Scalar> pseudo;
      if (stage == 2) {
        pseudo = decode_attributes(models.decoder, x_u);
        if (cfg.pseudo_attr_clamp) pseudo = clamp01(pseudo);
      }

      for (int t = 0; t < cfg.critic_iters; ++t) {
        {
          const Mat<Scalar> z = gauss(nb, models.noise_dim);
          const auto alpha = unif(nb);
          GraphT<Scalar> tape;
          auto dv = bind(tape, models.seen_critic);
          auto gv = bind(tape, models.generator);
          auto terms =
              build_seen_adv(tape, dv, gv, x_s, a_s, lambda, z, alpha);
          auto leaves = leaves_of(dv);
          adam_ds.update(models.seen_critic,
                         tape.gradients(tape.neg(terms.loss), leaves), lr);
        }
        {
          GraphT<Scalar> tape;
          auto dv = bind(tape, models.unseen_critic);
          auto gv = bind(tape, models.generator);
          AdvTermsT<Scalar> terms;
          if (stage == 1) {
            const Mat<Scalar> a_u = unseen_attr_sample(nu);
            const Mat<Scalar> z = gauss(nu, models.noise_dim);
            const auto alpha = unif(nu);
            terms = build_unseen_adv_stage1(tape, dv, gv, x_u, a_u, lambda, z,
                                            alpha);
          } else {
            const Mat<Scalar> z = gauss(nu, models.noise_dim);
            const auto alpha = unif(nu);
            terms = build_unseen_adv_stage2(tape, dv, gv, x_u, pseudo, lambda,
                                            z, alpha);
          }
          auto leaves = leaves_of(dv);
          adam_du.update(models.unseen_critic,
                         tape.gradients(tape.neg(terms.loss), leaves), lr);
        }
      }

      // Generator and decoder step on one shared graph: the synthesized
      // rows feed both the adversarial terms and the reconstruction.
      {
        GraphT<Scalar> tape;
        auto dsv = bind(tape, models.seen_critic);
        auto duv = bind(tape, models.unseen_critic);
        auto gv = bind(tape, models.generator);
        auto decv = bind(tape, models.decoder);

        const Mat<Scalar> z_s = gauss(nb, models.noise_dim);
        const auto alpha_s = unif(nb);
        auto seen_terms =
            build_seen_adv(tape, dsv, gv, x_s, a_s, lambda, z_s, alpha_s);

        AdvTermsT<Scalar> unseen_terms;
        Mat<Scalar> unseen_cond;
        if (stage == 1) {
          unseen_cond = unseen_attr_sample(nu);
          const Mat<Scalar> z_u = gauss(nu, models.noise_dim);
          const auto alpha_u = unif(nu);
          unseen_terms = build_unseen_adv_stage1(tape, duv, gv, x_u,
                                                 unseen_cond, lambda, z_u,
                                                 alpha_u);
        } else {
          unseen_cond = pseudo;
          const Mat<Scalar> z_u = gauss(nu, models.noise_dim);
          const auto alpha_u = unif(nu);
          unseen_terms = build_unseen_adv_stage2(tape, duv, gv, x_u, pseudo,
                                                 lambda, z_u, alpha_u);
        }
        auto recon = build_recon(tape, decv, x_s, a_s, seen_terms.fake,
                                 unseen_terms.fake, unseen_cond);

        auto gen_obj = tape.add(
            tape.add(tape.neg(seen_terms.loss), tape.neg(unseen_terms.loss)),
            tape.scalar_mul(recon, recon_w));
        auto dec_obj = tape.scalar_mul(recon, recon_w);

        auto g_leaves = leaves_of(gv);
        auto dec_leaves = leaves_of(decv);
        const auto g_grads = tape.gradients(gen_obj, g_leaves);
        const auto dec_grads = tape.gradients(dec_obj, dec_leaves);
        adam_g.update(models.generator, g_grads, lr);
        adam_dec.update(models.decoder, dec_grads, lr);

        const double ls = static_cast<double>(seen_terms.loss.value()(0, 0));
        const double lu = static_cast<double>(unseen_terms.loss.value()(0, 0));
        const double lrec = static_cast<double>(recon.value()(0, 0));
        check_finite_loss(ls, "L_S", epoch, cfg.divergence_limit);
        check_finite_loss(lu, stage == 1 ? "L_U" : "L'_U", epoch,
                          cfg.divergence_limit);
        check_finite_loss(lrec, stage == 1 ? "L_R" : "L'_R", epoch,
                          cfg.divergence_limit);
        sum_ls += ls;
        sum_lu += lu;
        sum_lr += lrec;
        sum_gps += static_cast<double>(seen_terms.gp.value()(0, 0));
        sum_gpu += static_cast<double>(unseen_terms.gp.value()(0, 0));
      }
    }

    const double nb = static_cast<double>(batches.size());
    EpochRecord rec;
    rec.epoch = epoch;
    rec.seen_obj = sum_ls / nb;
    rec.unseen_obj = sum_lu / nb;
    rec.recon = sum_lr / nb;
    rec.gp_seen = sum_gps / nb;
    rec.gp_unseen = sum_gpu / nb;
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(epoch, models);
  }
  return history;
}

}  // namespace detail

/// Stage 1: joint training of the generator, both critics (the unseen one
/// unconditional), and the attribute decoder.
template <typename Scalar = double>
std::pair<ModelSetT<Scalar>, TrainHistory> train_stage1(
    const TrainView& data, const TrainConfig& cfg,
    const EpochCallback<Scalar>& on_epoch = {}) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, "stage1"));
  auto models =
      init_models<Scalar>(data.d(), data.k(), cfg.hidden_dim, 1, rng);
  TrainHistory history = detail::run_stage(data, cfg, models, 1,
                                           cfg.epochs_stage1, rng, on_epoch);
  return {std::move(models), std::move(history)};
}

/// Stage 2: the generator and both critics are reinitialized (the unseen
/// critic now conditional); only the decoder keeps its stage-1 weights and
/// is fine-tuned. Unseen conditioning comes from the decoder's
/// pseudo-attributes, recomputed per batch and detached.
template <typename Scalar = double>
std::pair<ModelSetT<Scalar>, TrainHistory> train_stage2(
    const TrainView& data, const ModelSetT<Scalar>& stage1_models,
    const TrainConfig& cfg, const EpochCallback<Scalar>& on_epoch = {}) {
  cfg.validate();
  if (stage1_models.stage != 1)
    throw StageMismatch("train_stage2: expected stage-1 models");
  if (stage1_models.decoder.in_dim() != data.d() ||
      stage1_models.decoder.out_dim() != data.k())
    throw StageMismatch(
        "train_stage2: missing stage-1 decoder of matching shape");
  Rng rng(derive_seed(cfg.seed, "stage2"));
  auto models =
      init_models<Scalar>(data.d(), data.k(), cfg.hidden_dim, 2, rng);
  models.decoder = stage1_models.decoder;
  TrainHistory history = detail::run_stage(data, cfg, models, 2,
                                           cfg.epochs_stage2, rng, on_epoch);
  return {std::move(models), std::move(history)};
}

}  // namespace zslforge
