#pragma once

#include <optional>
#include <type_traits>

#include "zslforge/dataset.hpp"
#include "zslforge/models.hpp"

namespace zslforge {

// Keeps the norm differentiable when an input gradient vanishes; far below
// double epsilon relative to the unit target, so exact-norm cases are
// unaffected.
inline constexpr double kGradNormEps = 1e-24;

/// alpha-blend of real and fake rows, one alpha per row.
template <typename Scalar>
Mat<Scalar> interpolate_rows(const Mat<Scalar>& real, const Mat<Scalar>& fake,
                             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& alpha) {
  if (real.rows() != fake.rows() || real.cols() != fake.cols())
    throw ShapeMismatch("interpolate: real and fake shapes differ");
  if (alpha.size() != real.rows())
    throw ShapeMismatch("interpolate: one alpha per row required");
  Mat<Scalar> out(real.rows(), real.cols());
  for (Eigen::Index i = 0; i < real.rows(); ++i)
    out.row(i) = alpha(i) * real.row(i) +
                 (Scalar(1) - alpha(i)) * fake.row(i);
  return out;
}

/// Attribute rows sampled uniformly from the unseen attribute table.
inline Matd sample_unseen_attribute_rows(const AttributeTable& attrs,
                                         Eigen::Index n, Rng& rng) {
  const Matd pool = attrs.unseen_attribute_rows();
  if (pool.rows() == 0)
    throw InvalidArgument("no unseen classes to sample attributes from");
  Matd out(n, pool.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    out.row(i) =
        pool.row(static_cast<Eigen::Index>(rng.below(
            static_cast<std::uint64_t>(pool.rows()))));
  return out;
}

template <typename Scalar>
Mat<Scalar> clamp01(const Mat<Scalar>& m) {
  return m.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
}

/// Mean over rows of (||d D / d x_hat||_2 - 1)^2 for fixed interpolates.
/// x_hat and cond enter as constants; the result is differentiable in the
/// critic parameters, including through the recorded input gradient. The
/// gradient is taken with respect to the interpolated feature only.
template <typename Scalar>
VarT<Scalar> build_gradient_penalty(
    GraphT<Scalar>& tape, const MlpVarsT<Scalar>& critic,
    const std::type_identity_t<Mat<Scalar>>& x_hat,
    const std::type_identity_t<std::optional<Mat<Scalar>>>& cond) {
  auto xh = tape.input(x_hat);
  auto in = cond.has_value() ? tape.concat_cols(xh, tape.constant(*cond)) : xh;
  auto score = forward(tape, critic, in);
  auto gx = tape.input_gradient(score, xh);
  auto norm = tape.sqrt(
      tape.scalar_add(tape.row_sum(tape.square(gx)), Scalar(kGradNormEps)));
  auto pen = tape.square(tape.scalar_add(norm, Scalar(-1)));
  return tape.mean_all(pen);
}

template <typename Scalar>
struct AdvTermsT {
  VarT<Scalar> loss;  // E[D(real)] - E[D(fake)] - lambda * gp
  VarT<Scalar> gp;    // unscaled penalty
  VarT<Scalar> fake;  // generator output rows, connected to G's leaves
};

/// Seen adversarial objective: conditional critic on (x, a) pairs.
/// The interpolates for the penalty are built from detached values, so the
/// penalty is a function of the critic parameters only.
template <typename Scalar>
AdvTermsT<Scalar> build_seen_adv(GraphT<Scalar>& tape,
                                 const MlpVarsT<Scalar>& seen_critic,
                                 const MlpVarsT<Scalar>& generator,
                                 const Mat<Scalar>& x, const Mat<Scalar>& a,
                                 Scalar lambda, const Mat<Scalar>& z,
                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& alpha) {
  if (x.rows() != a.rows())
    throw ShapeMismatch("seen adversarial: feature/attribute rows differ");
  if (z.rows() != x.rows())
    throw ShapeMismatch("seen adversarial: one noise row per real row");
  auto ac = tape.constant(a);
  auto fake = forward(tape, generator,
                      tape.concat_cols(tape.constant(z), ac));
  auto real_score =
      forward(tape, seen_critic, tape.concat_cols(tape.constant(x), ac));
  auto fake_score = forward(tape, seen_critic, tape.concat_cols(fake, ac));
  const Mat<Scalar> x_hat = interpolate_rows(x, fake.value(), alpha);
  auto gp = build_gradient_penalty(tape, seen_critic, x_hat,
                                   std::optional<Mat<Scalar>>(a));
  auto loss = tape.sub(tape.sub(tape.mean_all(real_score),
                                tape.mean_all(fake_score)),
                       tape.scalar_mul(gp, lambda));
  return {loss, gp, fake};
}

/// Stage-1 unseen objective: unconditional critic; fakes are conditioned on
/// attributes sampled from the unseen table, but the critic never sees them.
template <typename Scalar>
AdvTermsT<Scalar> build_unseen_adv_stage1(
    GraphT<Scalar>& tape, const MlpVarsT<Scalar>& unseen_critic,
    const MlpVarsT<Scalar>& generator, const Mat<Scalar>& x_u,
    const Mat<Scalar>& a_u, Scalar lambda, const Mat<Scalar>& z,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& alpha) {
  if (a_u.rows() != x_u.rows() || z.rows() != x_u.rows())
    throw ShapeMismatch("unseen adversarial: row counts differ");
  auto fake = forward(tape, generator,
                      tape.concat_cols(tape.constant(z), tape.constant(a_u)));
  auto real_score = forward(tape, unseen_critic, tape.constant(x_u));
  auto fake_score = forward(tape, unseen_critic, fake);
  const Mat<Scalar> x_hat = interpolate_rows(x_u, fake.value(), alpha);
  auto gp = build_gradient_penalty(tape, unseen_critic, x_hat,
                                   std::optional<Mat<Scalar>>());
  auto loss = tape.sub(tape.sub(tape.mean_all(real_score),
                                tape.mean_all(fake_score)),
                       tape.scalar_mul(gp, lambda));
  return {loss, gp, fake};
}

/// Stage-2 unseen objective: conditional critic on (x, pseudo-attribute)
/// pairs. `pseudo` are precomputed decoder outputs and enter as constants;
/// no gradient flows into the decoder here.
template <typename Scalar>
AdvTermsT<Scalar> build_unseen_adv_stage2(
    GraphT<Scalar>& tape, const MlpVarsT<Scalar>& unseen_critic,
    const MlpVarsT<Scalar>& generator, const Mat<Scalar>& x_u,
    const Mat<Scalar>& pseudo, Scalar lambda, const Mat<Scalar>& z,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& alpha) {
  if (pseudo.rows() != x_u.rows() || z.rows() != x_u.rows())
    throw ShapeMismatch("unseen adversarial: row counts differ");
  auto pc = tape.constant(pseudo);
  auto fake = forward(tape, generator,
                      tape.concat_cols(tape.constant(z), pc));
  auto real_score = forward(tape, unseen_critic,
                            tape.concat_cols(tape.constant(x_u), pc));
  auto fake_score = forward(tape, unseen_critic, tape.concat_cols(fake, pc));
  const Mat<Scalar> x_hat = interpolate_rows(x_u, fake.value(), alpha);
  auto gp = build_gradient_penalty(tape, unseen_critic, x_hat,
                                   std::optional<Mat<Scalar>>(pseudo));
  auto loss = tape.sub(tape.sub(tape.mean_all(real_score),
                                tape.mean_all(fake_score)),
                       tape.scalar_mul(gp, lambda));
  return {loss, gp, fake};
}

/// l1 taken as the sum over attribute dimensions, averaged over rows.
template <typename Scalar>
VarT<Scalar> build_l1_rows(GraphT<Scalar>& tape, VarT<Scalar> pred,
                           VarT<Scalar> target) {
  auto per_row = tape.row_sum(tape.abs(tape.sub(pred, target)));
  return tape.mean_all(per_row);
}

/// Attribute cycle-consistency: decoder on real seen, fake seen, and fake
/// unseen rows. `fake_seen`/`fake_unseen` are recorded generator outputs so
/// the loss back-propagates into both the decoder and the generator.
template <typename Scalar>
VarT<Scalar> build_recon(GraphT<Scalar>& tape, const MlpVarsT<Scalar>& decoder,
                         const Mat<Scalar>& x_s, const Mat<Scalar>& a_s,
                         VarT<Scalar> fake_seen, VarT<Scalar> fake_unseen,
                         const Mat<Scalar>& unseen_cond) {
  auto as = tape.constant(a_s);
  auto t1 = build_l1_rows(tape, forward(tape, decoder, tape.constant(x_s)), as);
  auto t2 = build_l1_rows(tape, forward(tape, decoder, fake_seen), as);
  auto t3 = build_l1_rows(tape, forward(tape, decoder, fake_unseen),
                          tape.constant(unseen_cond));
  return tape.add(tape.add(t1, t2), t3);
}

// ---- rng-driven scalar wrappers -------------------------------------------
// Draw orders are part of the contract so an oracle can replay them:
//   gradient_penalty:            alpha(n)
//   seen_adv_objective:          z(n x k), alpha(n)
//   unseen_adv_objective_stage1: z(n x k), alpha(n)
//   unseen_adv_objective_stage2: z(n x k), alpha(n)   (pseudo needs no draw)
//   reconstruction_loss:         z_seen(n_s x k), z_unseen(n_u x k)

template <typename Scalar>
Scalar gradient_penalty(
    const MlpT<Scalar>& critic, const std::type_identity_t<Mat<Scalar>>& real,
    const std::type_identity_t<Mat<Scalar>>& fake,
    const std::type_identity_t<std::optional<Mat<Scalar>>>& cond, Rng& rng) {
  if (real.rows() != fake.rows() || real.cols() != fake.cols())
    throw ShapeMismatch("gradient_penalty: real/fake shapes differ");
  const Eigen::Index width = real.cols() + (cond ? cond->cols() : 0);
  if (width != critic.in_dim())
    throw ConditioningMismatch(
        "gradient_penalty: critic takes width " +
        std::to_string(critic.in_dim()) + ", got " + std::to_string(width));
  if (cond && cond->rows() != real.rows())
    throw ShapeMismatch("gradient_penalty: one conditioning row per sample");
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> alpha =
      sample_uniform01(real.rows(), rng).template cast<Scalar>();
  GraphT<Scalar> tape;
  auto vars = bind(tape, critic);
  return build_gradient_penalty(tape, vars,
                                interpolate_rows(real, fake, alpha), cond)
      .value()(0, 0);
}

template <typename Scalar>
Scalar seen_adv_objective(const MlpT<Scalar>& seen_critic,
                          const MlpT<Scalar>& generator,
                          const std::type_identity_t<Mat<Scalar>>& x,
                          const std::type_identity_t<Mat<Scalar>>& a,
                          std::type_identity_t<Scalar> lambda, Rng& rng) {
  const Mat<Scalar> z =
      sample_gaussian(x.rows(), generator.in_dim() - a.cols(), rng)
          .template cast<Scalar>();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> alpha =
      sample_uniform01(x.rows(), rng).template cast<Scalar>();
  GraphT<Scalar> tape;
  auto dv = bind(tape, seen_critic);
  auto gv = bind(tape, generator);
  return build_seen_adv(tape, dv, gv, x, a, lambda, z, alpha).loss.value()(0, 0);
}

template <typename Scalar>
Scalar unseen_adv_objective_stage1(
    const MlpT<Scalar>& unseen_critic, const MlpT<Scalar>& generator,
    const std::type_identity_t<Mat<Scalar>>& x_u,
    const std::type_identity_t<Mat<Scalar>>& a_u,
    std::type_identity_t<Scalar> lambda, Rng& rng) {
  const Mat<Scalar> z =
      sample_gaussian(x_u.rows(), generator.in_dim() - a_u.cols(), rng)
          .template cast<Scalar>();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> alpha =
      sample_uniform01(x_u.rows(), rng).template cast<Scalar>();
  if (unseen_critic.in_dim() != x_u.cols())
    throw ConditioningMismatch(
        "stage-1 unseen critic must be unconditional (width d)");
  GraphT<Scalar> tape;
  auto dv = bind(tape, unseen_critic);
  auto gv = bind(tape, generator);
  return build_unseen_adv_stage1(tape, dv, gv, x_u, a_u, lambda, z, alpha)
      .loss.value()(0, 0);
}

template <typename Scalar>
Scalar unseen_adv_objective_stage2(
    const MlpT<Scalar>& unseen_critic, const MlpT<Scalar>& generator,
    const MlpT<Scalar>& decoder,
    const std::type_identity_t<Mat<Scalar>>& x_u,
    std::type_identity_t<Scalar> lambda, Rng& rng, bool clamp_pseudo = true) {
  if (unseen_critic.in_dim() != x_u.cols() + decoder.out_dim())
    throw StageMismatch(
        "stage-2 unseen critic must be conditional (width d + k)");
  Mat<Scalar> pseudo = decode_attributes(decoder, x_u);
  if (clamp_pseudo) pseudo = clamp01(pseudo);
  const Mat<Scalar> z =
      sample_gaussian(x_u.rows(), generator.in_dim() - pseudo.cols(), rng)
          .template cast<Scalar>();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> alpha =
      sample_uniform01(x_u.rows(), rng).template cast<Scalar>();
  GraphT<Scalar> tape;
  auto dv = bind(tape, unseen_critic);
  auto gv = bind(tape, generator);
  return build_unseen_adv_stage2(tape, dv, gv, x_u, pseudo, lambda, z, alpha)
      .loss.value()(0, 0);
}

template <typename Scalar>
Scalar reconstruction_loss(const MlpT<Scalar>& decoder,
                           const MlpT<Scalar>& generator,
                           const std::type_identity_t<Mat<Scalar>>& x_s,
                           const std::type_identity_t<Mat<Scalar>>& a_s,
                           const std::type_identity_t<Mat<Scalar>>& unseen_cond,
                           Rng& rng, int stage) {
  if (stage != 1 && stage != 2)
    throw InvalidArgument("reconstruction_loss: stage must be 1 or 2");
  const Mat<Scalar> z_s =
      sample_gaussian(x_s.rows(), generator.in_dim() - a_s.cols(), rng)
          .template cast<Scalar>();
  const Mat<Scalar> z_u =
      sample_gaussian(unseen_cond.rows(), generator.in_dim() - a_s.cols(), rng)
          .template cast<Scalar>();
  GraphT<Scalar> tape;
  auto dec = bind(tape, decoder);
  auto gen = bind(tape, generator);
  auto fake_s = forward(tape, gen,
                        tape.concat_cols(tape.constant(z_s), tape.constant(a_s)));
  auto fake_u =
      forward(tape, gen,
              tape.concat_cols(tape.constant(z_u), tape.constant(unseen_cond)));
  return build_recon(tape, dec, x_s, a_s, fake_s, fake_u, unseen_cond)
      .value()(0, 0);
}

}  // namespace zslforge
