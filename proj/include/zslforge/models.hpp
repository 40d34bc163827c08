#pragma once

#include <optional>
#include <string>
#include <type_traits>

#include "zslforge/adam.hpp"
#include "zslforge/graph.hpp"
#include "zslforge/rng.hpp"

namespace zslforge {

enum class Activation { kIdentity, kRelu };

inline constexpr double kHiddenSlope = 0.2;  // leaky-rectifier negative slope

/// Two-layer fully-connected network: affine, leaky rectifier, affine,
/// optional output rectifier.
template <typename Scalar>
struct MlpT {
  Mat<Scalar> w1;  // in x hidden
  Mat<Scalar> b1;  // 1 x hidden
  Mat<Scalar> w2;  // hidden x out
  Mat<Scalar> b2;  // 1 x out
  Activation out_act = Activation::kIdentity;

  Eigen::Index in_dim() const { return w1.rows(); }
  Eigen::Index hidden_dim() const { return w1.cols(); }
  Eigen::Index out_dim() const { return w2.cols(); }

  /// Pure forward pass; the arithmetic mirrors the taped ops exactly.
  Mat<Scalar> forward(const Mat<Scalar>& x) const {
    if (x.cols() != in_dim())
      throw ShapeMismatch("mlp forward: input width " +
                          std::to_string(x.cols()) + ", expected " +
                          std::to_string(in_dim()));
    const Scalar slope = Scalar(kHiddenSlope);
    Mat<Scalar> h = x * w1 + b1.replicate(x.rows(), 1);
    h = h.unaryExpr(
        [slope](Scalar v) { return v > Scalar(0) ? v : slope * v; });
    Mat<Scalar> o = h * w2 + b2.replicate(x.rows(), 1);
    if (out_act == Activation::kRelu)
      o = o.unaryExpr([](Scalar v) { return v > Scalar(0) ? v : Scalar(0); });
    return o;
  }

  template <typename S2>
  MlpT<S2> cast() const {
    MlpT<S2> m;
    m.w1 = w1.template cast<S2>();
    m.b1 = b1.template cast<S2>();
    m.w2 = w2.template cast<S2>();
    m.b2 = b2.template cast<S2>();
    m.out_act = out_act;
    return m;
  }
};

/// Parameter leaves of one network bound onto a tape.
template <typename Scalar>
struct MlpVarsT {
  VarT<Scalar> w1, b1, w2, b2;
  Activation out_act = Activation::kIdentity;
};

template <typename Scalar>
MlpVarsT<Scalar> bind(GraphT<Scalar>& tape, const MlpT<Scalar>& net) {
  return {tape.input(net.w1), tape.input(net.b1), tape.input(net.w2),
          tape.input(net.b2), net.out_act};
}

template <typename Scalar>
VarT<Scalar> forward(GraphT<Scalar>& tape, const MlpVarsT<Scalar>& net,
                     VarT<Scalar> x) {
  auto h = tape.leaky_relu(tape.add_row_vector(tape.matmul(x, net.w1), net.b1),
                           Scalar(kHiddenSlope));
  auto o = tape.add_row_vector(tape.matmul(h, net.w2), net.b2);
  if (net.out_act == Activation::kRelu) o = tape.relu(o);
  return o;
}

/// Scaled-uniform fan-in initialization, biases zero.
template <typename Scalar>
MlpT<Scalar> init_mlp(Eigen::Index in, Eigen::Index hidden, Eigen::Index out,
                      Activation out_act, Rng& rng) {
  if (in < 1 || hidden < 1 || out < 1)
    throw InvalidArgument("init_mlp: dimensions must be >= 1");
  auto fill = [&rng](Eigen::Index r, Eigen::Index c) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(r));
    Mat<Scalar> m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j)
        m(i, j) = static_cast<Scalar>((2.0 * rng.uniform01() - 1.0) * bound);
    return m;
  };
  MlpT<Scalar> net;
  net.w1 = fill(in, hidden);
  net.b1 = Mat<Scalar>::Zero(1, hidden);
  net.w2 = fill(hidden, out);
  net.b2 = Mat<Scalar>::Zero(1, out);
  net.out_act = out_act;
  return net;
}

/// Generator, the two critics, and the attribute decoder.
/// The unseen critic is unconditional in stage 1 (input width d) and
/// conditional in stage 2 (input width d + k).
template <typename Scalar>
struct ModelSetT {
  MlpT<Scalar> generator;       // z || a -> d, rectified output
  MlpT<Scalar> seen_critic;     // x || a -> 1
  MlpT<Scalar> unseen_critic;   // x -> 1 (stage 1); x || a -> 1 (stage 2)
  MlpT<Scalar> decoder;         // x -> k
  int stage = 1;
  Eigen::Index d = 0;
  Eigen::Index k = 0;
  Eigen::Index noise_dim = 0;  // equals k

  bool unseen_conditional() const { return stage == 2; }

  template <typename S2>
  ModelSetT<S2> cast() const {
    ModelSetT<S2> m;
    m.generator = generator.template cast<S2>();
    m.seen_critic = seen_critic.template cast<S2>();
    m.unseen_critic = unseen_critic.template cast<S2>();
    m.decoder = decoder.template cast<S2>();
    m.stage = stage;
    m.d = d;
    m.k = k;
    m.noise_dim = noise_dim;
    return m;
  }
};

using ModelSet = ModelSetT<double>;

/// Fresh networks for the given stage. Draw order: generator, seen critic,
/// unseen critic, decoder.
template <typename Scalar>
ModelSetT<Scalar> init_models(Eigen::Index d, Eigen::Index k,
                              Eigen::Index hidden, int stage, Rng& rng) {
  if (d < 1 || k < 1 || hidden < 1)
    throw InvalidArgument("init_models: dimensions must be >= 1");
  if (stage != 1 && stage != 2)
    throw InvalidArgument("init_models: stage must be 1 or 2");
  ModelSetT<Scalar> m;
  m.d = d;
  m.k = k;
  m.noise_dim = k;
  m.stage = stage;
  m.generator = init_mlp<Scalar>(k + k, hidden, d, Activation::kRelu, rng);
  m.seen_critic =
      init_mlp<Scalar>(d + k, hidden, 1, Activation::kIdentity, rng);
  m.unseen_critic = init_mlp<Scalar>(stage == 2 ? d + k : d, hidden, 1,
                                     Activation::kIdentity, rng);
  m.decoder = init_mlp<Scalar>(d, hidden, k, Activation::kIdentity, rng);
  return m;
}

/// Synthesized features G(z, a); rows pair up z and a.
template <typename Scalar>
Mat<Scalar> generate(const MlpT<Scalar>& generator,
                     const std::type_identity_t<Mat<Scalar>>& z,
                     const std::type_identity_t<Mat<Scalar>>& a) {
  if (z.rows() != a.rows())
    throw ShapeMismatch("generate: z rows " + std::to_string(z.rows()) +
                        " vs a rows " + std::to_string(a.rows()));
  if (z.cols() + a.cols() != generator.in_dim())
    throw ShapeMismatch("generate: z||a width " +
                        std::to_string(z.cols() + a.cols()) + ", expected " +
                        std::to_string(generator.in_dim()));
  Mat<Scalar> in(z.rows(), z.cols() + a.cols());
  in.leftCols(z.cols()) = z;
  in.rightCols(a.cols()) = a;
  return generator.forward(in);
}

template <typename Scalar>
Mat<Scalar> decode_attributes(const MlpT<Scalar>& decoder,
                              const std::type_identity_t<Mat<Scalar>>& x) {
  return decoder.forward(x);
}

/// Critic score rows; pass attributes iff the critic is conditional on them.
template <typename Scalar>
Mat<Scalar> critic_score(
    const MlpT<Scalar>& critic, const std::type_identity_t<Mat<Scalar>>& x,
    const std::type_identity_t<std::optional<Mat<Scalar>>>& a = std::nullopt) {
  if (a.has_value()) {
    if (x.rows() != a->rows())
      throw ShapeMismatch("critic_score: x rows vs a rows");
    if (x.cols() + a->cols() != critic.in_dim())
      throw ConditioningMismatch(
          "critic_score: critic takes width " +
          std::to_string(critic.in_dim()) + ", got conditioned input width " +
          std::to_string(x.cols() + a->cols()));
    Mat<Scalar> in(x.rows(), x.cols() + a->cols());
    in.leftCols(x.cols()) = x;
    in.rightCols(a->cols()) = *a;
    return critic.forward(in);
  }
  if (x.cols() != critic.in_dim())
    throw ConditioningMismatch(
        "critic_score: critic takes width " + std::to_string(critic.in_dim()) +
        ", got unconditioned input width " + std::to_string(x.cols()));
  return critic.forward(x);
}

}  // namespace zslforge
