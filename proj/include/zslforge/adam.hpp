#pragma once

#include <cmath>
#include <string>
#include <type_traits>

#include "zslforge/errors.hpp"
#include "zslforge/rng.hpp"

namespace zslforge {

/// First/second-moment accumulators for one parameter matrix.
template <typename Scalar>
struct AdamStateT {
  Mat<Scalar> m;
  Mat<Scalar> v;
  long long step = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);

  static AdamStateT zeros(Eigen::Index rows, Eigen::Index cols) {
    AdamStateT s;
    s.m = Mat<Scalar>::Zero(rows, cols);
    s.v = Mat<Scalar>::Zero(rows, cols);
    return s;
  }
};

using AdamState = AdamStateT<double>;

/// One Adam update with bias correction, in place.
template <typename Scalar>
void adam_step(Mat<Scalar>& params,
               const std::type_identity_t<Mat<Scalar>>& grads,
               AdamStateT<Scalar>& state, std::type_identity_t<Scalar> lr) {
  if (params.rows() != grads.rows() || params.cols() != grads.cols() ||
      params.rows() != state.m.rows() || params.cols() != state.m.cols())
    throw ShapeMismatch("adam_step: parameter " + std::to_string(params.rows()) +
                        "x" + std::to_string(params.cols()) +
                        ", gradient " + std::to_string(grads.rows()) + "x" +
                        std::to_string(grads.cols()));
  state.step += 1;
  state.m = state.beta1 * state.m + (Scalar(1) - state.beta1) * grads;
  state.v = state.beta2 * state.v +
            (Scalar(1) - state.beta2) * grads.cwiseProduct(grads);
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, Scalar(state.step));
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, Scalar(state.step));
  const Mat<Scalar> mhat = state.m / c1;
  const Mat<Scalar> denom =
      (state.v / c2).cwiseSqrt().array() + state.eps;
  params.array() -= lr * mhat.array() / denom.array();
  if (!params.allFinite())
    throw NumericDivergence("adam_step: parameters left the finite range");
}

}  // namespace zslforge
