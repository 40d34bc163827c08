#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>

#include "testutil.hpp"
#include "zslforge/adam.hpp"
#include "zslforge/graph.hpp"
#include "zslforge/rng.hpp"

using namespace zslforge;
namespace tu = zslforge::testutil;

TEST_CASE("gaussian sampling is deterministic per seed") {
  Rng a(7), b(7);
  const Matd m1 = sample_gaussian(3, 4, a);
  const Matd m2 = sample_gaussian(3, 4, b);
  CHECK(m1 == m2);
  Rng c(8);
  CHECK(sample_gaussian(3, 4, c) != m1);
}

TEST_CASE("gaussian sampling matches the standard normal moments") {
  Rng rng(123);
  const Matd m = sample_gaussian(10000, 1, rng);
  const double mean = m.mean();
  const double var = (m.array() - mean).square().sum() / (m.rows() - 1);
  CHECK(mean > -0.1);
  CHECK(mean < 0.1);
  CHECK(var > 0.9);
  CHECK(var < 1.1);
}

TEST_CASE("gaussian sampling rejects empty shapes") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_gaussian(0, 4, rng), InvalidArgument);
  CHECK_THROWS_AS(sample_gaussian(4, 0, rng), InvalidArgument);
}

TEST_CASE("uniform01 determinism, range, and mean") {
  Rng a(1), b(1);
  CHECK(sample_uniform01(5, a) == sample_uniform01(5, b));
  Rng rng(99);
  const Vecd u = sample_uniform01(10000, rng);
  CHECK(u.minCoeff() >= 0.0);
  CHECK(u.maxCoeff() < 1.0);
  CHECK(u.mean() > 0.45);
  CHECK(u.mean() < 0.55);
  Rng r0(2);
  CHECK_THROWS_AS(sample_uniform01(0, r0), InvalidArgument);
}

TEST_CASE("grad of sum of squares is 2v") {
  Graph tape;
  Rng rng(3);
  const Matd v = sample_gaussian(4, 3, rng);
  auto leaf = tape.input(v);
  auto loss = tape.sum_all(tape.square(leaf));
  std::array<Var, 1> leaves{leaf};
  const auto grads = tape.gradients(loss, leaves);
  CHECK((grads[0] - 2.0 * v).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("leaves not influencing the scalar get zero gradients") {
  Graph tape;
  auto used = tape.input(Matd::Ones(2, 2));
  auto unused = tape.input(Matd::Ones(3, 5));
  auto loss = tape.sum_all(tape.square(used));
  std::array<Var, 2> leaves{used, unused};
  const auto grads = tape.gradients(loss, leaves);
  CHECK(grads[1].rows() == 3);
  CHECK(grads[1].cols() == 5);
  CHECK(grads[1].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradients for leaves from another tape are refused") {
  Graph tape, other;
  auto leaf = tape.input(Matd::Ones(2, 2));
  auto foreign = other.input(Matd::Ones(2, 2));
  auto loss = tape.sum_all(leaf);
  std::array<Var, 1> leaves{foreign};
  CHECK_THROWS_AS(tape.gradients(loss, leaves), UnrecordedLeaf);
  std::array<Var, 1> empty{Var{}};
  CHECK_THROWS_AS(tape.gradients(loss, empty), UnrecordedLeaf);
}

TEST_CASE("input gradient of a constant critic is zero; penalty is one") {
  MlpT<double> critic;
  critic.w1 = Matd::Zero(4, 6);
  critic.b1 = Matd::Zero(1, 6);
  critic.w2 = Matd::Zero(6, 1);
  critic.b2 = Matd::Constant(1, 1, 2.5);
  critic.out_act = Activation::kIdentity;

  Graph tape;
  auto vars = bind(tape, critic);
  Rng rng(5);
  const Matd x = sample_gaussian(3, 4, rng);
  auto gp = build_gradient_penalty(tape, vars, x, std::nullopt);
  CHECK(gp.value()(0, 0) == doctest::Approx(1.0).epsilon(1e-9));

  auto xv = tape.input(x);
  auto score = forward(tape, vars, xv);
  auto gx = tape.input_gradient(score, xv);
  CHECK(gx.value().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear unit-norm critic has gradient norm exactly one") {
  // Large positive hidden bias keeps the leaky rectifier in its identity
  // branch, so the network is w^T x + const with w = e_1.
  const int d = 5;
  MlpT<double> critic;
  critic.w1 = Matd::Identity(d, d);
  critic.b1 = Matd::Constant(1, d, 100.0);
  critic.w2 = Matd::Zero(d, 1);
  critic.w2(0, 0) = 1.0;
  critic.b2 = Matd::Zero(1, 1);
  critic.out_act = Activation::kIdentity;

  Graph tape;
  auto vars = bind(tape, critic);
  Rng rng(11);
  const Matd x = 0.25 * sample_gaussian(6, d, rng);
  auto gp = build_gradient_penalty(tape, vars, x, std::nullopt);
  CHECK(gp.value()(0, 0) == 0.0);
}

TEST_CASE("input gradient of a random two-layer critic matches FD and the "
          "hand-written chain rule") {
  Rng rng(17);
  auto critic = tu::random_mlp(6, 8, 1, Activation::kIdentity, rng);
  Matd x = sample_gaussian(4, 6, rng);

  Graph tape;
  auto vars = bind(tape, critic);
  auto xv = tape.input(x);
  auto gx = tape.input_gradient(forward(tape, vars, xv), xv).value();

  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd hand =
        tu::sl_critic_input_grad(critic, x.row(i).transpose(), std::nullopt);
    CHECK((gx.row(i).transpose() - hand).cwiseAbs().maxCoeff() < 1e-12);
  }

  Matd xrow = x.row(0);
  const Matd fd = tu::fd_grad(xrow, [&] {
    return tu::sl_critic_row(critic, xrow.row(0).transpose(), std::nullopt);
  });
  CHECK(tu::max_rel_err(gx.row(0), fd) < 1e-4);
}

TEST_CASE("parameter gradients of the penalty scalar match FD") {
  // (||grad_x D(x)||_2 - 1)^2 differentiates through the recorded input
  // gradient; this is the second-order path.
  Rng rng(23);
  auto critic = tu::random_mlp(6, 8, 1, Activation::kIdentity, rng);
  const Matd x = sample_gaussian(4, 6, rng);

  auto penalty = [&] {
    return tu::sl_gradient_penalty(critic, x, std::nullopt);
  };
  auto analytic = [&] {
    Graph tape;
    auto vars = bind(tape, critic);
    auto gp = build_gradient_penalty(tape, vars, x, std::nullopt);
    std::array<Var, 4> leaves{vars.w1, vars.b1, vars.w2, vars.b2};
    return tape.gradients(gp, leaves);
  }();

  Matd* params[4] = {&critic.w1, &critic.b1, &critic.w2, &critic.b2};
  for (int p = 0; p < 4; ++p) {
    const Matd fd = tu::fd_grad(*params[p], penalty);
    CHECK(tu::max_rel_err(analytic[static_cast<size_t>(p)], fd) < 1e-4);
  }
}

TEST_CASE("replay reproduces every recorded value bit-identically") {
  Rng rng(29);
  auto critic = tu::random_mlp(5, 7, 1, Activation::kIdentity, rng);
  Graph tape;
  auto vars = bind(tape, critic);
  const Matd x = sample_gaussian(3, 5, rng);
  auto gp = build_gradient_penalty(tape, vars, x, std::nullopt);
  std::array<Var, 2> leaves{vars.w1, vars.w2};
  tape.gradients(gp, leaves);

  std::vector<Matd> before;
  for (int i = 0; i < tape.size(); ++i) before.push_back(tape.value(i));
  tape.replay();
  for (int i = 0; i < tape.size(); ++i) {
    CHECK(before[static_cast<size_t>(i)] == tape.value(i));
  }
}

TEST_CASE("identical seeds give bit-identical tapes") {
  auto build = [](std::uint64_t seed) {
    Rng rng(seed);
    auto critic = tu::random_mlp(8, 7, 1, Activation::kIdentity, rng);
    auto gen = tu::random_mlp(6, 7, 5, Activation::kRelu, rng);
    const Matd x = sample_gaussian(4, 5, rng);
    const Matd a = sample_gaussian(4, 3, rng);
    const Matd z = sample_gaussian(4, 3, rng);
    const Vecd alpha = sample_uniform01(4, rng);
    auto tape = std::make_unique<Graph>();
    auto dv = bind(*tape, critic);
    auto gv = bind(*tape, gen);
    build_seen_adv(*tape, dv, gv, x, a, 5.0, z, alpha);
    return tape;
  };
  auto t1 = build(31);
  auto t2 = build(31);
  REQUIRE(t1->size() == t2->size());
  for (int i = 0; i < t1->size(); ++i) CHECK(t1->value(i) == t2->value(i));
}

TEST_CASE("adam leaves parameters unchanged on zero gradients") {
  Matd p = Matd::Constant(2, 3, 1.5);
  const Matd orig = p;
  auto st = AdamState::zeros(2, 3);
  adam_step(p, Matd::Zero(2, 3), st, 1e-4);
  CHECK(p == orig);
}

TEST_CASE("adam first step matches the hand-evaluated formula") {
  Matd p = Matd::Constant(1, 1, 1.0);
  auto st = AdamState::zeros(1, 1);
  adam_step(p, Matd::Constant(1, 1, 1.0), st, 1e-4);
  const double expected = 1.0 - 1e-4 / (1.0 + 1e-8);
  CHECK(p(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(p(0, 0) == doctest::Approx(0.9999).epsilon(1e-7));
}

TEST_CASE("adam converges on a quadratic") {
  Matd p = Matd::Zero(1, 1);
  auto st = AdamState::zeros(1, 1);
  for (int i = 0; i < 100; ++i) {
    const Matd g = 2.0 * (p.array() - 3.0);
    adam_step(p, g, st, 0.1);
  }
  CHECK(std::abs(p(0, 0) - 3.0) < 0.1);
}

TEST_CASE("adam rejects mismatched shapes") {
  Matd p = Matd::Zero(2, 2);
  auto st = AdamState::zeros(2, 2);
  CHECK_THROWS_AS(adam_step(p, Matd::Zero(2, 3), st, 1e-4), ShapeMismatch);
}

TEST_CASE("float instantiation of the tape works end to end") {
  GraphT<float> tape;
  auto leaf = tape.input(Mat<float>::Constant(2, 2, 3.0f));
  auto loss = tape.sum_all(tape.square(leaf));
  std::array<VarT<float>, 1> leaves{leaf};
  const auto grads = tape.gradients(loss, leaves);
  CHECK(grads[0](0, 0) == doctest::Approx(6.0f));
}
