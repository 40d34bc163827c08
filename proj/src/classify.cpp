#include "zslforge/classify.hpp"

#include <algorithm>
#include <set>

#include "zslforge/graph.hpp"

namespace zslforge {

LabeledFeatures synthesize_unseen(const MlpT<double>& generator,
                                  const AttributeTable& attrs,
                                  int n_per_class, Rng& rng) {
  if (n_per_class < 1)
    throw InvalidArgument("synthesize_unseen: n_per_class >= 1");
  if (attrs.unseen_classes.empty())
    throw InvalidArgument("synthesize_unseen: no unseen classes");
  const Eigen::Index k = attrs.k();
  const Eigen::Index noise_dim = generator.in_dim() - k;
  LabeledFeatures out;
  out.x.resize(static_cast<Eigen::Index>(attrs.unseen_classes.size()) *
                   n_per_class,
               generator.out_dim());
  Eigen::Index at = 0;
  for (const int c : attrs.unseen_classes) {
    const Matd z = sample_gaussian(n_per_class, noise_dim, rng);
    const Matd a = attrs.attribute_of(c).replicate(n_per_class, 1);
    out.x.middleRows(at, n_per_class) = generate(generator, z, a);
    for (int i = 0; i < n_per_class; ++i) out.y.push_back(c);
    at += n_per_class;
  }
  return out;
}

namespace {

Matd one_hot(const std::vector<int>& y, const std::vector<int>& classes) {
  Matd out = Matd::Zero(static_cast<Eigen::Index>(y.size()),
                        static_cast<Eigen::Index>(classes.size()));
  for (size_t i = 0; i < y.size(); ++i) {
    const auto it = std::lower_bound(classes.begin(), classes.end(), y[i]);
    if (it == classes.end() || *it != y[i])
      throw InvalidArgument("unknown label " + std::to_string(y[i]));
    out(static_cast<Eigen::Index>(i),
        static_cast<Eigen::Index>(it - classes.begin())) = 1.0;
  }
  return out;
}

// Stable row-wise softmax.
Matd softmax_rows(const Matd& logits) {
  Matd p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

// Taped cross-entropy: mean over rows of logsumexp(logits) - logit_true,
// with a constant per-row shift for stability.
Var build_cross_entropy(Graph& tape, Var theta, Var bias, const Matd& x,
                        const Matd& onehot) {
  auto logits = tape.add_row_vector(
      tape.matmul(tape.constant(x), theta), bias);
  Matd shift(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < shift.rows(); ++i)
    shift.row(i).setConstant(logits.value().row(i).maxCoeff());
  auto centered = tape.sub(logits, tape.constant(shift));
  auto lse = tape.log(tape.row_sum(tape.exp(centered)));
  auto picked = tape.row_sum(tape.mul_elem(centered, tape.constant(onehot)));
  return tape.mean_all(tape.sub(lse, picked));
}

}  // namespace

SoftmaxClassifier train_softmax(
    const Matd& x, const std::vector<int>& y, double lr, int epochs, Rng& rng,
    const std::optional<std::vector<int>>& class_list) {
  if (x.rows() == 0) throw InvalidArgument("train_softmax: empty input");
  if (static_cast<Eigen::Index>(y.size()) != x.rows())
    throw ShapeMismatch("train_softmax: one label per row");

  std::vector<int> classes;
  if (class_list.has_value()) {
    classes = *class_list;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  } else {
    const std::set<int> uniq(y.begin(), y.end());
    classes.assign(uniq.begin(), uniq.end());
  }
  if (classes.empty()) throw InvalidArgument("train_softmax: no classes");

  const Matd onehot = one_hot(y, classes);
  const Eigen::Index c = static_cast<Eigen::Index>(classes.size());

  SoftmaxClassifier clf;
  clf.class_ids = classes;
  const double bound = 0.01 / std::sqrt(static_cast<double>(x.cols()));
  clf.theta.resize(x.cols(), c);
  for (Eigen::Index i = 0; i < clf.theta.rows(); ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      clf.theta(i, j) = (2.0 * rng.uniform01() - 1.0) * bound;
  clf.bias = Matd::Zero(1, c);

  auto theta_state = AdamState::zeros(clf.theta.rows(), clf.theta.cols());
  auto bias_state = AdamState::zeros(1, c);
  for (int e = 0; e < epochs; ++e) {
    Graph tape;
    auto theta = tape.input(clf.theta);
    auto bias = tape.input(clf.bias);
    auto loss = build_cross_entropy(tape, theta, bias, x, onehot);
    std::array<Var, 2> leaves{theta, bias};
    auto grads = tape.gradients(loss, leaves);
    adam_step(clf.theta, grads[0], theta_state, lr);
    adam_step(clf.bias, grads[1], bias_state, lr);
  }
  return clf;
}

double softmax_cross_entropy(const SoftmaxClassifier& clf, const Matd& x,
                             const std::vector<int>& y) {
  Graph tape;
  auto theta = tape.input(clf.theta);
  auto bias = tape.input(clf.bias);
  return build_cross_entropy(tape, theta, bias, x, one_hot(y, clf.class_ids))
      .value()(0, 0);
}

Prediction predict(const SoftmaxClassifier& clf, const Matd& x) {
  if (x.cols() != clf.in_dim())
    throw ShapeMismatch("predict: input width " + std::to_string(x.cols()) +
                        ", classifier expects " + std::to_string(clf.in_dim()));
  Prediction out;
  const Matd logits =
      (x * clf.theta).rowwise() + clf.bias.row(0);
  out.probs = softmax_rows(logits);
  out.labels.reserve(static_cast<size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < out.probs.cols(); ++j)
      if (out.probs(i, j) > out.probs(i, best)) best = j;
    out.labels.push_back(clf.class_ids[static_cast<size_t>(best)]);
  }
  return out;
}

SoftmaxClassifier train_gate(const Matd& seen_x, const Matd& unseen_x,
                             double lr, int epochs, Rng& rng) {
  if (seen_x.rows() == 0 || unseen_x.rows() == 0)
    throw InvalidArgument("train_gate: both sets must be non-empty");
  if (seen_x.cols() != unseen_x.cols())
    throw ShapeMismatch("train_gate: feature widths differ");
  Matd x(seen_x.rows() + unseen_x.rows(), seen_x.cols());
  x.topRows(seen_x.rows()) = seen_x;
  x.bottomRows(unseen_x.rows()) = unseen_x;
  std::vector<int> y(static_cast<size_t>(x.rows()), 0);
  for (Eigen::Index i = seen_x.rows(); i < x.rows(); ++i)
    y[static_cast<size_t>(i)] = 1;
  return train_softmax(x, y, lr, epochs, rng,
                       std::vector<int>{0, 1});
}

Vecd gate_unseen_probability(const SoftmaxClassifier& gate, const Matd& x) {
  if (gate.n_classes() != 2 || gate.class_ids != std::vector<int>{0, 1})
    throw InvalidArgument("gate must be the binary {0,1} classifier");
  return predict(gate, x).probs.col(1);
}

std::vector<int> cascaded_predict(const CascadeClassifier& cascade,
                                  const Matd& x) {
  const Vecd p_unseen = gate_unseen_probability(cascade.gate, x);
  const Prediction seen_pred = predict(cascade.seen_clf, x);
  const Prediction unseen_pred = predict(cascade.unseen_clf, x);
  std::vector<int> out(static_cast<size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out[static_cast<size_t>(i)] = p_unseen(i) >= cascade.gate_threshold
                                      ? unseen_pred.labels[static_cast<size_t>(i)]
                                      : seen_pred.labels[static_cast<size_t>(i)];
  return out;
}

}  // namespace zslforge
