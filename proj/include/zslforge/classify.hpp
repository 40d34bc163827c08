#pragma once

#include <optional>
#include <vector>

#include "zslforge/dataset.hpp"
#include "zslforge/models.hpp"

namespace zslforge {

struct LabeledFeatures {
  Matd x;
  std::vector<int> y;
};

/// Linear softmax classifier; column j scores class_ids[j] (ascending ids,
/// so first-maximum argmax breaks ties toward the lowest class id).
struct SoftmaxClassifier {
  Matd theta;  // d x C
  Matd bias;   // 1 x C
  std::vector<int> class_ids;

  Eigen::Index in_dim() const { return theta.rows(); }
  Eigen::Index n_classes() const { return theta.cols(); }
};

struct Prediction {
  std::vector<int> labels;
  Matd probs;  // rows sum to 1
};

/// n_per_class features per unseen class from G(z, a_class), fresh noise per
/// sample, classes in ascending id order.
LabeledFeatures synthesize_unseen(const MlpT<double>& generator,
                                  const AttributeTable& attrs,
                                  int n_per_class, Rng& rng);

/// Full-batch Adam on the softmax cross-entropy loss. When `class_list` is
/// given, every label must come from it; otherwise the list is inferred.
SoftmaxClassifier train_softmax(
    const Matd& x, const std::vector<int>& y, double lr, int epochs, Rng& rng,
    const std::optional<std::vector<int>>& class_list = std::nullopt);

/// Mean cross-entropy of the classifier on (x, y); exposed for gradient and
/// convergence tests.
double softmax_cross_entropy(const SoftmaxClassifier& clf, const Matd& x,
                             const std::vector<int>& y);

Prediction predict(const SoftmaxClassifier& clf, const Matd& x);

/// Binary seen-vs-unseen gate trained on real seen features (label 0, the
/// transductive unseen pool gets label 1).
SoftmaxClassifier train_gate(const Matd& seen_x, const Matd& unseen_x,
                             double lr, int epochs, Rng& rng);

/// P(unseen | x) per row.
Vecd gate_unseen_probability(const SoftmaxClassifier& gate, const Matd& x);

struct CascadeClassifier {
  SoftmaxClassifier gate;        // classes {0 = seen, 1 = unseen}
  SoftmaxClassifier seen_clf;    // over the seen classes
  SoftmaxClassifier unseen_clf;  // over the unseen classes
  double gate_threshold = 0.5;
};

/// Routes each row through the gate to the matching expert.
std::vector<int> cascaded_predict(const CascadeClassifier& cascade,
                                  const Matd& x);

}  // namespace zslforge
