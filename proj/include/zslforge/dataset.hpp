#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "zslforge/rng.hpp"

namespace zslforge {

/// Per-class semantic attributes with the seen/unseen class partition.
/// Attribute entries are normalized to [0, 1].
struct AttributeTable {
  std::vector<int> class_ids;  // ascending, one per attribute row
  Matd attributes;             // class_ids.size() x k
  std::vector<int> seen_classes;    // ascending
  std::vector<int> unseen_classes;  // ascending

  Eigen::Index k() const { return attributes.cols(); }
  int row_of(int class_id) const;
  Eigen::RowVectorXd attribute_of(int class_id) const {
    return attributes.row(row_of(class_id));
  }
  /// Rows of the table restricted to the unseen classes, in ascending
  /// class-id order.
  Matd unseen_attribute_rows() const;
  Matd seen_attribute_rows() const;

  void validate() const;
};

/// Features and attributes visible to training code. Deliberately carries no
/// accessor for unseen labels.
struct TrainView {
  const Matd& seen_x;
  const std::vector<int>& seen_y;
  const Matd& unseen_x;
  const AttributeTable& attrs;
  Eigen::Index d() const { return seen_x.cols(); }
  Eigen::Index k() const { return attrs.k(); }
};

/// One zero-shot split: labeled seen data, the unlabeled transductive unseen
/// set (whose true labels are held aside for evaluation only), and a held-out
/// labeled seen test set.
class SplitDataset {
 public:
  SplitDataset(Matd seen_train_x, std::vector<int> seen_train_y,
               Matd seen_test_x, std::vector<int> seen_test_y, Matd unseen_x,
               std::optional<std::vector<int>> unseen_labels,
               AttributeTable attrs);

  Eigen::Index d() const { return seen_train_x_.cols(); }
  Eigen::Index k() const { return attrs_.k(); }

  const Matd& seen_train_x() const { return seen_train_x_; }
  const std::vector<int>& seen_train_y() const { return seen_train_y_; }
  const Matd& seen_test_x() const { return seen_test_x_; }
  const std::vector<int>& seen_test_y() const { return seen_test_y_; }
  const Matd& unseen_x() const { return unseen_x_; }
  const AttributeTable& attrs() const { return attrs_; }

  bool has_unseen_labels() const { return unseen_labels_.has_value(); }
  /// Evaluation-only: the held-out labels of the unseen set.
  const std::vector<int>& eval_unseen_labels() const;

  TrainView train_view() const {
    return {seen_train_x_, seen_train_y_, unseen_x_, attrs_};
  }

  /// Attribute rows broadcast per seen-train instance label.
  Matd seen_train_attributes() const;

 private:
  Matd seen_train_x_;
  std::vector<int> seen_train_y_;
  Matd seen_test_x_;
  std::vector<int> seen_test_y_;
  Matd unseen_x_;
  std::optional<std::vector<int>> unseen_labels_;
  AttributeTable attrs_;
};

/// Generator recipe for a desk-scale benchmark. Class attributes are uniform
/// in [0,1]^k; class feature means are W a + b for one random linear map
/// shared by all classes; features are the mean plus isotropic Gaussian
/// noise, rectified at zero. `overlap` scales the map toward zero, pulling
/// class means together.
struct SyntheticSpec {
  int n_seen_classes = 10;
  int n_unseen_classes = 5;
  int d = 64;
  int k = 16;
  int samples_per_class_train = 25;  // also the unseen transductive set size
  int samples_per_class_test = 15;
  double cluster_noise = 0.25;
  double overlap = 0.35;
  std::uint64_t attribute_to_mean_map_seed = 40;

  void validate() const;
};

/// The fixed configuration used by the benchmark experiments and tests.
SyntheticSpec standard_benchmark_spec();

SplitDataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Directory layout: features_*.csv, labels_*.csv, attributes.csv,
/// split.json.
void save_dataset(const SplitDataset& ds, const std::filesystem::path& dir);
SplitDataset load_dataset(const std::filesystem::path& dir);

/// One epoch: a seeded permutation of 0..n-1 cut into batches; the final
/// short batch is kept.
std::vector<std::vector<int>> epoch_batches(int n, int batch_size, Rng& rng);

}  // namespace zslforge
