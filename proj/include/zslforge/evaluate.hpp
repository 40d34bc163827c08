#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "zslforge/classify.hpp"
#include "zslforge/dataset.hpp"

namespace zslforge {

/// Unweighted mean over classes (those with at least one true instance) of
/// the within-class top-1 accuracy. Returns a fraction in [0, 1].
double per_class_top1(const std::vector<int>& predictions,
                      const std::vector<int>& true_labels,
                      const std::vector<int>& class_list);

/// 2US/(U+S) in percent; 0 when U + S = 0.
double harmonic_mean(double u_percent, double s_percent);

struct EvalReport {
  std::string protocol;  // "czsl" or "gzsl"
  std::map<int, double> per_class;  // fractions in [0, 1]
  double u = 0;  // percent
  double s = 0;  // percent
  double h = 0;  // percent
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string timestamp;  // rendered output only; not part of the JSON

  std::string to_json() const;
  std::string render_text() const;
  void write_json(const std::filesystem::path& path) const;
};

/// Conventional protocol: the unseen-class expert on the unseen test set.
EvalReport evaluate_czsl(const SoftmaxClassifier& unseen_clf,
                         const SplitDataset& ds);

/// Generalized protocol: the cascade over the union label space, scored on
/// the seen test set (S) and the unseen set (U).
EvalReport evaluate_gzsl(const CascadeClassifier& cascade,
                         const SplitDataset& ds);

/// Generalized protocol with a single flat classifier over all classes.
EvalReport evaluate_gzsl_flat(const SoftmaxClassifier& flat_clf,
                              const SplitDataset& ds);

}  // namespace zslforge
