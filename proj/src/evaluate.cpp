#include "zslforge/evaluate.hpp"

#include <algorithm>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "zslforge/errors.hpp"
#include "zslforge/io.hpp"

namespace zslforge {
using nlohmann::json;

double per_class_top1(const std::vector<int>& predictions,
                      const std::vector<int>& true_labels,
                      const std::vector<int>& class_list) {
  if (predictions.size() != true_labels.size())
    throw InvalidArgument("per_class_top1: prediction/label length mismatch");
  std::map<int, std::pair<long, long>> tally;  // class -> (correct, total)
  for (int c : class_list) tally[c];
  for (size_t i = 0; i < true_labels.size(); ++i) {
    auto it = tally.find(true_labels[i]);
    if (it == tally.end())
      throw InvalidArgument("per_class_top1: unknown label " +
                            std::to_string(true_labels[i]));
    it->second.second += 1;
    if (predictions[i] == true_labels[i]) it->second.first += 1;
  }
  double sum = 0;
  long classes_with_instances = 0;
  for (const auto& [c, ct] : tally) {
    if (ct.second == 0) continue;  // excluded from the mean
    sum += static_cast<double>(ct.first) / static_cast<double>(ct.second);
    classes_with_instances += 1;
  }
  if (classes_with_instances == 0)
    throw InvalidArgument("per_class_top1: no class has instances");
  return sum / static_cast<double>(classes_with_instances);
}

double harmonic_mean(double u_percent, double s_percent) {
  if (u_percent < 0 || s_percent < 0)
    throw InvalidArgument("harmonic_mean: inputs must be non-negative");
  const double total = u_percent + s_percent;
  if (total == 0) return 0;
  return 2.0 * u_percent * s_percent / total;
}

std::string EvalReport::to_json() const {
  json j;
  j["protocol"] = protocol;
  j["U"] = u;
  j["S"] = s;
  j["H"] = h;
  json pc = json::object();
  for (const auto& [c, acc] : per_class) pc[std::to_string(c)] = acc;
  j["per_class"] = pc;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

std::string EvalReport::render_text() const {
  char line[160];
  std::string out;
  out += "protocol: " + protocol;
  if (!timestamp.empty()) out += "  (" + timestamp + ")";
  out += "\n";
  std::snprintf(line, sizeof(line), "U = %.1f  S = %.1f  H = %.1f\n", u, s, h);
  out += line;
  out += "per-class accuracy:\n";
  for (const auto& [c, acc] : per_class) {
    std::snprintf(line, sizeof(line), "  class %-6d %6.1f%%\n", c,
                  100.0 * acc);
    out += line;
  }
  return out;
}

void EvalReport::write_json(const std::filesystem::path& path) const {
  write_text_file(path, to_json());
}

namespace {

std::map<int, double> per_class_map(const std::vector<int>& preds,
                                    const std::vector<int>& trues,
                                    const std::vector<int>& classes) {
  std::map<int, std::pair<long, long>> tally;
  for (int c : classes) tally[c];
  for (size_t i = 0; i < trues.size(); ++i) {
    tally.at(trues[i]).second += 1;
    if (preds[i] == trues[i]) tally.at(trues[i]).first += 1;
  }
  std::map<int, double> out;
  for (const auto& [c, ct] : tally)
    if (ct.second > 0)
      out[c] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
  return out;
}

}  // namespace

EvalReport evaluate_czsl(const SoftmaxClassifier& unseen_clf,
                         const SplitDataset& ds) {
  const auto& trues = ds.eval_unseen_labels();
  const auto preds = predict(unseen_clf, ds.unseen_x()).labels;
  const auto& classes = ds.attrs().unseen_classes;
  EvalReport rep;
  rep.protocol = "czsl";
  rep.per_class = per_class_map(preds, trues, classes);
  rep.u = 100.0 * per_class_top1(preds, trues, classes);
  rep.s = 0;
  rep.h = 0;
  return rep;
}

namespace {

EvalReport gzsl_from_predictions(const std::vector<int>& unseen_preds,
                                 const std::vector<int>& seen_preds,
                                 const SplitDataset& ds) {
  const auto& unseen_trues = ds.eval_unseen_labels();
  if (ds.seen_test_x().rows() == 0)
    throw MissingLabels("gzsl: dataset has no seen test split");
  EvalReport rep;
  rep.protocol = "gzsl";
  rep.u = 100.0 * per_class_top1(unseen_preds, unseen_trues,
                                 ds.attrs().unseen_classes);
  rep.s = 100.0 * per_class_top1(seen_preds, ds.seen_test_y(),
                                 ds.attrs().seen_classes);
  rep.h = harmonic_mean(rep.u, rep.s);
  rep.per_class = per_class_map(unseen_preds, unseen_trues,
                                ds.attrs().unseen_classes);
  for (const auto& [c, acc] :
       per_class_map(seen_preds, ds.seen_test_y(), ds.attrs().seen_classes))
    rep.per_class[c] = acc;
  return rep;
}

}  // namespace

EvalReport evaluate_gzsl(const CascadeClassifier& cascade,
                         const SplitDataset& ds) {
  return gzsl_from_predictions(cascaded_predict(cascade, ds.unseen_x()),
                               cascaded_predict(cascade, ds.seen_test_x()),
                               ds);
}

EvalReport evaluate_gzsl_flat(const SoftmaxClassifier& flat_clf,
                              const SplitDataset& ds) {
  return gzsl_from_predictions(predict(flat_clf, ds.unseen_x()).labels,
                               predict(flat_clf, ds.seen_test_x()).labels,
                               ds);
}

}  // namespace zslforge
