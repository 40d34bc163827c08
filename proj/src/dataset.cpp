#include "zslforge/dataset.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "zslforge/errors.hpp"
#include "zslforge/io.hpp"

namespace zslforge {
namespace fs = std::filesystem;
using nlohmann::json;

int AttributeTable::row_of(int class_id) const {
  auto it = std::lower_bound(class_ids.begin(), class_ids.end(), class_id);
  if (it == class_ids.end() || *it != class_id)
    throw InvalidArgument("attribute table: unknown class id " +
                          std::to_string(class_id));
  return static_cast<int>(it - class_ids.begin());
}

Matd AttributeTable::unseen_attribute_rows() const {
  Matd out(static_cast<Eigen::Index>(unseen_classes.size()), k());
  for (size_t i = 0; i < unseen_classes.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = attribute_of(unseen_classes[i]);
  return out;
}

Matd AttributeTable::seen_attribute_rows() const {
  Matd out(static_cast<Eigen::Index>(seen_classes.size()), k());
  for (size_t i = 0; i < seen_classes.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = attribute_of(seen_classes[i]);
  return out;
}

void AttributeTable::validate() const {
  if (attributes.rows() != static_cast<Eigen::Index>(class_ids.size()))
    throw DataFormatError("attribute table: one row per class id required");
  std::set<int> seen(seen_classes.begin(), seen_classes.end());
  for (int c : unseen_classes)
    if (seen.count(c))
      throw DataFormatError("overlapping partition: class " +
                            std::to_string(c) +
                            " listed as both seen and unseen");
  std::set<int> all(class_ids.begin(), class_ids.end());
  if (all.size() != class_ids.size())
    throw DataFormatError("attribute table: duplicate class id");
  for (int c : seen_classes)
    if (!all.count(c))
      throw DataFormatError("attribute table: seen class " +
                            std::to_string(c) + " has no attribute row");
  for (int c : unseen_classes)
    if (!all.count(c))
      throw DataFormatError("attribute table: unseen class " +
                            std::to_string(c) + " has no attribute row");
  if (all.size() != seen_classes.size() + unseen_classes.size())
    throw DataFormatError(
        "attribute table: attribute row for a class outside the partition");
  if ((attributes.array() < 0.0).any() || (attributes.array() > 1.0).any())
    throw DataFormatError("attribute table: entries must lie in [0,1]");
  if (!attributes.allFinite())
    throw DataFormatError("attribute table: non-finite entry");
}

SplitDataset::SplitDataset(Matd seen_train_x, std::vector<int> seen_train_y,
                           Matd seen_test_x, std::vector<int> seen_test_y,
                           Matd unseen_x,
                           std::optional<std::vector<int>> unseen_labels,
                           AttributeTable attrs)
    : seen_train_x_(std::move(seen_train_x)),
      seen_train_y_(std::move(seen_train_y)),
      seen_test_x_(std::move(seen_test_x)),
      seen_test_y_(std::move(seen_test_y)),
      unseen_x_(std::move(unseen_x)),
      unseen_labels_(std::move(unseen_labels)),
      attrs_(std::move(attrs)) {
  attrs_.validate();
  const Eigen::Index d = seen_train_x_.cols();
  if (seen_test_x_.rows() > 0 && seen_test_x_.cols() != d)
    throw DataFormatError("dimension mismatch: seen test feature width");
  if (unseen_x_.rows() > 0 && unseen_x_.cols() != d)
    throw DataFormatError("dimension mismatch: unseen feature width");
  if (static_cast<Eigen::Index>(seen_train_y_.size()) != seen_train_x_.rows())
    throw DataFormatError("seen train: label count differs from feature rows");
  if (static_cast<Eigen::Index>(seen_test_y_.size()) != seen_test_x_.rows())
    throw DataFormatError("seen test: label count differs from feature rows");
  std::set<int> seen(attrs_.seen_classes.begin(), attrs_.seen_classes.end());
  for (int y : seen_train_y_)
    if (!seen.count(y))
      throw DataFormatError("seen train: label " + std::to_string(y) +
                            " is not a seen class");
  for (int y : seen_test_y_)
    if (!seen.count(y))
      throw DataFormatError("seen test: label " + std::to_string(y) +
                            " is not a seen class");
  if (unseen_labels_.has_value()) {
    if (static_cast<Eigen::Index>(unseen_labels_->size()) != unseen_x_.rows())
      throw DataFormatError(
          "unseen labels: count differs from unseen feature rows");
    std::set<int> unseen(attrs_.unseen_classes.begin(),
                         attrs_.unseen_classes.end());
    for (int y : *unseen_labels_)
      if (!unseen.count(y))
        throw DataFormatError("unseen labels: label " + std::to_string(y) +
                              " is not an unseen class");
  }
  if (!seen_train_x_.allFinite() || !seen_test_x_.allFinite() ||
      !unseen_x_.allFinite())
    throw DataFormatError("features: non-finite entry");
}

const std::vector<int>& SplitDataset::eval_unseen_labels() const {
  if (!unseen_labels_.has_value())
    throw MissingLabels("dataset holds no unseen labels");
  return *unseen_labels_;
}

Matd SplitDataset::seen_train_attributes() const {
  Matd out(seen_train_x_.rows(), attrs_.k());
  for (Eigen::Index i = 0; i < seen_train_x_.rows(); ++i)
    out.row(i) = attrs_.attribute_of(seen_train_y_[static_cast<size_t>(i)]);
  return out;
}

void SyntheticSpec::validate() const {
  if (n_seen_classes < 1 || n_unseen_classes < 1 || d < 1 || k < 1 ||
      samples_per_class_train < 1 || samples_per_class_test < 1)
    throw InvalidArgument("synthetic spec: all counts must be >= 1");
  if (!(cluster_noise > 0.0))
    throw InvalidArgument("synthetic spec: cluster_noise must be positive");
  if (overlap < 0.0 || overlap > 1.0)
    throw InvalidArgument("synthetic spec: overlap must lie in [0,1]");
}

SyntheticSpec standard_benchmark_spec() { return SyntheticSpec{}; }

SplitDataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int n_classes = spec.n_seen_classes + spec.n_unseen_classes;

  // Class attributes from the sampling seed.
  Rng rng(seed);
  Matd attributes(n_classes, spec.k);
  for (int c = 0; c < n_classes; ++c)
    for (int j = 0; j < spec.k; ++j) attributes(c, j) = rng.uniform01();

  // Attribute-to-mean map from its own seed, shared across classes.
  Rng map_rng(spec.attribute_to_mean_map_seed);
  const double scale =
      (1.0 - spec.overlap) * 2.0 / std::sqrt(static_cast<double>(spec.k));
  Matd map_w(spec.d, spec.k);
  for (int i = 0; i < spec.d; ++i)
    for (int j = 0; j < spec.k; ++j)
      map_w(i, j) = scale * map_rng.gaussian();
  Eigen::VectorXd map_b(spec.d);
  for (int i = 0; i < spec.d; ++i)
    map_b(i) = 0.25 + map_rng.uniform01();

  Matd means = attributes * map_w.transpose();
  means.rowwise() += map_b.transpose();

  auto draw_rows = [&](int class_row, int count, Matd& x, int at) {
    for (int s = 0; s < count; ++s) {
      for (int j = 0; j < spec.d; ++j) {
        const double v =
            means(class_row, j) + spec.cluster_noise * rng.gaussian();
        x(at + s, j) = v > 0.0 ? v : 0.0;
      }
    }
  };

  const int n_tr = spec.n_seen_classes * spec.samples_per_class_train;
  const int n_te = spec.n_seen_classes * spec.samples_per_class_test;
  const int n_un = spec.n_unseen_classes * spec.samples_per_class_train;
  Matd seen_train_x(n_tr, spec.d), seen_test_x(n_te, spec.d),
      unseen_x(n_un, spec.d);
  std::vector<int> seen_train_y, seen_test_y, unseen_y;
  seen_train_y.reserve(static_cast<size_t>(n_tr));
  seen_test_y.reserve(static_cast<size_t>(n_te));
  unseen_y.reserve(static_cast<size_t>(n_un));

  AttributeTable attrs;
  attrs.attributes = attributes;
  for (int c = 0; c < n_classes; ++c) attrs.class_ids.push_back(c);
  for (int c = 0; c < spec.n_seen_classes; ++c) attrs.seen_classes.push_back(c);
  for (int c = spec.n_seen_classes; c < n_classes; ++c)
    attrs.unseen_classes.push_back(c);

  for (int c = 0; c < spec.n_seen_classes; ++c) {
    draw_rows(c, spec.samples_per_class_train, seen_train_x,
              c * spec.samples_per_class_train);
    for (int s = 0; s < spec.samples_per_class_train; ++s)
      seen_train_y.push_back(c);
    draw_rows(c, spec.samples_per_class_test, seen_test_x,
              c * spec.samples_per_class_test);
    for (int s = 0; s < spec.samples_per_class_test; ++s)
      seen_test_y.push_back(c);
  }
  for (int u = 0; u < spec.n_unseen_classes; ++u) {
    const int c = spec.n_seen_classes + u;
    draw_rows(c, spec.samples_per_class_train, unseen_x,
              u * spec.samples_per_class_train);
    for (int s = 0; s < spec.samples_per_class_train; ++s) unseen_y.push_back(c);
  }

  return SplitDataset(std::move(seen_train_x), std::move(seen_train_y),
                      std::move(seen_test_x), std::move(seen_test_y),
                      std::move(unseen_x), std::move(unseen_y),
                      std::move(attrs));
}

namespace {

std::string matrix_csv(const Matd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string labels_csv(const std::vector<int>& y) {
  std::string out;
  for (int v : y) {
    out += std::to_string(v);
    out += '\n';
  }
  return out;
}

std::vector<std::string_view> nonempty_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line != "\r") lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

Matd read_features_csv(const fs::path& path, Eigen::Index expect_cols) {
  if (!fs::exists(path)) throw DataFormatError("missing file: " + path.string());
  const std::string text = read_text_file(path);
  const auto lines = nonempty_lines(text);
  Matd out(static_cast<Eigen::Index>(lines.size()), expect_cols);
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto fields = split_csv_row(lines[i]);
    if (static_cast<Eigen::Index>(fields.size()) != expect_cols)
      throw DataFormatError("dimension mismatch: " + path.string() + " line " +
                            std::to_string(i + 1) + " has " +
                            std::to_string(fields.size()) + " values, expected " +
                            std::to_string(expect_cols));
    for (size_t j = 0; j < fields.size(); ++j) {
      double v;
      if (!parse_double(fields[j], v))
        throw DataFormatError("malformed row: " + path.string() + " line " +
                              std::to_string(i + 1) + " field " +
                              std::to_string(j + 1));
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return out;
}

std::vector<int> read_labels_csv(const fs::path& path) {
  if (!fs::exists(path)) throw DataFormatError("missing file: " + path.string());
  const std::string text = read_text_file(path);
  const auto lines = nonempty_lines(text);
  std::vector<int> out;
  out.reserve(lines.size());
  for (size_t i = 0; i < lines.size(); ++i) {
    long long v;
    if (!parse_int(lines[i], v))
      throw DataFormatError("malformed row: " + path.string() + " line " +
                            std::to_string(i + 1));
    out.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace

void save_dataset(const SplitDataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  write_text_file(dir / "features_seen_train.csv", matrix_csv(ds.seen_train_x()));
  write_text_file(dir / "features_seen_test.csv", matrix_csv(ds.seen_test_x()));
  write_text_file(dir / "features_unseen.csv", matrix_csv(ds.unseen_x()));
  write_text_file(dir / "labels_seen_train.csv", labels_csv(ds.seen_train_y()));
  write_text_file(dir / "labels_seen_test.csv", labels_csv(ds.seen_test_y()));
  if (ds.has_unseen_labels())
    write_text_file(dir / "labels_unseen.csv",
                    labels_csv(ds.eval_unseen_labels()));

  const auto& attrs = ds.attrs();
  std::string attr_csv;
  for (size_t i = 0; i < attrs.class_ids.size(); ++i) {
    attr_csv += std::to_string(attrs.class_ids[i]);
    for (Eigen::Index j = 0; j < attrs.k(); ++j) {
      attr_csv += ',';
      attr_csv += format_double(attrs.attributes(static_cast<Eigen::Index>(i), j));
    }
    attr_csv += '\n';
  }
  write_text_file(dir / "attributes.csv", attr_csv);

  json split;
  split["seen_classes"] = attrs.seen_classes;
  split["unseen_classes"] = attrs.unseen_classes;
  split["d"] = static_cast<int>(ds.d());
  split["k"] = static_cast<int>(ds.k());
  write_text_file(dir / "split.json", split.dump(2) + "\n");
}

SplitDataset load_dataset(const fs::path& dir) {
  const fs::path split_path = dir / "split.json";
  if (!fs::exists(split_path))
    throw DataFormatError("missing file: " + split_path.string());
  json split;
  try {
    split = json::parse(read_text_file(split_path));
  } catch (const json::exception& e) {
    throw DataFormatError("malformed row: " + split_path.string() + ": " +
                          e.what());
  }
  AttributeTable attrs;
  Eigen::Index d, k;
  try {
    attrs.seen_classes = split.at("seen_classes").get<std::vector<int>>();
    attrs.unseen_classes = split.at("unseen_classes").get<std::vector<int>>();
    d = split.at("d").get<int>();
    k = split.at("k").get<int>();
  } catch (const json::exception& e) {
    throw DataFormatError("malformed row: " + split_path.string() + ": " +
                          e.what());
  }
  std::sort(attrs.seen_classes.begin(), attrs.seen_classes.end());
  std::sort(attrs.unseen_classes.begin(), attrs.unseen_classes.end());

  const fs::path attr_path = dir / "attributes.csv";
  if (!fs::exists(attr_path))
    throw DataFormatError("missing file: " + attr_path.string());
  {
    const std::string text = read_text_file(attr_path);
    const auto lines = nonempty_lines(text);
    attrs.attributes.resize(static_cast<Eigen::Index>(lines.size()), k);
    std::vector<std::pair<int, Eigen::VectorXd>> rows;
    for (size_t i = 0; i < lines.size(); ++i) {
      const auto fields = split_csv_row(lines[i]);
      if (static_cast<Eigen::Index>(fields.size()) != k + 1)
        throw DataFormatError("dimension mismatch: " + attr_path.string() +
                              " line " + std::to_string(i + 1) + " has " +
                              std::to_string(fields.size() - 1) +
                              " attribute values, expected " + std::to_string(k));
      long long cid;
      if (!parse_int(fields[0], cid))
        throw DataFormatError("malformed row: " + attr_path.string() +
                              " line " + std::to_string(i + 1));
      Eigen::VectorXd row(k);
      for (Eigen::Index j = 0; j < k; ++j) {
        double v;
        if (!parse_double(fields[static_cast<size_t>(j) + 1], v))
          throw DataFormatError("malformed row: " + attr_path.string() +
                                " line " + std::to_string(i + 1) + " field " +
                                std::to_string(j + 2));
        row(j) = v;
      }
      rows.emplace_back(static_cast<int>(cid), std::move(row));
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t i = 0; i < rows.size(); ++i) {
      attrs.class_ids.push_back(rows[i].first);
      attrs.attributes.row(static_cast<Eigen::Index>(i)) =
          rows[i].second.transpose();
    }
  }

  // Min-max normalize per dimension unless every entry is already in range.
  if ((attrs.attributes.array() < 0.0).any() ||
      (attrs.attributes.array() > 1.0).any()) {
    for (Eigen::Index j = 0; j < attrs.attributes.cols(); ++j) {
      const double lo = attrs.attributes.col(j).minCoeff();
      const double hi = attrs.attributes.col(j).maxCoeff();
      if (hi > lo)
        attrs.attributes.col(j) =
            (attrs.attributes.col(j).array() - lo) / (hi - lo);
      else
        attrs.attributes.col(j).setZero();
    }
  }

  Matd seen_train_x = read_features_csv(dir / "features_seen_train.csv", d);
  Matd seen_test_x = read_features_csv(dir / "features_seen_test.csv", d);
  Matd unseen_x = read_features_csv(dir / "features_unseen.csv", d);
  std::vector<int> seen_train_y = read_labels_csv(dir / "labels_seen_train.csv");
  std::vector<int> seen_test_y = read_labels_csv(dir / "labels_seen_test.csv");
  std::optional<std::vector<int>> unseen_y;
  if (fs::exists(dir / "labels_unseen.csv"))
    unseen_y = read_labels_csv(dir / "labels_unseen.csv");

  return SplitDataset(std::move(seen_train_x), std::move(seen_train_y),
                      std::move(seen_test_x), std::move(seen_test_y),
                      std::move(unseen_x), std::move(unseen_y),
                      std::move(attrs));
}

std::vector<std::vector<int>> epoch_batches(int n, int batch_size, Rng& rng) {
  if (batch_size < 1) throw InvalidArgument("epoch_batches: batch_size >= 1");
  if (n < 1) throw InvalidArgument("epoch_batches: n >= 1");
  const auto perm = sample_permutation(n, rng);
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n; start += batch_size) {
    const int end = std::min(n, start + batch_size);
    batches.emplace_back(perm.begin() + start, perm.begin() + end);
  }
  return batches;
}

}  // namespace zslforge
