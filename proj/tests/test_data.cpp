#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "zslforge/dataset.hpp"
#include "zslforge/io.hpp"

using namespace zslforge;
namespace fs = std::filesystem;

namespace {

SyntheticSpec tiny_spec() {
  SyntheticSpec spec;
  spec.n_seen_classes = 2;
  spec.n_unseen_classes = 1;
  spec.d = 8;
  spec.k = 3;
  spec.samples_per_class_train = 6;
  spec.samples_per_class_test = 4;
  spec.cluster_noise = 0.1;
  spec.overlap = 0.0;
  return spec;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("zslforge_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool datasets_equal(const SplitDataset& a, const SplitDataset& b) {
  return a.seen_train_x() == b.seen_train_x() &&
         a.seen_train_y() == b.seen_train_y() &&
         a.seen_test_x() == b.seen_test_x() &&
         a.seen_test_y() == b.seen_test_y() && a.unseen_x() == b.unseen_x() &&
         a.eval_unseen_labels() == b.eval_unseen_labels() &&
         a.attrs().attributes == b.attrs().attributes &&
         a.attrs().class_ids == b.attrs().class_ids &&
         a.attrs().seen_classes == b.attrs().seen_classes &&
         a.attrs().unseen_classes == b.attrs().unseen_classes;
}

}  // namespace

TEST_CASE("synthetic dataset satisfies the structural contract") {
  const auto ds = make_synthetic(tiny_spec(), 1);
  CHECK(ds.attrs().attributes.rows() == 3);
  CHECK(ds.attrs().seen_classes == std::vector<int>{0, 1});
  CHECK(ds.attrs().unseen_classes == std::vector<int>{2});
  CHECK(ds.d() == 8);
  CHECK(ds.k() == 3);
  CHECK(ds.seen_train_x().rows() == 12);
  CHECK(ds.seen_test_x().rows() == 8);
  CHECK(ds.unseen_x().rows() == 6);
  CHECK(ds.attrs().attributes.minCoeff() >= 0.0);
  CHECK(ds.attrs().attributes.maxCoeff() <= 1.0);
  CHECK(ds.seen_train_x().minCoeff() >= 0.0);  // rectified features
}

TEST_CASE("synthetic generation is deterministic per seed") {
  const auto a = make_synthetic(tiny_spec(), 7);
  const auto b = make_synthetic(tiny_spec(), 7);
  CHECK(datasets_equal(a, b));
  const auto c = make_synthetic(tiny_spec(), 8);
  CHECK_FALSE(a.seen_train_x() == c.seen_train_x());
}

TEST_CASE("low-noise non-overlapping classes are separable by class means") {
  SyntheticSpec spec = tiny_spec();
  spec.n_unseen_classes = 3;
  spec.cluster_noise = 0.01;
  spec.overlap = 0.0;
  const auto ds = make_synthetic(spec, 3);

  // Nearest-class-mean oracle fit on the unseen features themselves.
  const auto& labels = ds.eval_unseen_labels();
  std::map<int, std::pair<Eigen::RowVectorXd, int>> sums;
  for (Eigen::Index i = 0; i < ds.unseen_x().rows(); ++i) {
    auto& [sum, count] = sums[labels[static_cast<size_t>(i)]];
    if (count == 0) sum = Eigen::RowVectorXd::Zero(ds.d());
    sum += ds.unseen_x().row(i);
    count += 1;
  }
  int correct = 0;
  for (Eigen::Index i = 0; i < ds.unseen_x().rows(); ++i) {
    int best = -1;
    double best_dist = 0;
    for (const auto& [c, sc] : sums) {
      const double dist =
          (ds.unseen_x().row(i) - sc.first / sc.second).squaredNorm();
      if (best < 0 || dist < best_dist) {
        best = c;
        best_dist = dist;
      }
    }
    if (best == labels[static_cast<size_t>(i)]) ++correct;
  }
  CHECK(correct == ds.unseen_x().rows());
}

TEST_CASE("invalid synthetic specs are rejected") {
  SyntheticSpec spec = tiny_spec();
  spec.n_seen_classes = 0;
  CHECK_THROWS_AS(make_synthetic(spec, 1), InvalidArgument);
  spec = tiny_spec();
  spec.cluster_noise = 0.0;
  CHECK_THROWS_AS(make_synthetic(spec, 1), InvalidArgument);
}

TEST_CASE("save then load reproduces an equal dataset") {
  const auto dir = fresh_dir("roundtrip");
  const auto ds = make_synthetic(tiny_spec(), 42);
  save_dataset(ds, dir);
  const auto loaded = load_dataset(dir);
  CHECK(datasets_equal(ds, loaded));
  fs::remove_all(dir);
}

TEST_CASE("saving twice with the same seed gives byte-identical files") {
  const auto d1 = fresh_dir("bytes1");
  const auto d2 = fresh_dir("bytes2");
  save_dataset(make_synthetic(tiny_spec(), 5), d1);
  save_dataset(make_synthetic(tiny_spec(), 5), d2);
  for (const auto& entry : fs::directory_iterator(d1)) {
    const auto other = d2 / entry.path().filename();
    CHECK(read_text_file(entry.path()) == read_text_file(other));
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("loader names the offending file and line on a short row") {
  const auto dir = fresh_dir("shortrow");
  save_dataset(make_synthetic(tiny_spec(), 1), dir);
  // Drop one value from the second attribute row.
  write_text_file(dir / "attributes.csv", "0,0.1,0.2,0.3\n1,0.4,0.5\n2,0.7,0.8,0.9\n");
  try {
    load_dataset(dir);
    FAIL("expected DataFormatError");
  } catch (const DataFormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("attributes.csv") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("loader rejects a class listed as both seen and unseen") {
  const auto dir = fresh_dir("overlap");
  save_dataset(make_synthetic(tiny_spec(), 1), dir);
  write_text_file(dir / "split.json",
                  R"({"seen_classes":[0,1],"unseen_classes":[1,2],"d":8,"k":3})");
  CHECK_THROWS_AS(load_dataset(dir), DataFormatError);
  try {
    load_dataset(dir);
  } catch (const DataFormatError& e) {
    CHECK(std::string(e.what()).find("overlapping") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("loader reports missing files by name") {
  const auto dir = fresh_dir("missing");
  save_dataset(make_synthetic(tiny_spec(), 1), dir);
  fs::remove(dir / "features_unseen.csv");
  try {
    load_dataset(dir);
    FAIL("expected DataFormatError");
  } catch (const DataFormatError& e) {
    CHECK(std::string(e.what()).find("features_unseen.csv") !=
          std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("out-of-range attributes are min-max normalized per dimension") {
  const auto dir = fresh_dir("norm");
  save_dataset(make_synthetic(tiny_spec(), 1), dir);
  write_text_file(dir / "attributes.csv",
                  "0,0,-2,10\n1,5,0,20\n2,10,2,30\n");
  const auto ds = load_dataset(dir);
  const Matd expect = (Matd(3, 3) << 0, 0, 0, 0.5, 0.5, 0.5, 1, 1, 1).finished();
  CHECK((ds.attrs().attributes - expect).cwiseAbs().maxCoeff() < 1e-12);
  fs::remove_all(dir);
}

TEST_CASE("unseen labels file is optional") {
  const auto dir = fresh_dir("nolabels");
  save_dataset(make_synthetic(tiny_spec(), 1), dir);
  fs::remove(dir / "labels_unseen.csv");
  const auto ds = load_dataset(dir);
  CHECK_FALSE(ds.has_unseen_labels());
  CHECK_THROWS_AS(ds.eval_unseen_labels(), MissingLabels);
  fs::remove_all(dir);
}

TEST_CASE("epoch batches partition a permutation, short batch kept") {
  Rng rng(1);
  const auto batches = epoch_batches(10, 4, rng);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 4);
  CHECK(batches[1].size() == 4);
  CHECK(batches[2].size() == 2);
  std::set<int> all;
  for (const auto& b : batches) all.insert(b.begin(), b.end());
  CHECK(all.size() == 10);
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 9);
}

TEST_CASE("epoch batches are deterministic and validate arguments") {
  Rng a(9), b(9);
  CHECK(epoch_batches(10, 4, a) == epoch_batches(10, 4, b));
  Rng c(1);
  const auto single = epoch_batches(10, 16, c);
  REQUIRE(single.size() == 1);
  CHECK(single[0].size() == 10);
  Rng d(1);
  CHECK_THROWS_AS(epoch_batches(10, 0, d), InvalidArgument);
}

template <typename V>
constexpr bool exposes_unseen_labels =
    requires(const V& v) { v.eval_unseen_labels(); } ||
    requires(const V& v) { v.unseen_labels; };

TEST_CASE("the training view carries no unseen labels") {
  const auto ds = make_synthetic(tiny_spec(), 1);
  const TrainView view = ds.train_view();
  CHECK(view.unseen_x.rows() == ds.unseen_x().rows());
  // The accessor must not exist on the training-facing type.
  static_assert(!exposes_unseen_labels<TrainView>);
  static_assert(exposes_unseen_labels<SplitDataset>);
}
