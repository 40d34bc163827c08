#include "zslforge/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "zslforge/errors.hpp"
#include "zslforge/io.hpp"

namespace zslforge {
using nlohmann::json;

namespace {

json matrix_to_json(const Matd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  json j;
  j["rows"] = static_cast<int>(m.rows());
  j["cols"] = static_cast<int>(m.cols());
  j["data"] = std::move(rows);
  return j;
}

Matd matrix_from_json(const json& j) {
  const Eigen::Index rows = j.at("rows").get<int>();
  const Eigen::Index cols = j.at("cols").get<int>();
  Matd m(rows, cols);
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows)
    throw IoError("checkpoint: matrix row count mismatch");
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = data[static_cast<size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw IoError("checkpoint: matrix column count mismatch");
    for (Eigen::Index jj = 0; jj < cols; ++jj)
      m(i, jj) = row[static_cast<size_t>(jj)].get<double>();
  }
  return m;
}

json mlp_to_json(const MlpT<double>& net) {
  json j;
  j["w1"] = matrix_to_json(net.w1);
  j["b1"] = matrix_to_json(net.b1);
  j["w2"] = matrix_to_json(net.w2);
  j["b2"] = matrix_to_json(net.b2);
  j["out_act"] =
      net.out_act == Activation::kRelu ? "relu" : "identity";
  return j;
}

MlpT<double> mlp_from_json(const json& j) {
  MlpT<double> net;
  net.w1 = matrix_from_json(j.at("w1"));
  net.b1 = matrix_from_json(j.at("b1"));
  net.w2 = matrix_from_json(j.at("w2"));
  net.b2 = matrix_from_json(j.at("b2"));
  const std::string act = j.at("out_act").get<std::string>();
  if (act == "relu")
    net.out_act = Activation::kRelu;
  else if (act == "identity")
    net.out_act = Activation::kIdentity;
  else
    throw IoError("checkpoint: unknown activation " + act);
  return net;
}

json header(const std::string& kind) {
  json j;
  j["magic"] = kCheckpointMagic;
  j["version"] = kCheckpointVersion;
  j["kind"] = kind;
  return j;
}

json parse_checked(const std::filesystem::path& path,
                   const std::string& expect_kind) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw IoError("checkpoint " + path.string() + ": " + e.what());
  }
  if (j.value("magic", "") != kCheckpointMagic)
    throw IoError("checkpoint " + path.string() + ": bad magic string");
  if (j.value("version", -1) != kCheckpointVersion)
    throw IoError("checkpoint " + path.string() + ": unsupported version");
  if (j.value("kind", "") != expect_kind)
    throw IoError("checkpoint " + path.string() + ": kind is '" +
                  j.value("kind", "") + "', expected '" + expect_kind + "'");
  return j;
}

}  // namespace

void save_checkpoint(const ModelCheckpoint& ckpt,
                     const std::filesystem::path& path) {
  json j = header("modelset");
  j["stage"] = ckpt.models.stage;
  j["d"] = static_cast<int>(ckpt.models.d);
  j["k"] = static_cast<int>(ckpt.models.k);
  j["noise_dim"] = static_cast<int>(ckpt.models.noise_dim);
  j["config_hash"] = ckpt.config_hash;
  j["precision"] = ckpt.precision;
  j["generator"] = mlp_to_json(ckpt.models.generator);
  j["seen_critic"] = mlp_to_json(ckpt.models.seen_critic);
  j["unseen_critic"] = mlp_to_json(ckpt.models.unseen_critic);
  j["decoder"] = mlp_to_json(ckpt.models.decoder);
  write_text_file(path, j.dump() + "\n");
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const json j = parse_checked(path, "modelset");
  ModelCheckpoint ckpt;
  try {
    ckpt.models.stage = j.at("stage").get<int>();
    ckpt.models.d = j.at("d").get<int>();
    ckpt.models.k = j.at("k").get<int>();
    ckpt.models.noise_dim = j.at("noise_dim").get<int>();
    ckpt.config_hash = j.at("config_hash").get<std::string>();
    ckpt.precision = j.value("precision", "f64");
    ckpt.models.generator = mlp_from_json(j.at("generator"));
    ckpt.models.seen_critic = mlp_from_json(j.at("seen_critic"));
    ckpt.models.unseen_critic = mlp_from_json(j.at("unseen_critic"));
    ckpt.models.decoder = mlp_from_json(j.at("decoder"));
  } catch (const json::exception& e) {
    throw IoError("checkpoint " + path.string() + ": " + e.what());
  }
  return ckpt;
}

void save_classifier(const SoftmaxClassifier& clf, const std::string& kind,
                     const std::filesystem::path& path) {
  json j = header("classifier");
  j["classifier_kind"] = kind;
  j["theta"] = matrix_to_json(clf.theta);
  j["bias"] = matrix_to_json(clf.bias);
  j["class_ids"] = clf.class_ids;
  write_text_file(path, j.dump() + "\n");
}

SoftmaxClassifier load_classifier(const std::filesystem::path& path,
                                  const std::string& expect_kind) {
  const json j = parse_checked(path, "classifier");
  if (j.value("classifier_kind", "") != expect_kind)
    throw IoError("checkpoint " + path.string() + ": classifier kind is '" +
                  j.value("classifier_kind", "") + "', expected '" +
                  expect_kind + "'");
  SoftmaxClassifier clf;
  try {
    clf.theta = matrix_from_json(j.at("theta"));
    clf.bias = matrix_from_json(j.at("bias"));
    clf.class_ids = j.at("class_ids").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw IoError("checkpoint " + path.string() + ": " + e.what());
  }
  return clf;
}

}  // namespace zslforge
