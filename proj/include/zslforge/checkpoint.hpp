#pragma once

#include <filesystem>
#include <string>

#include "zslforge/classify.hpp"
#include "zslforge/models.hpp"

namespace zslforge {

inline constexpr const char* kCheckpointMagic = "zslforge-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct ModelCheckpoint {
  ModelSet models;
  std::string config_hash;
  std::string precision = "f64";  // scalar type the run was trained in
};

void save_checkpoint(const ModelCheckpoint& ckpt,
                     const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

void save_classifier(const SoftmaxClassifier& clf, const std::string& kind,
                     const std::filesystem::path& path);
SoftmaxClassifier load_classifier(const std::filesystem::path& path,
                                  const std::string& expect_kind);

}  // namespace zslforge
