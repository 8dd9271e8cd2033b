#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdpauth/nn/tensor.hpp"
#include "cdpauth/ocsvm.hpp"
#include "cdpauth/oneclass.hpp"
#include "cdpauth/supervised.hpp"

namespace cdpauth::io {

inline constexpr char kCheckpointMagic[8] = {'C', 'D', 'P', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class CheckpointKind : std::uint32_t { classifier = 1, extractor = 2, ocsvm = 3 };

std::string_view to_string(CheckpointKind k);

/// Layout (little-endian): magic, u32 version, u32 kind, u64 length + metadata
/// JSON, u64 tensor count, then per tensor u64 length + name, u32 rank, u64
/// dims, raw doubles. Every real number lives in a tensor, so a round trip is
/// bit-exact; the metadata holds only strings and integers.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  CheckpointKind kind = CheckpointKind::classifier;
  std::string metadata = "{}";
  std::vector<std::pair<std::string, nn::Tensor>> tensors;

  const nn::Tensor* find(std::string_view name) const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError on bad magic, a version other than kCheckpointVersion,
/// or truncation.
Checkpoint decode_checkpoint(std::string_view bytes, std::string_view source = "checkpoint");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// "config_hash" entry of the metadata, empty when absent.
std::string checkpoint_config_hash(const Checkpoint& ckpt);

/// An OC-SVM together with the features it consumes.
struct OcSvmArtifact {
  OcSvmModel model;
  FeatureSetup setup = FeatureSetup::template_terms;
  DiscriminatorStatistic statistic = DiscriminatorStatistic::logit;

  friend bool operator==(const OcSvmArtifact&, const OcSvmArtifact&) = default;
};

Checkpoint classifier_checkpoint(const ClassifierModel& model, const std::string& config_hash);
Checkpoint extractor_checkpoint(const TrainedExtractor& extractor,
                                const std::string& config_hash);
Checkpoint ocsvm_checkpoint(const OcSvmArtifact& artifact, const std::string& config_hash);

/// Rebuild models; parameters are matched by name and shape-checked. Throw
/// FormatError for a kind mismatch, a missing tensor or a shape mismatch.
ClassifierModel classifier_from_checkpoint(const Checkpoint& ckpt);
TrainedExtractor extractor_from_checkpoint(const Checkpoint& ckpt);
OcSvmArtifact ocsvm_from_checkpoint(const Checkpoint& ckpt);

}  // namespace cdpauth::io
