#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ade/tensor.hpp"

namespace ade {

inline constexpr std::uint32_t kBundleVersion = 1;

enum class StageKind { kClassifier, kNer, kRe };

std::string_view to_string(StageKind kind);
// Throws FormatError for an unknown stage name.
StageKind parse_stage_kind(std::string_view name);

/// One persisted pipeline stage: a JSON manifest plus named float tensors.
///
/// File layout (little-endian):
///   "ADEB" | u32 version | u32 len + manifest JSON | u32 n_tensors |
///   per tensor: u32 len + name, u32 rank, u64 dims[rank], float32 data |
///   u32 crc32 of everything before it
struct Bundle {
  StageKind kind = StageKind::kClassifier;
  nlohmann::json manifest = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor>> tensors;

  // Throws FormatError when the name is missing.
  const Tensor& tensor(std::string_view name) const;
  void add(std::string name, const Tensor& t);
  std::size_t embedding_dim() const;
};

// Fills format_version, stage and created metadata unless already present.
nlohmann::json bundle_manifest(StageKind kind, std::size_t embedding_dim,
                               nlohmann::json config, nlohmann::json labels);

std::string serialize_bundle(const Bundle& bundle);
// Throws CorruptionError on checksum or truncation failures and FormatError
// on version or stage-kind problems.
Bundle parse_bundle(std::string_view bytes);

void save_bundle(const Bundle& bundle, const std::filesystem::path& path);
Bundle load_bundle(const std::filesystem::path& path);

// Throws ConfigError unless the bundle was built for vectors of `store_dim`.
void check_bundle_dim(const Bundle& bundle, std::size_t store_dim);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace ade
