#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ade {

enum class OovPolicy { kZeros, kHashedBucket };

std::string_view to_string(OovPolicy policy);
OovPolicy parse_oov_policy(std::string_view name);

struct VectorLoadReport {
  std::size_t lines = 0;
  std::size_t duplicates = 0;
  bool had_header = false;
};

/// Pretrained word vectors held in one contiguous row-major matrix.
///
/// Lookup is total: exact match, then ASCII-lowercase match, then the OOV
/// policy. Under kHashedBucket an unknown token maps to one of `buckets`
/// pseudo-random vectors chosen by a hash of its lowercased text.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim, OovPolicy policy = OovPolicy::kZeros,
                          std::size_t buckets = 1024);

  // Whitespace-separated "token v1 ... vD" lines, optional "V D" header.
  // Duplicate tokens keep the first row.
  static EmbeddingStore load_text(const std::filesystem::path& path,
                                  std::optional<std::size_t> expected_dim = std::nullopt,
                                  VectorLoadReport* report = nullptr);
  static EmbeddingStore parse_text(std::string_view text,
                                   std::optional<std::size_t> expected_dim = std::nullopt,
                                   VectorLoadReport* report = nullptr);

  // Binary cache: magic, JSON manifest, vocabulary, little-endian float32 matrix.
  void save_binary(const std::filesystem::path& path) const;
  static EmbeddingStore load_binary(const std::filesystem::path& path);

  // Returns false (and keeps the existing row) when the token is present.
  bool add(std::string token, std::span<const float> vector);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  OovPolicy oov_policy() const { return policy_; }
  void set_oov_policy(OovPolicy policy) { policy_ = policy; }
  std::size_t buckets() const { return buckets_; }

  std::optional<std::size_t> index_of(std::string_view token) const;
  std::span<const float> row(std::size_t index) const;
  const std::string& token(std::size_t index) const { return tokens_[index]; }

  std::vector<float> lookup(std::string_view token) const;
  void lookup_into(std::string_view token, std::span<float> out) const;

  // Mean of the token vectors; zero vector for an empty sequence.
  std::vector<float> embed_tokens(std::span<const std::string> tokens) const;

 private:
  std::size_t dim_;
  OovPolicy policy_;
  std::size_t buckets_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> matrix_;
};

std::string ascii_lower(std::string_view s);

}  // namespace ade
