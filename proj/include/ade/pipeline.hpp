#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ade/classifier.hpp"
#include "ade/document.hpp"
#include "ade/embeddings.hpp"
#include "ade/ner.hpp"
#include "ade/relation.hpp"

namespace ade {

// Text vectors or the binary cache, chosen by the file's leading bytes.
EmbeddingStore load_embeddings(const std::filesystem::path& path);

/// Paths of the stage bundles and vectors making up one pipeline. Relative
/// paths are resolved against the manifest's directory.
struct PipelineManifest {
  std::filesystem::path embeddings;
  std::optional<std::filesystem::path> classifier;
  std::filesystem::path ner;
  std::filesystem::path re;

  nlohmann::json to_json() const;
  static PipelineManifest from_json(const nlohmann::json& j, const std::filesystem::path& base);
  void save(const std::filesystem::path& path) const;
  static PipelineManifest load(const std::filesystem::path& path);
};

/// Fixed stage order: classify -> gate -> ner -> candidate pairs -> re.
/// Without a classifier every document passes the gate.
struct Pipeline {
  std::shared_ptr<const EmbeddingStore> store;
  std::optional<ClassifierModel> classifier;
  NerModel ner;
  ReModel re;

  // Throws ConfigError when any stage disagrees with the store's dim.
  void validate() const;
  static Pipeline load(const PipelineManifest& manifest);
};

struct EntityOutput {
  std::string text;
  EntitySpan span;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

struct RelationOutput {
  std::size_t ade = 0;   // index into entities
  std::size_t drug = 0;  // index into entities
  RelationLabel label = RelationLabel::kNegative;
  double probability = 0.0;  // of the predicted label
};

struct PipelineOutput {
  std::string doc_id;
  std::optional<DocClass> doc_class;
  std::optional<double> class_probability;
  std::vector<EntityOutput> entities;
  std::vector<RelationOutput> relations;

  nlohmann::json to_json() const;
};

PipelineOutput run_pipeline(const Pipeline& pipeline, const Document& doc);

}  // namespace ade
