#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ade/classifier.hpp"
#include "ade/document.hpp"
#include "ade/embeddings.hpp"
#include "ade/metrics.hpp"
#include "ade/ner.hpp"
#include "ade/relation.hpp"

namespace ade {

enum class Task { kClassify, kNer, kRe };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

struct ExperimentConfig {
  ClassifierConfig classifier;
  NerConfig ner;
  ReConfig re;
  std::size_t k = 10;
  std::uint64_t seed = 42;
  double dev_ratio = 0.1;
  std::vector<MatchMode> modes{MatchMode::kStrict, MatchMode::kRelax};  // entity tasks only
  std::size_t workers = 1;  // folds trained concurrently

  // Config of the given task plus the experiment settings.
  nlohmann::json to_json(Task task) const;
};

/// k-fold cross-validation: each fold trains on its train split (dev split
/// used only for checkpoint selection) and is scored on its test split.
/// Returns per-fold scores and mean / population stdev per block; training
/// errors are rethrown as TrainingError naming the fold.
nlohmann::json run_cv_experiment(Task task, std::span<const Document> corpus,
                                 const EmbeddingStore& store, const ExperimentConfig& config);

// Two rows (macro, micro) per score block.
std::string cv_report_csv(const nlohmann::json& report);

// Labeled candidates over the gold spans of every document.
std::vector<RelationCandidate> corpus_candidates(std::span<const Document> docs);

struct TimingReport {
  Task task = Task::kNer;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t epochs = 0;
  double train_seconds = 0.0;
  double infer_seconds = 0.0;
  double f1 = 0.0;  // macro; strict matching for entities
  double f1_micro = 0.0;
  std::string hardware;

  nlohmann::json to_json() const;
};

/// Trains for exactly the configured epoch count, then runs one inference
/// pass over `test` (the training docs when empty).
TimingReport benchmark_timing(Task task, std::span<const Document> train,
                              std::span<const Document> test, const EmbeddingStore& store,
                              const ExperimentConfig& config);

// Wall-clock seconds of one inference pass.
double time_inference(const NerModel& model, std::span<const Document> docs,
                      const EmbeddingStore& store);
double time_inference(const ClassifierModel& model, std::span<const Document> docs,
                      const EmbeddingStore& store);
double time_inference(const ReModel& model, std::span<const RelationCandidate> candidates,
                      const EmbeddingStore& store);

// CPU model, logical core count and memory size.
std::string hardware_descriptor();

}  // namespace ade
