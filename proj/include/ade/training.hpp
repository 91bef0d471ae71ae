#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

namespace ade {

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  std::optional<double> dev_loss;
  std::optional<double> dev_score;  // stage-specific selection metric
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

nlohmann::json to_json(const EpochRecord& r);

// Shuffled index batches for one epoch. A trailing batch of one example is
// folded into the previous batch so batch-norm always sees two or more rows.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   std::mt19937_64& rng);

}  // namespace ade
