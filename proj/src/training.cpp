#include "ade/training.hpp"

#include <algorithm>
#include <numeric>

namespace ade {

nlohmann::json to_json(const EpochRecord& r) {
  nlohmann::json j{{"epoch", r.epoch}, {"lr", r.learning_rate}, {"train_loss", r.train_loss}};
  j["dev_loss"] = r.dev_loss ? nlohmann::json(*r.dev_loss) : nlohmann::json();
  j["dev_score"] = r.dev_score ? nlohmann::json(*r.dev_score) : nlohmann::json();
  return j;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : epochs) list.push_back(ade::to_json(e));
  return {{"epochs", list}, {"best_epoch", best_epoch}, {"warnings", warnings}};
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

}  // namespace ade
