#include "ade/optim.hpp"

#include <cmath>

namespace ade {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (!(decay_po >= 0.0) || !std::isfinite(decay_po)) {
    throw ConfigError("lr_decay_po must be non-negative");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must be in [0, 1)");
  }
}

void zero_grads(std::span<NamedParam> params) {
  for (auto& p : params) p.tensor.zero_grad();
}

void Adam::step(std::span<NamedParam> params, const TrainConfig& config, std::size_t epoch) {
  for (const auto& p : params) {
    for (float g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient for parameter '" + p.name + "'");
    }
  }
  ++t_;
  const double lr = config.effective_lr(epoch);
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (auto& p : params) {
    auto values = p.tensor.mutable_data();
    auto grad = p.tensor.grad();
    auto& mom = state_[p.name];
    if (mom.m.size() != values.size()) {
      mom.m.assign(values.size(), 0.0);
      mom.v.assign(values.size(), 0.0);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad.empty() ? 0.0 : static_cast<double>(grad[i]);
      mom.m[i] = kBeta1 * mom.m[i] + (1.0 - kBeta1) * g;
      mom.v[i] = kBeta2 * mom.v[i] + (1.0 - kBeta2) * g * g;
      const double mhat = mom.m[i] / c1;
      const double vhat = mom.v[i] / c2;
      values[i] = static_cast<float>(static_cast<double>(values[i]) -
                                     lr * mhat / (std::sqrt(vhat) + kEpsilon));
    }
  }
}

}  // namespace ade
