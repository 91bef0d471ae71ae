#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ade/tensor.hpp"

namespace ade {

struct TrainConfig {
  double learning_rate = 0.001;
  double decay_po = 0.005;
  std::size_t batch_size = 8;
  std::size_t epochs = 30;
  double dropout_rate = 0.5;
  std::uint64_t seed = 42;

  // lr / (1 + po * epoch), epochs counted from 0.
  double effective_lr(std::size_t epoch) const {
    return learning_rate / (1.0 + decay_po * static_cast<double>(epoch));
  }

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

struct NamedParam {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

void zero_grads(std::span<NamedParam> params);

class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  // Applies one update with the epoch's effective learning rate. Parameters
  // that received no gradient are treated as having a zero gradient.
  // Throws NumericError naming the parameter when a gradient is not finite;
  // no parameter is modified in that case.
  void step(std::span<NamedParam> params, const TrainConfig& config, std::size_t epoch);

  std::size_t steps() const { return t_; }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  std::map<std::string, Moments> state_;
  std::size_t t_ = 0;
};

}  // namespace ade
