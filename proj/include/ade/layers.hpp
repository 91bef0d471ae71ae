#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ade/ops.hpp"

namespace ade {

// Weight matrices are stored input-major: x[1×D] · w_input[D×4H].
// Gate blocks along the 4H axis are ordered input, forget, candidate, output.
template <typename T>
struct LstmWeights {
  BasicTensor<T> w_input;   // [D×4H]
  BasicTensor<T> w_hidden;  // [H×4H]
  BasicTensor<T> bias;      // [4H]

  std::size_t input_dim() const { return w_input.rows(); }
  std::size_t hidden_dim() const { return w_hidden.rows(); }

  template <typename U>
  LstmWeights<U> cast() const {
    return {w_input.template cast<U>(), w_hidden.template cast<U>(), bias.template cast<U>()};
  }
};

template <typename T>
struct LstmState {
  BasicTensor<T> h;  // [1×H]
  BasicTensor<T> c;  // [1×H]
};

template <typename T>
LstmState<T> zero_state(std::size_t hidden);

// Glorot-uniform weights, zero bias except forget gate bias 1.
// Throws ConfigError for a zero state size.
template <typename T>
LstmWeights<T> make_lstm_weights(std::size_t input_dim, std::size_t hidden_dim,
                                 std::mt19937_64& rng);

template <typename T>
LstmWeights<T> zero_lstm_weights(std::size_t input_dim, std::size_t hidden_dim);

// One LSTM time step. x is [D] or [1×D]. Non-finite input raises NumericError.
template <typename T>
LstmState<T> lstm_step(const BasicTensor<T>& x, const LstmState<T>& state,
                       const LstmWeights<T>& weights);

// Runs one direction over seq[L×D] and returns the hidden states [L×H] in
// sequence order.
template <typename T>
BasicTensor<T> lstm_sequence(const BasicTensor<T>& seq, const LstmWeights<T>& weights,
                             bool reverse);

// Forward pass left-to-right concatenated with a backward pass right-to-left,
// [L×D] to [L×2H].
template <typename T>
BasicTensor<T> bilstm(const BasicTensor<T>& seq, const LstmWeights<T>& forward,
                      const LstmWeights<T>& backward);

template <typename T>
BasicTensor<T> glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                              std::mt19937_64& rng);

template <typename T>
struct DenseLayer {
  BasicTensor<T> weight;  // [in×out]
  BasicTensor<T> bias;    // [out]
};

template <typename T>
DenseLayer<T> make_dense(std::size_t in, std::size_t out, std::mt19937_64& rng);

}  // namespace ade
