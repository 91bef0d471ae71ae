#include "ade/layers.hpp"

#include <cmath>

namespace ade {

template <typename T>
LstmState<T> zero_state(std::size_t hidden) {
  return {BasicTensor<T>::zeros({1, hidden}), BasicTensor<T>::zeros({1, hidden})};
}

template <typename T>
BasicTensor<T> glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                              std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<T> data(numel(shape));
  for (auto& v : data) v = static_cast<T>(dist(rng));
  return BasicTensor<T>(std::move(shape), std::move(data), true);
}

template <typename T>
LstmWeights<T> make_lstm_weights(std::size_t input_dim, std::size_t hidden_dim,
                                 std::mt19937_64& rng) {
  if (hidden_dim == 0) throw ConfigError("LSTM state size must be positive");
  if (input_dim == 0) throw ConfigError("LSTM input size must be positive");
  const std::size_t gates = 4 * hidden_dim;
  LstmWeights<T> w{glorot_uniform<T>({input_dim, gates}, input_dim, gates, rng),
                   glorot_uniform<T>({hidden_dim, gates}, hidden_dim, gates, rng),
                   BasicTensor<T>::zeros({gates}, true)};
  auto b = w.bias.mutable_data();
  for (std::size_t j = hidden_dim; j < 2 * hidden_dim; ++j) b[j] = T(1);
  return w;
}

template <typename T>
LstmWeights<T> zero_lstm_weights(std::size_t input_dim, std::size_t hidden_dim) {
  if (hidden_dim == 0) throw ConfigError("LSTM state size must be positive");
  const std::size_t gates = 4 * hidden_dim;
  return {BasicTensor<T>::zeros({input_dim, gates}, true),
          BasicTensor<T>::zeros({hidden_dim, gates}, true), BasicTensor<T>::zeros({gates}, true)};
}

namespace {

// Gate pre-activations already include x·W_input + bias.
template <typename T>
LstmState<T> lstm_cell(const BasicTensor<T>& input_part, const LstmState<T>& state,
                       const LstmWeights<T>& weights) {
  const std::size_t H = weights.hidden_dim();
  auto gates = add(input_part, matmul(state.h, weights.w_hidden));
  auto i = sigmoid(slice_cols(gates, 0, H));
  auto f = sigmoid(slice_cols(gates, H, 2 * H));
  auto g = tanh(slice_cols(gates, 2 * H, 3 * H));
  auto o = sigmoid(slice_cols(gates, 3 * H, 4 * H));
  auto c = add(mul(f, state.c), mul(i, g));
  auto h = mul(o, tanh(c));
  return {h, c};
}

}  // namespace

template <typename T>
LstmState<T> lstm_step(const BasicTensor<T>& x, const LstmState<T>& state,
                       const LstmWeights<T>& weights) {
  const std::size_t D = weights.input_dim(), H = weights.hidden_dim();
  if (x.size() != D || state.h.size() != H || state.c.size() != H) {
    throw DimensionError("lstm_step: input " + shape_str(x.shape()) + " / state " +
                         shape_str(state.h.shape()) + " inconsistent with weights " +
                         shape_str(weights.w_input.shape()));
  }
  if (!x.all_finite()) throw NumericError("lstm_step: non-finite input");
  auto x_row = x.rank() == 1 ? reshape(x, {1, D}) : x;
  auto input_part = add_bias(matmul(x_row, weights.w_input), weights.bias);
  return lstm_cell(input_part, state, weights);
}

template <typename T>
BasicTensor<T> lstm_sequence(const BasicTensor<T>& seq, const LstmWeights<T>& weights,
                             bool reverse) {
  const std::size_t L = seq.rows();
  if (seq.cols() != weights.input_dim()) {
    throw DimensionError("lstm: sequence " + shape_str(seq.shape()) + " does not match weights " +
                         shape_str(weights.w_input.shape()));
  }
  if (!seq.all_finite()) throw NumericError("lstm: non-finite input");
  // Input projections for every step at once.
  auto projected = add_bias(matmul(seq, weights.w_input), weights.bias);
  auto state = zero_state<T>(weights.hidden_dim());
  std::vector<BasicTensor<T>> outputs(L);
  for (std::size_t k = 0; k < L; ++k) {
    const std::size_t t = reverse ? L - 1 - k : k;
    state = lstm_cell(row(projected, t), state, weights);
    outputs[t] = state.h;
  }
  return concat_rows<T>(outputs);
}

template <typename T>
BasicTensor<T> bilstm(const BasicTensor<T>& seq, const LstmWeights<T>& forward,
                      const LstmWeights<T>& backward) {
  if (seq.rows() == 0) throw EmptySequenceError("bilstm: empty sequence");
  std::vector<BasicTensor<T>> halves{lstm_sequence(seq, forward, false),
                                     lstm_sequence(seq, backward, true)};
  return concat_cols<T>(halves);
}

template <typename T>
DenseLayer<T> make_dense(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  return {glorot_uniform<T>({in, out}, in, out, rng), BasicTensor<T>::zeros({out}, true)};
}

#define ADE_INSTANTIATE_LAYERS(T)                                                               \
  template LstmState<T> zero_state(std::size_t);                                                \
  template BasicTensor<T> glorot_uniform(Shape, std::size_t, std::size_t, std::mt19937_64&);    \
  template LstmWeights<T> make_lstm_weights(std::size_t, std::size_t, std::mt19937_64&);        \
  template LstmWeights<T> zero_lstm_weights(std::size_t, std::size_t);                          \
  template LstmState<T> lstm_step(const BasicTensor<T>&, const LstmState<T>&,                   \
                                  const LstmWeights<T>&);                                       \
  template BasicTensor<T> lstm_sequence(const BasicTensor<T>&, const LstmWeights<T>&, bool);    \
  template BasicTensor<T> bilstm(const BasicTensor<T>&, const LstmWeights<T>&,                  \
                                 const LstmWeights<T>&);                                        \
  template DenseLayer<T> make_dense(std::size_t, std::size_t, std::mt19937_64&);

ADE_INSTANTIATE_LAYERS(float)
ADE_INSTANTIATE_LAYERS(double)

}  // namespace ade
