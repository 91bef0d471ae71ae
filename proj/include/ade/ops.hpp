#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ade/tensor.hpp"

namespace ade {

enum class Mode { kTrain, kInfer };

enum class Activation { kLinear, kLeakyRelu, kSoftmax };

inline constexpr double kDefaultLeakySlope = 0.01;

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);

// x[m×n] + bias[n], bias broadcast over rows.
template <typename T>
BasicTensor<T> add_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias);

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> leaky_relu(const BasicTensor<T>& x, double slope = kDefaultLeakySlope);

// Row-wise softmax; max-shifted so finite inputs give finite outputs.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape);

// Single row of a matrix as a 1×n tensor.
template <typename T>
BasicTensor<T> row(const BasicTensor<T>& x, std::size_t index);

// Columns [begin, end) of a matrix.
template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& x, std::size_t begin, std::size_t end);

// Horizontal concatenation; every part must have the same row count.
template <typename T>
BasicTensor<T> concat_cols(std::span<const BasicTensor<T>> parts);

// Vertical stacking; every part must have the same column count.
template <typename T>
BasicTensor<T> concat_rows(std::span<const BasicTensor<T>> parts);

// Rows of table[V×E] selected by index, giving [n×E].
template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& table, std::span<const std::size_t> indices);

/// Stride-1 convolution over a sequence with zero "same" padding.
/// input is [L×C_in], filters is [K×C_in×F] with K odd; result is [L×F].
template <typename T>
BasicTensor<T> conv1d(const BasicTensor<T>& input, const BasicTensor<T>& filters);

// Per-column maximum of [L×F], giving [F]. Ties send the gradient to the
// earliest row.
template <typename T>
BasicTensor<T> max_pool_over_time(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                     const BasicTensor<T>& bias, Activation activation,
                     double leaky_slope = kDefaultLeakySlope);

template <typename T>
struct BatchNormParams {
  BasicTensor<T> gamma;         // [D]
  BasicTensor<T> beta;          // [D]
  BasicTensor<T> running_mean;  // [D], no gradient
  BasicTensor<T> running_var;   // [D], no gradient
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Train mode normalizes with the (biased) batch statistics and folds them
/// into the running statistics; infer mode uses the running statistics.
template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, BatchNormParams<T>& params, Mode mode,
                          double eps = kBatchNormEps, double momentum = kBatchNormMomentum);

template <typename T>
BatchNormParams<T> make_batch_norm(std::size_t dim);

/// Inverted dropout. Infer mode and rate 0 return the input unchanged.
template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& x, double rate, Mode mode, std::mt19937_64& rng);

/// Mean over rows of -log softmax(logits)[label]. Optional per-class weights
/// scale each row's term; the mean is then over the summed weights.
template <typename T>
BasicTensor<T> softmax_cross_entropy(const BasicTensor<T>& logits,
                                     std::span<const std::size_t> labels,
                                     std::span<const double> class_weights = {});

}  // namespace ade
