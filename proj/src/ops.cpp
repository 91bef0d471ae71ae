#include "ade/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ade {

namespace {

template <typename T>
using Node = typename BasicTensor<T>::Node;

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

// Gradient buffer of parent i, or nullptr when that parent takes no gradient.
template <typename N>
auto parent_grad(N& self, std::size_t i) -> decltype(&self.grad) {
  auto& p = *self.parents[i];
  return p.requires_grad ? &p.grad_buffer() : nullptr;
}

template <typename T>
BasicTensor<T> unary_map(const BasicTensor<T>& x, T (*fwd)(T), T (*dfdx_from_y)(T, T)) {
  auto src = x.data();
  std::vector<T> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = fwd(src[i]);
  return BasicTensor<T>::make_result(x.shape(), std::move(out), {x}, [dfdx_from_y](Node<T>& self) {
    auto* g = parent_grad(self, 0);
    if (!g) return;
    const auto& in = self.parents[0]->data;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      (*g)[i] += self.grad[i] * dfdx_from_y(in[i], self.data[i]);
    }
  });
}

}  // namespace

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (a.rank() > 2 || b.rank() > 2 || k != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + shape_str(a.shape()) + " by " +
                         shape_str(b.shape()));
  }
  auto A = a.data();
  auto B = b.data();
  std::vector<T> out(m * n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = A[i * k + p];
      if (av == T(0)) continue;
      const T* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return BasicTensor<T>::make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node<T>& self) {
    const auto& A = self.parents[0]->data;
    const auto& B = self.parents[1]->data;
    const auto& G = self.grad;
    if (auto* ga = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          T acc = 0;
          const T* brow = B.data() + p * n;
          const T* grow = G.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          (*ga)[i * k + p] += acc;
        }
      }
    }
    if (auto* gb = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        const T* grow = G.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const T av = A[i * k + p];
          if (av == T(0)) continue;
          T* gbrow = gb->data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "add");
  auto A = a.data();
  auto B = b.data();
  std::vector<T> out(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] + B[i];
  return BasicTensor<T>::make_result(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (auto* g = parent_grad(self, p)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
      }
    }
  });
}

template <typename T>
BasicTensor<T> add_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias) {
  const std::size_t m = x.rows(), n = x.cols();
  if (x.rank() > 2 || bias.size() != n) {
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " does not fit " +
                         shape_str(x.shape()));
  }
  auto X = x.data();
  auto Bv = bias.data();
  std::vector<T> out(X.size());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = X[i * n + j] + Bv[j];
  }
  return BasicTensor<T>::make_result(x.shape(), std::move(out), {x, bias}, [m, n](Node<T>& self) {
    if (auto* gx = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*gx)[i] += self.grad[i];
    }
    if (auto* gb = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) (*gb)[j] += self.grad[i * n + j];
      }
    }
  });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "mul");
  auto A = a.data();
  auto B = b.data();
  std::vector<T> out(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] * B[i];
  return BasicTensor<T>::make_result(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    const auto& A = self.parents[0]->data;
    const auto& B = self.parents[1]->data;
    if (auto* ga = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i] * B[i];
    }
    if (auto* gb = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*gb)[i] += self.grad[i] * A[i];
    }
  });
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
  return unary_map<T>(
      x,
      [](T v) -> T {
        if (v >= 0) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) -> T { return y * (T(1) - y); });
}

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x) {
  return unary_map<T>(
      x, [](T v) -> T { return std::tanh(v); }, [](T, T y) -> T { return T(1) - y * y; });
}

template <typename T>
BasicTensor<T> leaky_relu(const BasicTensor<T>& x, double slope) {
  const T s = static_cast<T>(slope);
  auto src = x.data();
  std::vector<T> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = src[i] > 0 ? src[i] : s * src[i];
  return BasicTensor<T>::make_result(x.shape(), std::move(out), {x}, [s](Node<T>& self) {
    auto* g = parent_grad(self, 0);
    if (!g) return;
    const auto& in = self.parents[0]->data;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      (*g)[i] += self.grad[i] * (in[i] > 0 ? T(1) : s);
    }
  });
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& x) {
  const std::size_t m = x.rows(), n = x.cols();
  auto X = x.data();
  std::vector<T> out(X.size());
  for (std::size_t i = 0; i < m; ++i) {
    const T* in = X.data() + i * n;
    T* o = out.data() + i * n;
    const T mx = *std::max_element(in, in + n);
    T z = 0;
    for (std::size_t j = 0; j < n; ++j) z += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < n; ++j) o[j] /= z;
  }
  return BasicTensor<T>::make_result(x.shape(), std::move(out), {x}, [m, n](Node<T>& self) {
    auto* g = parent_grad(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < m; ++i) {
      const T* y = self.data.data() + i * n;
      const T* gy = self.grad.data() + i * n;
      T dot = 0;
      for (std::size_t j = 0; j < n; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) (*g)[i * n + j] += y[j] * (gy[j] - dot);
    }
  });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v;
  return BasicTensor<T>::make_result({1}, {total}, {x}, [](Node<T>& self) {
    if (auto* g = parent_grad(self, 0)) {
      for (auto& v : *g) v += self.grad[0];
    }
  });
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return BasicTensor<T>::make_result(std::move(shape), std::move(out), {x}, [](Node<T>& self) {
    if (auto* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
    }
  });
}

template <typename T>
BasicTensor<T> row(const BasicTensor<T>& x, std::size_t index) {
  const std::size_t n = x.cols();
  if (index >= x.rows()) {
    throw DimensionError("row " + std::to_string(index) + " out of range for " +
                         shape_str(x.shape()));
  }
  auto src = x.data().subspan(index * n, n);
  std::vector<T> out(src.begin(), src.end());
  return BasicTensor<T>::make_result({1, n}, std::move(out), {x}, [index, n](Node<T>& self) {
    if (auto* g = parent_grad(self, 0)) {
      for (std::size_t j = 0; j < n; ++j) (*g)[index * n + j] += self.grad[j];
    }
  });
}

template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& x, std::size_t begin, std::size_t end) {
  const std::size_t m = x.rows(), n = x.cols();
  if (begin >= end || end > n) {
    throw DimensionError("slice_cols [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") out of range for " + shape_str(x.shape()));
  }
  const std::size_t w = end - begin;
  auto X = x.data();
  std::vector<T> out(m * w);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(X.data() + i * n + begin, w, out.data() + i * w);
  }
  return BasicTensor<T>::make_result({m, w}, std::move(out), {x}, [m, n, w, begin](Node<T>& self) {
    auto* g = parent_grad(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < w; ++j) (*g)[i * n + begin + j] += self.grad[i * w + j];
    }
  });
}

template <typename T>
BasicTensor<T> concat_cols(std::span<const BasicTensor<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != m || p.rank() > 2) {
      throw DimensionError("concat_cols: row mismatch " + shape_str(parts[0].shape()) + " vs " +
                           shape_str(p.shape()));
    }
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<T> out(m * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto src = parts[k].data();
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(src.data() + i * widths[k], widths[k], out.data() + i * total + offset);
    }
    offset += widths[k];
  }
  std::vector<BasicTensor<T>> parents(parts.begin(), parts.end());
  return BasicTensor<T>::make_result(
      {m, total}, std::move(out), std::move(parents), [m, total, widths](Node<T>& self) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < widths.size(); ++k) {
          if (auto* g = parent_grad(self, k)) {
            for (std::size_t i = 0; i < m; ++i) {
              for (std::size_t j = 0; j < widths[k]; ++j) {
                (*g)[i * widths[k] + j] += self.grad[i * total + offset + j];
              }
            }
          }
          offset += widths[k];
        }
      });
}

template <typename T>
BasicTensor<T> concat_rows(std::span<const BasicTensor<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  std::vector<T> out;
  for (const auto& p : parts) {
    if (p.cols() != n || p.rank() > 2) {
      throw DimensionError("concat_rows: column mismatch " + shape_str(parts[0].shape()) +
                           " vs " + shape_str(p.shape()));
    }
    m += p.rows();
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  std::vector<BasicTensor<T>> parents(parts.begin(), parts.end());
  return BasicTensor<T>::make_result({m, n}, std::move(out), std::move(parents),
                                     [](Node<T>& self) {
                                       std::size_t offset = 0;
                                       for (std::size_t k = 0; k < self.parents.size(); ++k) {
                                         const std::size_t len = self.parents[k]->data.size();
                                         if (auto* g = parent_grad(self, k)) {
                                           for (std::size_t i = 0; i < len; ++i) {
                                             (*g)[i] += self.grad[offset + i];
                                           }
                                         }
                                         offset += len;
                                       }
                                     });
}

template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& table, std::span<const std::size_t> indices) {
  const std::size_t v = table.rows(), e = table.cols();
  if (indices.empty()) throw DimensionError("gather_rows: no indices");
  std::vector<T> out(indices.size() * e);
  auto src = table.data();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= v) {
      throw DimensionError("gather_rows: index " + std::to_string(indices[r]) +
                           " out of range for " + shape_str(table.shape()));
    }
    std::copy_n(src.data() + indices[r] * e, e, out.data() + r * e);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return BasicTensor<T>::make_result({idx.size(), e}, std::move(out), {table},
                                     [idx, e](Node<T>& self) {
                                       auto* g = parent_grad(self, 0);
                                       if (!g) return;
                                       for (std::size_t r = 0; r < idx.size(); ++r) {
                                         for (std::size_t j = 0; j < e; ++j) {
                                           (*g)[idx[r] * e + j] += self.grad[r * e + j];
                                         }
                                       }
                                     });
}

template <typename T>
BasicTensor<T> conv1d(const BasicTensor<T>& input, const BasicTensor<T>& filters) {
  if (filters.rank() != 3) {
    throw DimensionError("conv1d: filters must be [K x C_in x F], got " +
                         shape_str(filters.shape()));
  }
  const std::size_t K = filters.shape()[0], C = filters.shape()[1], F = filters.shape()[2];
  if (K % 2 == 0) throw ConfigError("conv1d: kernel size must be odd, got " + std::to_string(K));
  if (input.rank() > 2 || input.cols() != C) {
    throw DimensionError("conv1d: input " + shape_str(input.shape()) + " does not match filters " +
                         shape_str(filters.shape()));
  }
  const std::size_t L = input.rows();
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(K / 2);
  auto X = input.data();
  auto W = filters.data();
  std::vector<T> out(L * F, T(0));
  for (std::size_t t = 0; t < L; ++t) {
    T* o = out.data() + t * F;
    for (std::size_t k = 0; k < K; ++k) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(k) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(L)) continue;
      for (std::size_t c = 0; c < C; ++c) {
        const T xv = X[static_cast<std::size_t>(src) * C + c];
        const T* w = W.data() + (k * C + c) * F;
        for (std::size_t f = 0; f < F; ++f) o[f] += xv * w[f];
      }
    }
  }
  return BasicTensor<T>::make_result(
      {L, F}, std::move(out), {input, filters}, [L, K, C, F, half](Node<T>& self) {
        const auto& X = self.parents[0]->data;
        const auto& W = self.parents[1]->data;
        auto* gx = parent_grad(self, 0);
        auto* gw = parent_grad(self, 1);
        for (std::size_t t = 0; t < L; ++t) {
          const T* go = self.grad.data() + t * F;
          for (std::size_t k = 0; k < K; ++k) {
            const std::ptrdiff_t src =
                static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(k) - half;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(L)) continue;
            const auto s = static_cast<std::size_t>(src);
            for (std::size_t c = 0; c < C; ++c) {
              const std::size_t wbase = (k * C + c) * F;
              if (gx) {
                T acc = 0;
                for (std::size_t f = 0; f < F; ++f) acc += go[f] * W[wbase + f];
                (*gx)[s * C + c] += acc;
              }
              if (gw) {
                const T xv = X[s * C + c];
                for (std::size_t f = 0; f < F; ++f) (*gw)[wbase + f] += xv * go[f];
              }
            }
          }
        }
      });
}

template <typename T>
BasicTensor<T> max_pool_over_time(const BasicTensor<T>& input) {
  const std::size_t L = input.rows(), F = input.cols();
  if (L == 0) throw EmptySequenceError("max_pool_over_time: empty sequence");
  auto X = input.data();
  std::vector<T> out(X.begin(), X.begin() + static_cast<std::ptrdiff_t>(F));
  std::vector<std::size_t> argmax(F, 0);
  for (std::size_t t = 1; t < L; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      if (X[t * F + f] > out[f]) {
        out[f] = X[t * F + f];
        argmax[f] = t;
      }
    }
  }
  return BasicTensor<T>::make_result({F}, std::move(out), {input}, [argmax, F](Node<T>& self) {
    if (auto* g = parent_grad(self, 0)) {
      for (std::size_t f = 0; f < F; ++f) (*g)[argmax[f] * F + f] += self.grad[f];
    }
  });
}

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                     const BasicTensor<T>& bias, Activation activation, double leaky_slope) {
  auto z = add_bias(matmul(x, weight), bias);
  switch (activation) {
    case Activation::kLinear:
      return z;
    case Activation::kLeakyRelu:
      return leaky_relu(z, leaky_slope);
    case Activation::kSoftmax:
      return softmax(z);
  }
  return z;
}

template <typename T>
BatchNormParams<T> make_batch_norm(std::size_t dim) {
  return {BasicTensor<T>::full({dim}, T(1), true), BasicTensor<T>::zeros({dim}, true),
          BasicTensor<T>::zeros({dim}), BasicTensor<T>::full({dim}, T(1))};
}

template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, BatchNormParams<T>& params, Mode mode,
                          double eps, double momentum) {
  const std::size_t B = x.rows(), D = x.cols();
  if (params.gamma.size() != D || params.beta.size() != D || params.running_mean.size() != D ||
      params.running_var.size() != D) {
    throw DimensionError("batch_norm: parameters do not match input " + shape_str(x.shape()));
  }
  auto X = x.data();
  auto gamma = params.gamma.data();
  auto beta = params.beta.data();

  if (mode == Mode::kInfer) {
    auto rm = params.running_mean.data();
    auto rv = params.running_var.data();
    std::vector<T> inv(D);
    for (std::size_t j = 0; j < D; ++j) inv[j] = T(1) / std::sqrt(rv[j] + static_cast<T>(eps));
    std::vector<T> out(X.size());
    for (std::size_t i = 0; i < B; ++i) {
      for (std::size_t j = 0; j < D; ++j) {
        out[i * D + j] = gamma[j] * (X[i * D + j] - rm[j]) * inv[j] + beta[j];
      }
    }
    return BasicTensor<T>::make_result(
        x.shape(), std::move(out), {x, params.gamma, params.beta},
        [B, D, inv, mean = std::vector<T>(rm.begin(), rm.end())](Node<T>& self) {
          const auto& X = self.parents[0]->data;
          const auto& gamma = self.parents[1]->data;
          auto* gx = parent_grad(self, 0);
          auto* gg = parent_grad(self, 1);
          auto* gb = parent_grad(self, 2);
          for (std::size_t i = 0; i < B; ++i) {
            for (std::size_t j = 0; j < D; ++j) {
              const T go = self.grad[i * D + j];
              if (gx) (*gx)[i * D + j] += go * gamma[j] * inv[j];
              if (gg) (*gg)[j] += go * (X[i * D + j] - mean[j]) * inv[j];
              if (gb) (*gb)[j] += go;
            }
          }
        });
  }

  if (B < 2) {
    throw BatchTooSmallError("batch_norm: train mode needs at least 2 rows, got " +
                             std::to_string(B));
  }
  std::vector<T> mean(D, T(0)), var(D, T(0));
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < D; ++j) mean[j] += X[i * D + j];
  }
  for (auto& m : mean) m /= static_cast<T>(B);
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < D; ++j) {
      const T d = X[i * D + j] - mean[j];
      var[j] += d * d;
    }
  }
  for (auto& v : var) v /= static_cast<T>(B);

  {
    auto rm = params.running_mean.mutable_data();
    auto rv = params.running_var.mutable_data();
    const T mom = static_cast<T>(momentum);
    for (std::size_t j = 0; j < D; ++j) {
      rm[j] = (T(1) - mom) * rm[j] + mom * mean[j];
      rv[j] = (T(1) - mom) * rv[j] + mom * var[j];
    }
  }

  std::vector<T> inv(D), xhat(X.size()), out(X.size());
  for (std::size_t j = 0; j < D; ++j) inv[j] = T(1) / std::sqrt(var[j] + static_cast<T>(eps));
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < D; ++j) {
      xhat[i * D + j] = (X[i * D + j] - mean[j]) * inv[j];
      out[i * D + j] = gamma[j] * xhat[i * D + j] + beta[j];
    }
  }
  return BasicTensor<T>::make_result(
      x.shape(), std::move(out), {x, params.gamma, params.beta},
      [B, D, inv, xhat](Node<T>& self) {
        const auto& gamma = self.parents[1]->data;
        auto* gx = parent_grad(self, 0);
        auto* gg = parent_grad(self, 1);
        auto* gb = parent_grad(self, 2);
        std::vector<T> sum_g(D, T(0)), sum_gx(D, T(0));
        for (std::size_t i = 0; i < B; ++i) {
          for (std::size_t j = 0; j < D; ++j) {
            sum_g[j] += self.grad[i * D + j];
            sum_gx[j] += self.grad[i * D + j] * xhat[i * D + j];
          }
        }
        if (gg) {
          for (std::size_t j = 0; j < D; ++j) (*gg)[j] += sum_gx[j];
        }
        if (gb) {
          for (std::size_t j = 0; j < D; ++j) (*gb)[j] += sum_g[j];
        }
        if (gx) {
          const T nb = static_cast<T>(B);
          for (std::size_t i = 0; i < B; ++i) {
            for (std::size_t j = 0; j < D; ++j) {
              const T g = self.grad[i * D + j];
              (*gx)[i * D + j] += gamma[j] * inv[j] / nb *
                                  (nb * g - sum_g[j] - xhat[i * D + j] * sum_gx[j]);
            }
          }
        }
      });
}

template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& x, double rate, Mode mode, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::kInfer || rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.size());
  for (auto& m : mask) m = keep(rng) ? scale : T(0);
  return mul(x, BasicTensor<T>(x.shape(), std::move(mask)));
}

template <typename T>
BasicTensor<T> softmax_cross_entropy(const BasicTensor<T>& logits,
                                     std::span<const std::size_t> labels,
                                     std::span<const double> class_weights) {
  const std::size_t B = logits.rows(), C = logits.cols();
  if (labels.size() != B) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for logits " + shape_str(logits.shape()));
  }
  if (!class_weights.empty() && class_weights.size() != C) {
    throw DimensionError("softmax_cross_entropy: class weight count does not match classes");
  }
  for (auto l : labels) {
    if (l >= C) {
      throw LabelError("label " + std::to_string(l) + " out of range for " + std::to_string(C) +
                       " classes");
    }
  }
  auto Z = logits.data();
  std::vector<T> probs(Z.size());
  std::vector<T> weights(B, T(1));
  T weight_total = 0;
  T loss = 0;
  for (std::size_t i = 0; i < B; ++i) {
    const T* z = Z.data() + i * C;
    T* p = probs.data() + i * C;
    const T mx = *std::max_element(z, z + C);
    T denom = 0;
    for (std::size_t j = 0; j < C; ++j) denom += (p[j] = std::exp(z[j] - mx));
    for (std::size_t j = 0; j < C; ++j) p[j] /= denom;
    if (!class_weights.empty()) weights[i] = static_cast<T>(class_weights[labels[i]]);
    weight_total += weights[i];
    loss += weights[i] * (std::log(denom) - (z[labels[i]] - mx));
  }
  if (weight_total <= T(0)) weight_total = T(1);
  loss /= weight_total;
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return BasicTensor<T>::make_result(
      {1}, {loss}, {logits},
      [B, C, probs = std::move(probs), weights = std::move(weights), weight_total,
       lab = std::move(lab)](Node<T>& self) {
        auto* g = parent_grad(self, 0);
        if (!g) return;
        const T scale = self.grad[0] / weight_total;
        for (std::size_t i = 0; i < B; ++i) {
          for (std::size_t j = 0; j < C; ++j) {
            const T target = j == lab[i] ? T(1) : T(0);
            (*g)[i * C + j] += scale * weights[i] * (probs[i * C + j] - target);
          }
        }
      });
}

#define ADE_INSTANTIATE_OPS(T)                                                                   \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                     \
  template BasicTensor<T> add_bias(const BasicTensor<T>&, const BasicTensor<T>&);                \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                     \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                        \
  template BasicTensor<T> tanh(const BasicTensor<T>&);                                           \
  template BasicTensor<T> leaky_relu(const BasicTensor<T>&, double);                             \
  template BasicTensor<T> softmax(const BasicTensor<T>&);                                        \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                            \
  template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                                 \
  template BasicTensor<T> row(const BasicTensor<T>&, std::size_t);                               \
  template BasicTensor<T> slice_cols(const BasicTensor<T>&, std::size_t, std::size_t);           \
  template BasicTensor<T> concat_cols(std::span<const BasicTensor<T>>);                          \
  template BasicTensor<T> concat_rows(std::span<const BasicTensor<T>>);                          \
  template BasicTensor<T> gather_rows(const BasicTensor<T>&, std::span<const std::size_t>);      \
  template BasicTensor<T> conv1d(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> max_pool_over_time(const BasicTensor<T>&);                             \
  template BasicTensor<T> dense(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                                const BasicTensor<T>&, Activation, double);                      \
  template BatchNormParams<T> make_batch_norm(std::size_t);                                      \
  template BasicTensor<T> batch_norm(const BasicTensor<T>&, BatchNormParams<T>&, Mode, double,   \
                                     double);                                                    \
  template BasicTensor<T> dropout(const BasicTensor<T>&, double, Mode, std::mt19937_64&);        \
  template BasicTensor<T> softmax_cross_entropy(const BasicTensor<T>&,                           \
                                                std::span<const std::size_t>,                    \
                                                std::span<const double>);

ADE_INSTANTIATE_OPS(float)
ADE_INSTANTIATE_OPS(double)

}  // namespace ade
