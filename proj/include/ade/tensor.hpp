#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ade/error.hpp"

namespace ade {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t numel(const Shape& shape);

// Graph recording is on by default. Inference paths hold a NoGradGuard so
// that shared parameters are never touched by concurrent readers.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool on);
};

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Dense row-major array with reverse-mode gradient support.
///
/// A BasicTensor is a cheap handle; copies share the same storage. Results of
/// differentiable ops keep their inputs alive until the graph is dropped.
/// Rank-1 tensors act as 1×n row vectors wherever an op expects a matrix.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  struct Node {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until a gradient reaches this node
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    // Gradient buffer of this node, allocated as zeros on first access.
    std::vector<T>& grad_buffer() {
      if (grad.empty()) grad.assign(data.size(), T(0));
      return grad;
    }
  };

  BasicTensor();
  BasicTensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor full(Shape shape, T value, bool requires_grad = false);
  static BasicTensor scalar(T value, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const T> data() const { return node_->data; }
  // Direct write access, intended for optimizers and initializers on leaves.
  std::span<T> mutable_data() { return node_->data; }
  T item() const;
  T operator[](std::size_t i) const { return node_->data[i]; }
  T at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad.clear(); }

  // Seeds d(self)/d(self) = 1 and propagates to every reachable leaf.
  // The tensor must hold exactly one value.
  void backward();

  // Fresh leaf with a copy of the values and no history.
  BasicTensor detach() const;

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(node_->data.begin(), node_->data.end());
    return BasicTensor<U>(node_->shape, std::move(out), node_->requires_grad);
  }

  bool all_finite() const;
  bool same_storage(const BasicTensor& other) const { return node_ == other.node_; }

  // Builds a result node. The backward function is attached only when grad
  // mode is on and at least one parent requires a gradient.
  static BasicTensor make_result(Shape shape, std::vector<T> data,
                                 std::vector<BasicTensor> parents,
                                 std::function<void(Node&)> backward_fn);

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit BasicTensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace ade
