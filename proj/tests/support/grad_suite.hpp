#pragma once

// Random-shape gradient checks for every differentiable op. Each case draws
// its own shapes and values; the loss is a fixed random projection of the op
// output so that no output coordinate has a trivially zero gradient.

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ade/layers.hpp"
#include "ade/ops.hpp"
#include "support/gradcheck.hpp"

namespace ade::testing {

struct GradCase {
  std::string name;
  std::function<GradCheckResult(std::mt19937_64&)> run;
};

inline std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline Tensor64 random_tensor(std::mt19937_64& rng, Shape shape, double scale = 1.0) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return Tensor64(std::move(shape), std::move(v));
}

// Values bounded away from zero, for ops with a kink there.
inline Tensor64 off_zero_tensor(std::mt19937_64& rng, Shape shape) {
  auto t = random_tensor(rng, std::move(shape));
  for (auto& x : t.mutable_data()) x += x < 0 ? -0.05 : 0.05;
  return t;
}

// sum(out ⊙ R) with R drawn once, on first use, from the case's own stream.
class Projection {
 public:
  explicit Projection(std::uint64_t seed) : rng_(seed) {}
  Tensor64 operator()(const Tensor64& out) {
    if (!weights_) weights_ = random_tensor(rng_, out.shape());
    return sum(mul(out, *weights_));
  }

 private:
  std::mt19937_64 rng_;
  std::optional<Tensor64> weights_;
};

using Leaves = std::vector<std::pair<std::string, Tensor64>>;

inline GradCheckResult check_op(std::mt19937_64& rng, Leaves leaves,
                                const std::function<Tensor64()>& op) {
  auto project = std::make_shared<Projection>(rng());
  return check_gradients(std::move(leaves), [op, project] { return (*project)(op()); });
}

inline std::vector<GradCase> gradient_cases() {
  std::vector<GradCase> cases;
  auto add_case = [&](std::string name, std::function<GradCheckResult(std::mt19937_64&)> f) {
    cases.push_back({std::move(name), std::move(f)});
  };

  add_case("matmul", [](std::mt19937_64& rng) {
    const auto m = draw(rng, 1, 5), k = draw(rng, 1, 5), n = draw(rng, 1, 5);
    auto a = random_tensor(rng, {m, k});
    auto b = random_tensor(rng, {k, n});
    return check_op(rng, {{"a", a}, {"b", b}}, [=] { return matmul(a, b); });
  });
  add_case("add", [](std::mt19937_64& rng) {
    const Shape s{draw(rng, 1, 5), draw(rng, 1, 5)};
    auto a = random_tensor(rng, s);
    auto b = random_tensor(rng, s);
    return check_op(rng, {{"a", a}, {"b", b}}, [=] { return add(a, b); });
  });
  add_case("add_bias", [](std::mt19937_64& rng) {
    const auto m = draw(rng, 1, 5), n = draw(rng, 1, 5);
    auto x = random_tensor(rng, {m, n});
    auto b = random_tensor(rng, {n});
    return check_op(rng, {{"x", x}, {"bias", b}}, [=] { return add_bias(x, b); });
  });
  add_case("mul", [](std::mt19937_64& rng) {
    const Shape s{draw(rng, 1, 5), draw(rng, 1, 5)};
    auto a = random_tensor(rng, s);
    auto b = random_tensor(rng, s);
    return check_op(rng, {{"a", a}, {"b", b}}, [=] { return mul(a, b); });
  });
  add_case("sigmoid", [](std::mt19937_64& rng) {
    auto x = random_tensor(rng, {draw(rng, 1, 5), draw(rng, 1, 5)}, 2.0);
    return check_op(rng, {{"x", x}}, [=] { return sigmoid(x); });
  });
  add_case("tanh", [](std::mt19937_64& rng) {
    auto x = random_tensor(rng, {draw(rng, 1, 5), draw(rng, 1, 5)}, 2.0);
    return check_op(rng, {{"x", x}}, [=] { return tanh(x); });
  });
  add_case("leaky_relu", [](std::mt19937_64& rng) {
    auto x = off_zero_tensor(rng, {draw(rng, 1, 5), draw(rng, 1, 5)});
    const double slope = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
    return check_op(rng, {{"x", x}}, [=] { return leaky_relu(x, slope); });
  });
  add_case("softmax", [](std::mt19937_64& rng) {
    auto x = random_tensor(rng, {draw(rng, 1, 5), draw(rng, 2, 6)}, 2.0);
    return check_op(rng, {{"x", x}}, [=] { return softmax(x); });
  });
  add_case("sum", [](std::mt19937_64& rng) {
    auto x = random_tensor(rng, {draw(rng, 1, 5), draw(rng, 1, 5)});
    return check_op(rng, {{"x", x}}, [=] { return sum(x); });
  });
  add_case("reshape", [](std::mt19937_64& rng) {
    const auto m = draw(rng, 1, 4), n = draw(rng, 1, 4);
    auto x = random_tensor(rng, {m, n});
    return check_op(rng, {{"x", x}}, [=] { return reshape(x, {n, m}); });
  });
  add_case("row", [](std::mt19937_64& rng) {
    const auto m = draw(rng, 1, 5);
    auto x = random_tensor(rng, {m, draw(rng, 1, 5)});
    const auto i = draw(rng, 0, m - 1);
    return check_op(rng, {{"x", x}}, [=] { return row(x, i); });
  });
  add_case("slice_cols", [](std::mt19937_64& rng) {
    const auto n = draw(rng, 1, 6);
    auto x = random_tensor(rng, {draw(rng, 1, 4), n});
    const auto b = draw(rng, 0, n - 1);
    const auto e = draw(rng, b + 1, n);
    return check_op(rng, {{"x", x}}, [=] { return slice_cols(x, b, e); });
  });
  add_case("concat_cols", [](std::mt19937_64& rng) {
    const auto m = draw(rng, 1, 4);
    std::vector<Tensor64> parts;
    Leaves leaves;
    for (std::size_t i = 0, k = draw(rng, 1, 3); i < k; ++i) {
      parts.push_back(random_tensor(rng, {m, draw(rng, 1, 4)}));
      leaves.push_back({"part" + std::to_string(i), parts.back()});
    }
    return check_op(rng, leaves, [=] { return concat_cols<double>(parts); });
  });
  add_case("concat_rows", [](std::mt19937_64& rng) {
    const auto n = draw(rng, 1, 4);
    std::vector<Tensor64> parts;
    Leaves leaves;
    for (std::size_t i = 0, k = draw(rng, 1, 3); i < k; ++i) {
      parts.push_back(random_tensor(rng, {draw(rng, 1, 4), n}));
      leaves.push_back({"part" + std::to_string(i), parts.back()});
    }
    return check_op(rng, leaves, [=] { return concat_rows<double>(parts); });
  });
  add_case("gather_rows", [](std::mt19937_64& rng) {
    const auto v = draw(rng, 1, 6);
    auto table = random_tensor(rng, {v, draw(rng, 1, 4)});
    std::vector<std::size_t> idx(draw(rng, 1, 6));
    for (auto& i : idx) i = draw(rng, 0, v - 1);  // repeats accumulate
    return check_op(rng, {{"table", table}}, [=] { return gather_rows<double>(table, idx); });
  });
  add_case("conv1d", [](std::mt19937_64& rng) {
    const auto l = draw(rng, 1, 6), c = draw(rng, 1, 3), f = draw(rng, 1, 3);
    const auto k = 2 * draw(rng, 0, 2) + 1;
    auto x = random_tensor(rng, {l, c});
    auto w = random_tensor(rng, {k, c, f});
    return check_op(rng, {{"input", x}, {"filters", w}}, [=] { return conv1d(x, w); });
  });
  add_case("max_pool_over_time", [](std::mt19937_64& rng) {
    // Distinct values per column, spaced well beyond the step size.
    const auto l = draw(rng, 1, 6), f = draw(rng, 1, 4);
    std::vector<double> v(l * f);
    for (std::size_t j = 0; j < f; ++j) {
      std::vector<double> col(l);
      for (std::size_t i = 0; i < l; ++i) col[i] = 0.1 * static_cast<double>(i);
      std::shuffle(col.begin(), col.end(), rng);
      for (std::size_t i = 0; i < l; ++i) v[i * f + j] = col[i];
    }
    Tensor64 x({l, f}, v);
    return check_op(rng, {{"input", x}}, [=] { return max_pool_over_time(x); });
  });
  for (auto act : {Activation::kLinear, Activation::kLeakyRelu, Activation::kSoftmax}) {
    const std::string suffix = act == Activation::kLinear      ? "linear"
                               : act == Activation::kLeakyRelu ? "leaky_relu"
                                                               : "softmax";
    add_case("dense_" + suffix, [act](std::mt19937_64& rng) {
      const auto m = draw(rng, 1, 4), in = draw(rng, 1, 5), out = draw(rng, 1, 5);
      Tensor64 x, w, b;
      // Redraw until no pre-activation sits near the leaky kink.
      for (;;) {
        x = random_tensor(rng, {m, in});
        w = random_tensor(rng, {in, out});
        b = random_tensor(rng, {out});
        NoGradGuard guard;
        const auto z = add_bias(matmul(x, w), b);
        bool ok = true;
        for (auto v : z.data()) ok = ok && std::abs(v) > 0.02;
        if (ok || act != Activation::kLeakyRelu) break;
      }
      return check_op(rng, {{"x", x}, {"weight", w}, {"bias", b}},
                      [=] { return dense(x, w, b, act, 0.1); });
    });
  }
  add_case("batch_norm", [](std::mt19937_64& rng) {
    const auto m = draw(rng, 2, 6), d = draw(rng, 1, 4);
    auto x = random_tensor(rng, {m, d});
    auto params = std::make_shared<BatchNormParams<double>>(make_batch_norm<double>(d));
    params->gamma = random_tensor(rng, {d});
    params->beta = random_tensor(rng, {d});
    return check_op(rng, {{"x", x}, {"gamma", params->gamma}, {"beta", params->beta}},
                    [=] { return batch_norm(x, *params, Mode::kTrain); });
  });
  add_case("dropout", [](std::mt19937_64& rng) {
    auto x = random_tensor(rng, {draw(rng, 1, 5), draw(rng, 1, 5)});
    const auto seed = rng();
    return check_op(rng, {{"x", x}}, [=] {
      std::mt19937_64 mask_rng(seed);  // same mask on every evaluation
      return dropout(x, 0.4, Mode::kTrain, mask_rng);
    });
  });
  add_case("softmax_cross_entropy", [](std::mt19937_64& rng) {
    const auto m = draw(rng, 1, 5), c = draw(rng, 2, 5);
    auto logits = random_tensor(rng, {m, c}, 2.0);
    std::vector<std::size_t> labels(m);
    for (auto& l : labels) l = draw(rng, 0, c - 1);
    std::vector<double> weights(c);
    const bool weighted = draw(rng, 0, 1) == 1;
    for (auto& w : weights) w = std::uniform_real_distribution<double>(0.2, 3.0)(rng);
    return check_gradients({{"logits", logits}}, [=] {
      return softmax_cross_entropy<double>(logits, labels,
                                           weighted ? std::span<const double>(weights)
                                                    : std::span<const double>());
    });
  });
  add_case("lstm_step", [](std::mt19937_64& rng) {
    const auto d = draw(rng, 1, 4), h = draw(rng, 1, 4);
    auto x = random_tensor(rng, {1, d});
    LstmWeights<double> w{random_tensor(rng, {d, 4 * h}, 0.5), random_tensor(rng, {h, 4 * h}, 0.5),
                          random_tensor(rng, {4 * h}, 0.5)};
    LstmState<double> s{random_tensor(rng, {1, h}), random_tensor(rng, {1, h})};
    return check_op(rng,
                    {{"x", x},
                     {"w_input", w.w_input},
                     {"w_hidden", w.w_hidden},
                     {"bias", w.bias},
                     {"h0", s.h},
                     {"c0", s.c}},
                    [=] {
                      const auto next = lstm_step(x, s, w);
                      return concat_cols<double>(std::vector<Tensor64>{next.h, next.c});
                    });
  });
  add_case("bilstm", [](std::mt19937_64& rng) {
    const auto l = draw(rng, 1, 4), d = draw(rng, 1, 3), h = draw(rng, 1, 3);
    auto seq = random_tensor(rng, {l, d});
    auto make = [&] {
      return LstmWeights<double>{random_tensor(rng, {d, 4 * h}, 0.5),
                                 random_tensor(rng, {h, 4 * h}, 0.5),
                                 random_tensor(rng, {4 * h}, 0.5)};
    };
    auto f = make();
    auto b = make();
    return check_op(rng,
                    {{"seq", seq},
                     {"fw.w_input", f.w_input},
                     {"fw.w_hidden", f.w_hidden},
                     {"fw.bias", f.bias},
                     {"bw.w_input", b.w_input},
                     {"bw.w_hidden", b.w_hidden},
                     {"bw.bias", b.bias}},
                    [=] { return bilstm(seq, f, b); });
  });
  return cases;
}

struct GradSuiteResult {
  std::map<std::string, double> worst;  // op -> max relative error
  std::size_t checks = 0;
  std::size_t failures = 0;
};

inline GradSuiteResult run_gradient_suite(std::size_t shapes_per_op, std::uint64_t seed,
                                          double tolerance = 1e-4) {
  GradSuiteResult out;
  std::mt19937_64 rng(seed);
  for (const auto& c : gradient_cases()) {
    double worst = 0.0;
    for (std::size_t i = 0; i < shapes_per_op; ++i) {
      const auto r = c.run(rng);
      worst = std::max(worst, r.max_relative_error);
      ++out.checks;
      if (!(r.max_relative_error <= tolerance)) ++out.failures;
    }
    out.worst[c.name] = worst;
  }
  return out;
}

}  // namespace ade::testing
