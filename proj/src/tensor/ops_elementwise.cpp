#include <algorithm>
#include <cmath>

#include "op_util.hpp"
#include "scs/ops.hpp"

namespace scs {
namespace {

using detail::grad_target;

// Flat index maps from every output element to its source element in each
// broadcast operand.
struct Broadcast {
  Shape out;
  std::vector<std::int64_t> a_index;
  std::vector<std::int64_t> b_index;
};

Broadcast broadcast_shapes(const Shape& a, const Shape& b, const char* op) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  Shape pa(rank, 1), pb(rank, 1);
  std::copy(a.begin(), a.end(), pa.begin() + static_cast<std::ptrdiff_t>(rank - a.size()));
  std::copy(b.begin(), b.end(), pb.begin() + static_cast<std::ptrdiff_t>(rank - b.size()));
  for (std::size_t i = 0; i < rank; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
      throw ShapeError(std::string(op) + ": shapes " + to_string(a) + " and " + to_string(b) +
                       " are not broadcast-compatible");
    }
    out[i] = std::max(pa[i], pb[i]);
  }
  std::vector<std::int64_t> sa(rank, 0), sb(rank, 0);
  std::int64_t ra = 1, rb = 1;
  for (std::size_t i = rank; i-- > 0;) {
    sa[i] = pa[i] == 1 ? 0 : ra;
    sb[i] = pb[i] == 1 ? 0 : rb;
    ra *= pa[i];
    rb *= pb[i];
  }
  Broadcast bc;
  bc.out = out;
  const std::int64_t n = numel(out);
  bc.a_index.resize(static_cast<std::size_t>(n));
  bc.b_index.resize(static_cast<std::size_t>(n));
  std::vector<std::int64_t> idx(rank, 0);
  for (std::int64_t flat = 0; flat < n; ++flat) {
    std::int64_t ia = 0, ib = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      ia += idx[d] * sa[d];
      ib += idx[d] * sb[d];
    }
    bc.a_index[static_cast<std::size_t>(flat)] = ia;
    bc.b_index[static_cast<std::size_t>(flat)] = ib;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < out[d]) break;
      idx[d] = 0;
    }
  }
  return bc;
}

enum class BinOp { kAdd, kSub, kMul };

template <typename T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, BinOp op, const char* name) {
  auto apply = [op](T x, T y) {
    switch (op) {
      case BinOp::kAdd: return x + y;
      case BinOp::kSub: return x - y;
      default: return x * y;
    }
  };
  const auto da = a.data();
  const auto db = b.data();

  if (a.shape() == b.shape()) {
    std::vector<T> out(da.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply(da[i], db[i]);
    Tensor<T> result(a.shape(), std::move(out));
    if (auto* tape = recording_tape<T>({&a, &b})) {
      tape->record(name, {a.impl(), b.impl()}, result,
                   [pa = a.impl().get(), pb = b.impl().get(), op](std::span<const T> g) {
                     const std::size_t n = g.size();
                     if (T* ga = grad_target(pa)) {
                       if (op == BinOp::kMul) {
                         for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * pb->data[i];
                       } else {
                         for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
                       }
                     }
                     if (T* gb = grad_target(pb)) {
                       if (op == BinOp::kMul) {
                         for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * pa->data[i];
                       } else if (op == BinOp::kSub) {
                         for (std::size_t i = 0; i < n; ++i) gb[i] -= g[i];
                       } else {
                         for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
                       }
                     }
                   });
    }
    return result;
  }

  auto bc = std::make_shared<Broadcast>(broadcast_shapes(a.shape(), b.shape(), name));
  std::vector<T> out(bc->a_index.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = apply(da[static_cast<std::size_t>(bc->a_index[i])], db[static_cast<std::size_t>(bc->b_index[i])]);
  }
  Tensor<T> result(bc->out, std::move(out));
  if (auto* tape = recording_tape<T>({&a, &b})) {
    tape->record(name, {a.impl(), b.impl()}, result,
                 [pa = a.impl().get(), pb = b.impl().get(), op, bc](std::span<const T> g) {
                   const std::size_t n = g.size();
                   if (T* ga = grad_target(pa)) {
                     for (std::size_t i = 0; i < n; ++i) {
                       const T scale = op == BinOp::kMul ? pb->data[static_cast<std::size_t>(bc->b_index[i])] : T{1};
                       ga[bc->a_index[i]] += g[i] * scale;
                     }
                   }
                   if (T* gb = grad_target(pb)) {
                     for (std::size_t i = 0; i < n; ++i) {
                       T scale = T{1};
                       if (op == BinOp::kMul) scale = pa->data[static_cast<std::size_t>(bc->a_index[i])];
                       if (op == BinOp::kSub) scale = T{-1};
                       gb[bc->b_index[i]] += g[i] * scale;
                     }
                   }
                 });
  }
  return result;
}

// Unary op whose derivative is expressed through input x and output y.
template <typename T, typename F, typename D>
Tensor<T> unary(const Tensor<T>& x, const char* name, F f, D dfdx) {
  const auto dx = x.data();
  std::vector<T> out(dx.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(dx[i]);
  Tensor<T> result(x.shape(), std::move(out));
  if (auto* tape = recording_tape<T>({&x})) {
    tape->record(name, {x.impl()}, result,
                 [px = x.impl().get(), py = result.impl().get(), dfdx](std::span<const T> g) {
                   if (T* gx = grad_target(px)) {
                     for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * dfdx(px->data[i], py->data[i]);
                   }
                 });
  }
  return result;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::kAdd, "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::kSub, "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::kMul, "mul");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return unary(
      x, "scale", [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T value) {
  return unary(
      x, "add_scalar", [value](T v) { return v + value; }, [](T, T) { return T{1}; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary(
      x, "sigmoid",
      [](T v) {
        if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
        const T e = std::exp(v);
        return e / (T{1} + e);
      },
      [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  return unary(
      x, "leaky_relu", [slope](T v) { return v > T{0} ? v : v * slope; },
      [slope](T v, T) { return v > T{0} ? T{1} : slope; });
}

template <typename T>
Tensor<T> abs(const Tensor<T>& x) {
  return unary(
      x, "abs", [](T v) { return std::abs(v); },
      [](T v, T) { return v > T{0} ? T{1} : (v < T{0} ? T{-1} : T{0}); });
}

template <typename T>
Tensor<T> map_unary(const Tensor<T>& x, const char* name, std::function<T(T)> f, std::function<T(T)> df) {
  return unary(x, name, f, [df](T v, T) { return df(v); });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total{0};
  for (T v : x.data()) total += v;
  Tensor<T> result = Tensor<T>::scalar(total);
  if (auto* tape = recording_tape<T>({&x})) {
    tape->record("sum", {x.impl()}, result, [px = x.impl().get()](std::span<const T> g) {
      if (T* gx = grad_target(px)) {
        for (std::size_t i = 0; i < px->data.size(); ++i) gx[i] += g[0];
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& x) {
  const auto n = x.size();
  if (n == 0) throw ShapeError("reduce_mean of empty tensor");
  T total{0};
  for (T v : x.data()) total += v;
  Tensor<T> result = Tensor<T>::scalar(total / static_cast<T>(n));
  if (auto* tape = recording_tape<T>({&x})) {
    tape->record("reduce_mean", {x.impl()}, result, [px = x.impl().get(), n](std::span<const T> g) {
      if (T* gx = grad_target(px)) {
        const T share = g[0] / static_cast<T>(n);
        for (std::int64_t i = 0; i < n; ++i) gx[i] += share;
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& x, int axis) {
  const int a = detail::normalize_axis(axis, x.rank(), x.shape());
  const Shape& s = x.shape();
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < a; ++i) outer *= s[static_cast<std::size_t>(i)];
  for (int i = a + 1; i < x.rank(); ++i) inner *= s[static_cast<std::size_t>(i)];
  const std::int64_t n = s[static_cast<std::size_t>(a)];
  if (n == 0) throw ShapeError("reduce_mean over empty axis of " + to_string(s));
  Shape out_shape = s;
  out_shape.erase(out_shape.begin() + a);
  std::vector<T> out(static_cast<std::size_t>(outer * inner), T{0});
  const auto d = x.data();
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t k = 0; k < n; ++k) {
      const T* src = d.data() + (o * n + k) * inner;
      T* dst = out.data() + o * inner;
      for (std::int64_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  for (T& v : out) v /= static_cast<T>(n);
  Tensor<T> result(out_shape, std::move(out));
  if (auto* tape = recording_tape<T>({&x})) {
    tape->record("reduce_mean_axis", {x.impl()}, result,
                 [px = x.impl().get(), outer, inner, n](std::span<const T> g) {
                   if (T* gx = grad_target(px)) {
                     for (std::int64_t o = 0; o < outer; ++o) {
                       for (std::int64_t k = 0; k < n; ++k) {
                         T* dst = gx + (o * n + k) * inner;
                         const T* src = g.data() + o * inner;
                         for (std::int64_t i = 0; i < inner; ++i) dst[i] += src[i] / static_cast<T>(n);
                       }
                     }
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> abs_mean(const Tensor<T>& x) {
  const auto n = x.size();
  if (n == 0) throw ShapeError("abs_mean of empty tensor");
  T total{0};
  for (T v : x.data()) total += std::abs(v);
  Tensor<T> result = Tensor<T>::scalar(total / static_cast<T>(n));
  if (auto* tape = recording_tape<T>({&x})) {
    tape->record("abs_mean", {x.impl()}, result, [px = x.impl().get(), n](std::span<const T> g) {
      if (T* gx = grad_target(px)) {
        const T share = g[0] / static_cast<T>(n);
        for (std::int64_t i = 0; i < n; ++i) {
          const T v = px->data[static_cast<std::size_t>(i)];
          gx[i] += v > T{0} ? share : (v < T{0} ? -share : T{0});
        }
      }
    });
  }
  return result;
}

#define SCS_INSTANTIATE(T)                                                                     \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> scale(const Tensor<T>&, T);                                               \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                          \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                          \
  template Tensor<T> abs(const Tensor<T>&);                                                    \
  template Tensor<T> map_unary(const Tensor<T>&, const char*, std::function<T(T)>,             \
                               std::function<T(T)>);                                           \
  template Tensor<T> sum(const Tensor<T>&);                                                    \
  template Tensor<T> reduce_mean(const Tensor<T>&);                                            \
  template Tensor<T> reduce_mean(const Tensor<T>&, int);                                       \
  template Tensor<T> abs_mean(const Tensor<T>&);

SCS_INSTANTIATE(float)
SCS_INSTANTIATE(double)
#undef SCS_INSTANTIATE

}  // namespace scs
