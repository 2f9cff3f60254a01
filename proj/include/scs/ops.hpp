#pragma once

#include <functional>
#include <vector>

#include "scs/tape.hpp"
#include "scs/tensor.hpp"

// Differentiable tensor primitives. Every function computes its result
// eagerly and, when an input requires a gradient and a tape is active,
// records an adjoint on that tape.
namespace scs {

// Elementwise arithmetic with right-aligned (numpy-style) broadcasting.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);
template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T value);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope);
template <typename T>
Tensor<T> abs(const Tensor<T>& x);

/// Elementwise map with a caller-supplied derivative. `name` labels the tape
/// node.
template <typename T>
Tensor<T> map_unary(const Tensor<T>& x, const char* name, std::function<T(T)> f,
                    std::function<T(T)> df);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& x);
/// Mean over one axis; the axis is removed from the result.
template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& x, int axis);
/// mean(|x|) over all elements; subgradient 0 at x == 0.
template <typename T>
Tensor<T> abs_mean(const Tensor<T>& x);

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis);
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  return concat<T>({a, b}, 1);
}
/// Half-open range [begin, end) along `axis`.
template <typename T>
Tensor<T> slice(const Tensor<T>& x, int axis, std::int64_t begin, std::int64_t end);

/// Batched matrix product [..., M, K] x [..., K, N] -> [..., M, N]. Leading
/// dims must match, or `b` may be a plain [K, N] matrix shared across the
/// batch.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// One dimension may be -1 and is inferred.
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<int>& order);

/// 2-D cross-correlation with zero padding. input [N,Cin,H,W], weight
/// [Cout,Cin,kh,kw] with odd kernel sides, bias [Cout].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                 int padding);

/// Affine map over the last axis: input [..., Din], weight [Dout, Din],
/// bias [Dout].
template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

/// Max-subtracted softmax along `axis`.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis);

/// Bilinear resize of [N,C,H,W] where output corners land exactly on input
/// corners: output (i, j) samples input (i*(H-1)/(outH-1), j*(W-1)/(outW-1)).
/// A single output row or column samples coordinate 0.
template <typename T>
Tensor<T> bilinear_resize_corner_aligned(const Tensor<T>& x, std::int64_t out_h, std::int64_t out_w);

/// Non-overlapping k x k average pooling; trailing rows/columns that do not
/// fill a window are dropped.
template <typename T>
Tensor<T> avg_pool2d(const Tensor<T>& x, int k);

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) {
  return add(a, b);
}
template <typename T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) {
  return sub(a, b);
}
template <typename T>
Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) {
  return mul(a, b);
}

}  // namespace scs
