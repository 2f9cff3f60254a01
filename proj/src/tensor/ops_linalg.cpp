#include <Eigen/Core>

#include "op_util.hpp"
#include "scs/ops.hpp"

namespace scs {
namespace {

using detail::grad_target;

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

struct ConvGeometry {
  std::int64_t n, cin, h, w, cout, kh, kw, oh, ow;
  int stride, pad;
  std::int64_t k() const { return cin * kh * kw; }
  std::int64_t p() const { return oh * ow; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* cols) {
  for (std::int64_t c = 0; c < g.cin; ++c) {
    for (std::int64_t ki = 0; ki < g.kh; ++ki) {
      for (std::int64_t kj = 0; kj < g.kw; ++kj) {
        T* row = cols + ((c * g.kh + ki) * g.kw + kj) * g.p();
        for (std::int64_t oy = 0; oy < g.oh; ++oy) {
          const std::int64_t iy = oy * g.stride - g.pad + ki;
          T* dst = row + oy * g.ow;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.ow, T{0});
            continue;
          }
          const T* src = x + (c * g.h + iy) * g.w;
          for (std::int64_t ox = 0; ox < g.ow; ++ox) {
            const std::int64_t ix = ox * g.stride - g.pad + kj;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : T{0};
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* x) {
  for (std::int64_t c = 0; c < g.cin; ++c) {
    for (std::int64_t ki = 0; ki < g.kh; ++ki) {
      for (std::int64_t kj = 0; kj < g.kw; ++kj) {
        const T* row = cols + ((c * g.kh + ki) * g.kw + kj) * g.p();
        for (std::int64_t oy = 0; oy < g.oh; ++oy) {
          const std::int64_t iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.h) continue;
          const T* src = row + oy * g.ow;
          T* dst = x + (c * g.h + iy) * g.w;
          for (std::int64_t ox = 0; ox < g.ow; ++ox) {
            const std::int64_t ix = ox * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw ShapeError("matmul: operands must have rank >= 2, got " + to_string(a.shape()) + " and " +
                     to_string(b.shape()));
  }
  const std::int64_t m = a.dim(-2), k = a.dim(-1), k2 = b.dim(-2), n = b.dim(-1);
  const Shape lead_a(a.shape().begin(), a.shape().end() - 2);
  const Shape lead_b(b.shape().begin(), b.shape().end() - 2);
  const bool shared_b = b.rank() == 2;
  if (k != k2 || (!shared_b && lead_a != lead_b)) {
    throw ShapeError("matmul: incompatible shapes " + to_string(a.shape()) + " and " + to_string(b.shape()));
  }
  const std::int64_t batch = numel(lead_a);
  Shape out_shape = lead_a;
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<T> out(static_cast<std::size_t>(batch * m * n));
  for (std::int64_t i = 0; i < batch; ++i) {
    Eigen::Map<const MatR<T>> A(a.data().data() + i * m * k, m, k);
    Eigen::Map<const MatR<T>> B(b.data().data() + (shared_b ? 0 : i * k * n), k, n);
    Eigen::Map<MatR<T>> C(out.data() + i * m * n, m, n);
    C.noalias() = A * B;
  }
  Tensor<T> result(out_shape, std::move(out));
  if (auto* tape = recording_tape<T>({&a, &b})) {
    tape->record("matmul", {a.impl(), b.impl()}, result,
                 [pa = a.impl().get(), pb = b.impl().get(), batch, m, k, n, shared_b](std::span<const T> g) {
                   T* ga = grad_target(pa);
                   T* gb = grad_target(pb);
                   for (std::int64_t i = 0; i < batch; ++i) {
                     Eigen::Map<const MatR<T>> G(g.data() + i * m * n, m, n);
                     const std::int64_t boff = shared_b ? 0 : i * k * n;
                     if (ga) {
                       Eigen::Map<const MatR<T>> B(pb->data.data() + boff, k, n);
                       Eigen::Map<MatR<T>> GA(ga + i * m * k, m, k);
                       GA.noalias() += G * B.transpose();
                     }
                     if (gb) {
                       Eigen::Map<const MatR<T>> A(pa->data.data() + i * m * k, m, k);
                       Eigen::Map<MatR<T>> GB(gb + boff, k, n);
                       GB.noalias() += A.transpose() * G;
                     }
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (input.rank() < 1 || weight.rank() != 2 || bias.rank() != 1 || input.dim(-1) != weight.dim(1) ||
      bias.dim(0) != weight.dim(0)) {
    throw ShapeError("linear: input " + to_string(input.shape()) + ", weight " + to_string(weight.shape()) +
                     ", bias " + to_string(bias.shape()) + " are incompatible");
  }
  const std::int64_t din = weight.dim(1), dout = weight.dim(0);
  const std::int64_t rows = input.size() / din;
  Shape out_shape = input.shape();
  out_shape.back() = dout;
  std::vector<T> out(static_cast<std::size_t>(rows * dout));
  {
    Eigen::Map<const MatR<T>> X(input.data().data(), rows, din);
    Eigen::Map<const MatR<T>> W(weight.data().data(), dout, din);
    Eigen::Map<const RowVec<T>> b(bias.data().data(), dout);
    Eigen::Map<MatR<T>> Y(out.data(), rows, dout);
    Y.noalias() = X * W.transpose();
    Y.rowwise() += b;
  }
  Tensor<T> result(out_shape, std::move(out));
  if (auto* tape = recording_tape<T>({&input, &weight, &bias})) {
    tape->record("linear", {input.impl(), weight.impl(), bias.impl()}, result,
                 [px = input.impl().get(), pw = weight.impl().get(), pb = bias.impl().get(), rows, din,
                  dout](std::span<const T> g) {
                   Eigen::Map<const MatR<T>> G(g.data(), rows, dout);
                   if (T* gx = grad_target(px)) {
                     Eigen::Map<const MatR<T>> W(pw->data.data(), dout, din);
                     Eigen::Map<MatR<T>> GX(gx, rows, din);
                     GX.noalias() += G * W;
                   }
                   if (T* gw = grad_target(pw)) {
                     Eigen::Map<const MatR<T>> X(px->data.data(), rows, din);
                     Eigen::Map<MatR<T>> GW(gw, dout, din);
                     GW.noalias() += G.transpose() * X;
                   }
                   if (T* gb = grad_target(pb)) {
                     Eigen::Map<RowVec<T>> GB(gb, dout);
                     GB += G.colwise().sum();
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                 int padding) {
  auto fail = [&](const std::string& why) {
    throw ShapeError("conv2d: " + why + " (input " + to_string(input.shape()) + ", weight " +
                     to_string(weight.shape()) + ", bias " + to_string(bias.shape()) + ")");
  };
  if (input.rank() != 4 || weight.rank() != 4) fail("input and weight must be rank 4");
  if (input.dim(1) != weight.dim(1)) fail("input channels do not match weight");
  if (bias.rank() != 1 || bias.dim(0) != weight.dim(0)) fail("bias must be [Cout]");
  if (weight.dim(2) % 2 == 0 || weight.dim(3) % 2 == 0) fail("kernel sides must be odd");
  if (stride < 1 || padding < 0) fail("stride must be >= 1 and padding >= 0");

  ConvGeometry geo{};
  geo.n = input.dim(0);
  geo.cin = input.dim(1);
  geo.h = input.dim(2);
  geo.w = input.dim(3);
  geo.cout = weight.dim(0);
  geo.kh = weight.dim(2);
  geo.kw = weight.dim(3);
  geo.stride = stride;
  geo.pad = padding;
  if (geo.h + 2 * padding < geo.kh || geo.w + 2 * padding < geo.kw) fail("kernel larger than padded input");
  geo.oh = (geo.h + 2 * padding - geo.kh) / stride + 1;
  geo.ow = (geo.w + 2 * padding - geo.kw) / stride + 1;

  const std::int64_t K = geo.k(), P = geo.p();
  std::vector<T> out(static_cast<std::size_t>(geo.n * geo.cout * P));
  std::vector<T> cols(geo.pointwise() ? 0 : static_cast<std::size_t>(K * P));
  Eigen::Map<const MatR<T>> W(weight.data().data(), geo.cout, K);
  Eigen::Map<const Vec<T>> b(bias.data().data(), geo.cout);
  for (std::int64_t i = 0; i < geo.n; ++i) {
    const T* x = input.data().data() + i * geo.cin * geo.h * geo.w;
    const T* c = x;
    if (!geo.pointwise()) {
      im2col(x, geo, cols.data());
      c = cols.data();
    }
    Eigen::Map<const MatR<T>> C(c, K, P);
    Eigen::Map<MatR<T>> O(out.data() + i * geo.cout * P, geo.cout, P);
    O.noalias() = W * C;
    O.colwise() += b;
  }
  Tensor<T> result(Shape{geo.n, geo.cout, geo.oh, geo.ow}, std::move(out));
  if (auto* tape = recording_tape<T>({&input, &weight, &bias})) {
    tape->record("conv2d", {input.impl(), weight.impl(), bias.impl()}, result,
                 [px = input.impl().get(), pw = weight.impl().get(), pb = bias.impl().get(),
                  geo](std::span<const T> g) {
                   const std::int64_t K = geo.k(), P = geo.p();
                   T* gx = grad_target(px);
                   T* gw = grad_target(pw);
                   T* gb = grad_target(pb);
                   Eigen::Map<const MatR<T>> W(pw->data.data(), geo.cout, K);
                   std::vector<T> cols(geo.pointwise() ? 0 : static_cast<std::size_t>(K * P));
                   std::vector<T> dcols(geo.pointwise() || gx == nullptr ? 0 : static_cast<std::size_t>(K * P));
                   for (std::int64_t i = 0; i < geo.n; ++i) {
                     Eigen::Map<const MatR<T>> G(g.data() + i * geo.cout * P, geo.cout, P);
                     const T* x = px->data.data() + i * geo.cin * geo.h * geo.w;
                     if (gb) {
                       Eigen::Map<Vec<T>> GB(gb, geo.cout);
                       GB += G.rowwise().sum();
                     }
                     if (gw) {
                       const T* c = x;
                       if (!geo.pointwise()) {
                         im2col(x, geo, cols.data());
                         c = cols.data();
                       }
                       Eigen::Map<const MatR<T>> C(c, K, P);
                       Eigen::Map<MatR<T>> GW(gw, geo.cout, K);
                       GW.noalias() += G * C.transpose();
                     }
                     if (gx) {
                       T* gxi = gx + i * geo.cin * geo.h * geo.w;
                       if (geo.pointwise()) {
                         Eigen::Map<MatR<T>> GX(gxi, K, P);
                         GX.noalias() += W.transpose() * G;
                       } else {
                         Eigen::Map<MatR<T>> DC(dcols.data(), K, P);
                         DC.noalias() = W.transpose() * G;
                         col2im_add(dcols.data(), geo, gxi);
                       }
                     }
                   }
                 });
  }
  return result;
}

#define SCS_INSTANTIATE(T)                                                                    \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);

SCS_INSTANTIATE(float)
SCS_INSTANTIATE(double)
#undef SCS_INSTANTIATE

}  // namespace scs
