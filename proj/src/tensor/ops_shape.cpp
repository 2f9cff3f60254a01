#include <algorithm>
#include <cmath>
#include <numeric>

#include "op_util.hpp"
#include "scs/ops.hpp"

namespace scs {
namespace {

using detail::grad_target;

// Source index pair and blend weight for one output coordinate.
struct Tap {
  std::int64_t lo, hi;
  double frac;
};

std::vector<Tap> corner_aligned_taps(std::int64_t in, std::int64_t out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  for (std::int64_t i = 0; i < out; ++i) {
    double src = 0.0;
    if (out > 1 && in > 1) src = static_cast<double>(i * (in - 1)) / static_cast<double>(out - 1);
    auto lo = static_cast<std::int64_t>(std::floor(src));
    lo = std::clamp<std::int64_t>(lo, 0, in - 1);
    const std::int64_t hi = std::min(lo + 1, in - 1);
    taps[static_cast<std::size_t>(i)] = Tap{lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  std::int64_t known = 1;
  int infer = -1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) {
      if (infer >= 0) throw ShapeError("reshape: more than one inferred dimension in " + to_string(shape));
      infer = static_cast<int>(i);
    } else {
      known *= shape[i];
    }
  }
  if (infer >= 0 && known > 0) shape[static_cast<std::size_t>(infer)] = x.size() / known;
  if (numel(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  Tensor<T> result(shape, std::vector<T>(x.data().begin(), x.data().end()));
  if (auto* tape = recording_tape<T>({&x})) {
    tape->record("reshape", {x.impl()}, result, [px = x.impl().get()](std::span<const T> g) {
      if (T* gx = grad_target(px)) {
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<int>& order) {
  const int r = x.rank();
  std::vector<int> sorted(order);
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(static_cast<std::size_t>(r));
  std::iota(expect.begin(), expect.end(), 0);
  if (sorted != expect) throw ShapeError("permute: invalid axis order for shape " + to_string(x.shape()));

  const Shape& in = x.shape();
  Shape out_shape(static_cast<std::size_t>(r));
  std::vector<std::int64_t> in_stride(static_cast<std::size_t>(r), 1);
  for (int i = r - 2; i >= 0; --i) in_stride[i] = in_stride[i + 1] * in[i + 1];
  std::vector<std::int64_t> gather_stride(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    out_shape[i] = in[order[i]];
    gather_stride[i] = in_stride[order[i]];
  }
  // Source flat index of every output element.
  auto src_index = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(x.size()));
  std::vector<std::int64_t> idx(static_cast<std::size_t>(r), 0);
  for (std::int64_t flat = 0; flat < x.size(); ++flat) {
    std::int64_t s = 0;
    for (int d = 0; d < r; ++d) s += idx[d] * gather_stride[d];
    (*src_index)[static_cast<std::size_t>(flat)] = s;
    for (int d = r - 1; d >= 0; --d) {
      if (++idx[d] < out_shape[d]) break;
      idx[d] = 0;
    }
  }
  std::vector<T> out(static_cast<std::size_t>(x.size()));
  const auto d = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d[static_cast<std::size_t>((*src_index)[i])];
  Tensor<T> result(out_shape, std::move(out));
  if (auto* tape = recording_tape<T>({&x})) {
    tape->record("permute", {x.impl()}, result, [px = x.impl().get(), src_index](std::span<const T> g) {
      if (T* gx = grad_target(px)) {
        for (std::size_t i = 0; i < g.size(); ++i) gx[(*src_index)[i]] += g[i];
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  const int r = static_cast<int>(first.size());
  const int a = detail::normalize_axis(axis, r, first);
  Shape out_shape = first;
  out_shape[a] = 0;
  for (const auto& p : parts) {
    bool ok = p.rank() == r;
    for (int i = 0; ok && i < r; ++i) {
      if (i != a && p.shape()[i] != first[i]) ok = false;
    }
    if (!ok) {
      std::string msg = "concat: shapes disagree outside axis " + std::to_string(a) + ":";
      for (const auto& q : parts) msg += " " + to_string(q.shape());
      throw ShapeError(msg);
    }
    out_shape[a] += p.shape()[a];
  }
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < a; ++i) outer *= first[i];
  for (int i = a + 1; i < r; ++i) inner *= first[i];
  const std::int64_t out_run = out_shape[a] * inner;
  std::vector<T> out(static_cast<std::size_t>(numel(out_shape)));
  std::vector<std::int64_t> offsets;
  std::int64_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::int64_t run = p.shape()[a] * inner;
    const auto d = p.data();
    for (std::int64_t o = 0; o < outer; ++o) {
      std::copy_n(d.data() + o * run, run, out.data() + o * out_run + offset);
    }
    offset += run;
  }
  Tensor<T> result(out_shape, std::move(out));
  Tape<T>* tape = Tape<T>::active();
  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  if (tape != nullptr && any) {
    std::vector<detail::ImplPtr<T>> impls;
    std::vector<TensorImpl<T>*> raw;
    for (const auto& p : parts) {
      impls.push_back(p.impl());
      raw.push_back(p.impl().get());
    }
    tape->record("concat", std::move(impls), result,
                 [raw, offsets, outer, inner, out_run, a](std::span<const T> g) {
                   for (std::size_t k = 0; k < raw.size(); ++k) {
                     T* gp = grad_target(raw[k]);
                     if (!gp) continue;
                     const std::int64_t run = raw[k]->shape[a] * inner;
                     for (std::int64_t o = 0; o < outer; ++o) {
                       const T* src = g.data() + o * out_run + offsets[k];
                       T* dst = gp + o * run;
                       for (std::int64_t i = 0; i < run; ++i) dst[i] += src[i];
                     }
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, int axis, std::int64_t begin, std::int64_t end) {
  const int a = detail::normalize_axis(axis, x.rank(), x.shape());
  const std::int64_t n = x.shape()[a];
  if (begin < 0 || end > n || begin >= end) {
    throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for axis " + std::to_string(a) + " of " + to_string(x.shape()));
  }
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < a; ++i) outer *= x.shape()[i];
  for (int i = a + 1; i < x.rank(); ++i) inner *= x.shape()[i];
  Shape out_shape = x.shape();
  out_shape[a] = end - begin;
  const std::int64_t run = (end - begin) * inner;
  std::vector<T> out(static_cast<std::size_t>(outer * run));
  const auto d = x.data();
  for (std::int64_t o = 0; o < outer; ++o) {
    std::copy_n(d.data() + (o * n + begin) * inner, run, out.data() + o * run);
  }
  Tensor<T> result(out_shape, std::move(out));
  if (auto* tape = recording_tape<T>({&x})) {
    tape->record("slice", {x.impl()}, result,
                 [px = x.impl().get(), outer, inner, n, begin, run](std::span<const T> g) {
                   if (T* gx = grad_target(px)) {
                     for (std::int64_t o = 0; o < outer; ++o) {
                       T* dst = gx + (o * n + begin) * inner;
                       const T* src = g.data() + o * run;
                       for (std::int64_t i = 0; i < run; ++i) dst[i] += src[i];
                     }
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
  const int a = detail::normalize_axis(axis, x.rank(), x.shape());
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < a; ++i) outer *= x.shape()[i];
  for (int i = a + 1; i < x.rank(); ++i) inner *= x.shape()[i];
  const std::int64_t n = x.shape()[a];
  std::vector<T> out(static_cast<std::size_t>(x.size()));
  const auto d = x.data();
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t i = 0; i < inner; ++i) {
      const std::int64_t base = o * n * inner + i;
      T peak = d[base];
      for (std::int64_t k = 1; k < n; ++k) peak = std::max(peak, d[base + k * inner]);
      T total{0};
      for (std::int64_t k = 0; k < n; ++k) {
        const T e = std::exp(d[base + k * inner] - peak);
        out[base + k * inner] = e;
        total += e;
      }
      for (std::int64_t k = 0; k < n; ++k) out[base + k * inner] /= total;
    }
  }
  Tensor<T> result(x.shape(), std::move(out));
  if (auto* tape = recording_tape<T>({&x})) {
    tape->record("softmax", {x.impl()}, result,
                 [px = x.impl().get(), py = result.impl().get(), outer, inner, n](std::span<const T> g) {
                   T* gx = grad_target(px);
                   if (!gx) return;
                   const auto& y = py->data;
                   for (std::int64_t o = 0; o < outer; ++o) {
                     for (std::int64_t i = 0; i < inner; ++i) {
                       const std::int64_t base = o * n * inner + i;
                       T dot{0};
                       for (std::int64_t k = 0; k < n; ++k) dot += g[base + k * inner] * y[base + k * inner];
                       for (std::int64_t k = 0; k < n; ++k) {
                         const std::int64_t j = base + k * inner;
                         gx[j] += y[j] * (g[j] - dot);
                       }
                     }
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> bilinear_resize_corner_aligned(const Tensor<T>& x, std::int64_t out_h, std::int64_t out_w) {
  if (x.rank() != 4) throw ShapeError("bilinear_resize_corner_aligned: expected [N,C,H,W], got " + to_string(x.shape()));
  if (out_h < 1 || out_w < 1) throw ShapeError("bilinear_resize_corner_aligned: output size must be >= 1");
  const std::int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  auto ty = std::make_shared<std::vector<Tap>>(corner_aligned_taps(h, out_h));
  auto tx = std::make_shared<std::vector<Tap>>(corner_aligned_taps(w, out_w));
  std::vector<T> out(static_cast<std::size_t>(planes * out_h * out_w));
  const auto d = x.data();
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* src = d.data() + p * h * w;
    T* dst = out.data() + p * out_h * out_w;
    for (std::int64_t i = 0; i < out_h; ++i) {
      const Tap& r = (*ty)[i];
      const T fy = static_cast<T>(r.frac);
      const T* top = src + r.lo * w;
      const T* bot = src + r.hi * w;
      for (std::int64_t j = 0; j < out_w; ++j) {
        const Tap& c = (*tx)[j];
        const T fx = static_cast<T>(c.frac);
        const T upper = (T{1} - fx) * top[c.lo] + fx * top[c.hi];
        const T lower = (T{1} - fx) * bot[c.lo] + fx * bot[c.hi];
        dst[i * out_w + j] = (T{1} - fy) * upper + fy * lower;
      }
    }
  }
  Tensor<T> result(Shape{x.dim(0), x.dim(1), out_h, out_w}, std::move(out));
  if (auto* tape = recording_tape<T>({&x})) {
    tape->record("bilinear_resize", {x.impl()}, result,
                 [px = x.impl().get(), ty, tx, planes, h, w, out_h, out_w](std::span<const T> g) {
                   T* gx = grad_target(px);
                   if (!gx) return;
                   for (std::int64_t p = 0; p < planes; ++p) {
                     T* dst = gx + p * h * w;
                     const T* src = g.data() + p * out_h * out_w;
                     for (std::int64_t i = 0; i < out_h; ++i) {
                       const Tap& r = (*ty)[i];
                       const T fy = static_cast<T>(r.frac);
                       for (std::int64_t j = 0; j < out_w; ++j) {
                         const Tap& c = (*tx)[j];
                         const T fx = static_cast<T>(c.frac);
                         const T v = src[i * out_w + j];
                         dst[r.lo * w + c.lo] += v * (T{1} - fy) * (T{1} - fx);
                         dst[r.lo * w + c.hi] += v * (T{1} - fy) * fx;
                         dst[r.hi * w + c.lo] += v * fy * (T{1} - fx);
                         dst[r.hi * w + c.hi] += v * fy * fx;
                       }
                     }
                   }
                 });
  }
  return result;
}

template <typename T>
Tensor<T> avg_pool2d(const Tensor<T>& x, int k) {
  if (x.rank() != 4) throw ShapeError("avg_pool2d: expected [N,C,H,W], got " + to_string(x.shape()));
  if (k < 1) throw ShapeError("avg_pool2d: window must be >= 1");
  const std::int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t oh = h / k, ow = w / k;
  if (oh < 1 || ow < 1) {
    throw ShapeError("avg_pool2d: window " + std::to_string(k) + " larger than input " + to_string(x.shape()));
  }
  const T inv = T{1} / static_cast<T>(k * k);
  std::vector<T> out(static_cast<std::size_t>(planes * oh * ow), T{0});
  const auto d = x.data();
  for (std::int64_t p = 0; p < planes; ++p) {
    for (std::int64_t i = 0; i < oh; ++i) {
      for (std::int64_t j = 0; j < ow; ++j) {
        T acc{0};
        for (int a = 0; a < k; ++a) {
          for (int b = 0; b < k; ++b) acc += d[(p * h + i * k + a) * w + j * k + b];
        }
        out[(p * oh + i) * ow + j] = acc * inv;
      }
    }
  }
  Tensor<T> result(Shape{x.dim(0), x.dim(1), oh, ow}, std::move(out));
  if (auto* tape = recording_tape<T>({&x})) {
    tape->record("avg_pool2d", {x.impl()}, result,
                 [px = x.impl().get(), planes, h, w, oh, ow, k, inv](std::span<const T> g) {
                   T* gx = grad_target(px);
                   if (!gx) return;
                   for (std::int64_t p = 0; p < planes; ++p) {
                     for (std::int64_t i = 0; i < oh; ++i) {
                       for (std::int64_t j = 0; j < ow; ++j) {
                         const T v = g[(p * oh + i) * ow + j] * inv;
                         for (int a = 0; a < k; ++a) {
                           for (int b = 0; b < k; ++b) gx[(p * h + i * k + a) * w + j * k + b] += v;
                         }
                       }
                     }
                   }
                 });
  }
  return result;
}

#define SCS_INSTANTIATE(T)                                                                      \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                          \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<int>&);                        \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, int);                                \
  template Tensor<T> slice(const Tensor<T>&, int, std::int64_t, std::int64_t);                  \
  template Tensor<T> softmax(const Tensor<T>&, int);                                            \
  template Tensor<T> bilinear_resize_corner_aligned(const Tensor<T>&, std::int64_t, std::int64_t); \
  template Tensor<T> avg_pool2d(const Tensor<T>&, int);

SCS_INSTANTIATE(float)
SCS_INSTANTIATE(double)
#undef SCS_INSTANTIATE

}  // namespace scs
