#include <algorithm>

#include "scs/geometry.hpp"
#include "scs/model.hpp"

namespace scs::model {

const char* to_string(Mode mode) { return mode == Mode::kAuto ? "auto" : "ref"; }

Mode parse_mode(const std::string& text) {
  if (text == "auto" || text == "A") return Mode::kAuto;
  if (text == "ref" || text == "R") return Mode::kRef;
  throw ConfigError("unknown mode '" + text + "' (expected auto or ref)");
}

void ScsNetConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid model config: " + what);
  };
  require(base_channels >= 1 && deep_channels >= 2, "channel counts must be positive");
  require(deep_channels % 2 == 0, "deep_channels must be even");
  require(attn_qk_divisor >= 1 && deep_channels % attn_qk_divisor == 0,
          "deep_channels must be divisible by attn_qk_divisor");
  require(pyramid_levels >= 1, "pyramid_levels must be >= 1");
  require(sr_blocks >= 0, "sr_blocks must be >= 0");
  require(cpm_hidden >= 1, "cpm_hidden must be >= 1");
  require(cpm_layers == 4, "cpm_layers is fixed at 4");
  require(input_height % 4 == 0 && input_width % 4 == 0 && input_height > 0 && input_width > 0,
          "input size must be divisible by 4");
  const int quarter = std::min(input_height, input_width) / 4;
  require((quarter >> (pyramid_levels - 1)) >= 1, "pyramid level " + std::to_string(pyramid_levels - 1) +
                                                      " would fall below one pixel at input size " +
                                                      std::to_string(input_height) + "x" + std::to_string(input_width));
  require(disc_base >= 1, "disc_base must be >= 1");
}

template <typename T>
Conv<T> make_conv(ParamStore<T>& store, Rng& rng, const std::string& name, int cin, int cout, int kernel, int stride) {
  Conv<T> c;
  c.weight = store.add(name + ".weight", {cout, cin, kernel, kernel});
  c.bias = store.add(name + ".bias", {cout});
  kaiming_uniform(c.weight, static_cast<std::int64_t>(cin) * kernel * kernel, rng);
  c.stride = stride;
  c.padding = kernel / 2;
  return c;
}

template <typename T>
Dense<T> make_dense(ParamStore<T>& store, Rng& rng, const std::string& name, int din, int dout) {
  Dense<T> d;
  d.weight = store.add(name + ".weight", {dout, din});
  d.bias = store.add(name + ".bias", {dout});
  kaiming_uniform(d.weight, din, rng);
  return d;
}

template <typename T>
Tensor<T> cpm_coords(std::int64_t hs, std::int64_t ws, double p) {
  if (!(p > 0.0)) throw ConfigError("magnification must be positive");
  const auto ho = scaled_extent(hs, p);
  const auto wo = scaled_extent(ws, p);
  if (ho < 1 || wo < 1) throw ConfigError("magnification yields an empty output");
  std::vector<T> z(static_cast<std::size_t>(2 * ho * wo));
  for (std::int64_t i = 0; i < ho; ++i) {
    const T zy = static_cast<T>(2.0 * static_cast<double>((i * hs) % ho) / static_cast<double>(ho) - 1.0);
    for (std::int64_t j = 0; j < wo; ++j) {
      const T zx = static_cast<T>(2.0 * static_cast<double>((j * ws) % wo) / static_cast<double>(wo) - 1.0);
      z[static_cast<std::size_t>(i * wo + j)] = zx;
      z[static_cast<std::size_t>(ho * wo + i * wo + j)] = zy;
    }
  }
  return Tensor<T>(Shape{2, ho, wo}, std::move(z));
}

template <typename T>
Generator<T>::Generator(const ScsNetConfig& config, ParamStore<T>& store, Rng& rng) : config_(config) {
  config_.validate();
  const int base = config_.base_channels, deep = config_.deep_channels, mid = deep / 2;
  const int qk = config_.attn_qk_channels();

  init_ = make_conv(store, rng, "g.init", 1, base, 3);

  enc_s_[0] = {make_conv(store, rng, "g.enc_s.0.down", base, mid, 3, 2), make_conv(store, rng, "g.enc_s.0.refine", mid, mid, 3)};
  enc_s_[1] = {make_conv(store, rng, "g.enc_s.1.down", mid, deep, 3, 2), make_conv(store, rng, "g.enc_s.1.refine", deep, deep, 3)};

  enc_r_stem_ = make_conv(store, rng, "g.enc_r.stem", 3, base, 3);
  enc_r_[0] = {make_conv(store, rng, "g.enc_r.0.down", base, mid, 3, 2), make_conv(store, rng, "g.enc_r.0.refine", mid, mid, 3)};
  enc_r_[1] = {make_conv(store, rng, "g.enc_r.1.down", mid, deep, 3, 2), make_conv(store, rng, "g.enc_r.1.refine", deep, deep, 3)};

  for (int k = 0; k < config_.pyramid_levels; ++k) {
    const std::string p = "g.pvc.level" + std::to_string(k) + ".";
    AttentionLevel lvl;
    lvl.pre_source = make_conv(store, rng, p + "pre_s", deep, deep, 3);
    lvl.pre_reference = make_conv(store, rng, p + "pre_r", deep, deep, 3);
    lvl.query = make_conv(store, rng, p + "query", deep, qk, 1);
    lvl.key = make_conv(store, rng, p + "key", deep, qk, 1);
    lvl.value = make_conv(store, rng, p + "value", deep, deep, 1);
    lvl.valves = make_conv(store, rng, p + "valves", 2 * deep, 2 * deep, 1);
    levels_.push_back(lvl);
  }
  pvc_post_ = make_conv(store, rng, "g.pvc.post", deep * config_.pyramid_levels, deep, 1);

  sa_f_ = make_conv(store, rng, "g.dec.attn.f", deep, qk, 1);
  sa_g_ = make_conv(store, rng, "g.dec.attn.g", deep, qk, 1);
  sa_h_ = make_conv(store, rng, "g.dec.attn.h", deep, deep, 1);
  sa_gamma_ = store.add("g.dec.attn.gamma", {1});
  dec_up1_ = make_conv(store, rng, "g.dec.up1", deep, mid, 3);
  dec_up2_ = make_conv(store, rng, "g.dec.up2", mid, base, 3);

  for (int b = 0; b < config_.sr_blocks; ++b) {
    const std::string p = "g.sr.block" + std::to_string(b) + ".";
    sr_blocks_.emplace_back(make_conv(store, rng, p + "conv1", base, base, 3), make_conv(store, rng, p + "conv2", base, base, 3));
  }
  fuse_ = make_conv(store, rng, "g.fuse", 2 * base, deep, 3);

  const int h = config_.cpm_hidden;
  cpm_.push_back(make_dense(store, rng, "g.cpm.0", deep + 2, h));
  cpm_.push_back(make_dense(store, rng, "g.cpm.1", h, h));
  cpm_.push_back(make_dense(store, rng, "g.cpm.2", h, h));
  cpm_.push_back(make_dense(store, rng, "g.cpm.3", h, 3));
}

template <typename T>
Tensor<T> Generator<T>::run_stage(const Stage& s, const Tensor<T>& x) const {
  return s.refine(act(s.down(x)));
}

template <typename T>
Tensor<T> Generator<T>::init_conv(const Tensor<T>& source_l) const {
  if (source_l.rank() != 4 || source_l.dim(1) != 1) {
    throw ShapeError("init_conv: expected a single-channel [B,1,H,W] source, got " + scs::to_string(source_l.shape()));
  }
  return init_(source_l);
}

template <typename T>
Tensor<T> Generator<T>::encode_source(const Tensor<T>& f_init) const {
  if (f_init.dim(2) % 4 != 0 || f_init.dim(3) % 4 != 0) {
    throw ConfigError("encode_source: spatial size " + scs::to_string(f_init.shape()) + " not divisible by 4");
  }
  return run_stage(enc_s_[1], act(run_stage(enc_s_[0], f_init)));
}

template <typename T>
Tensor<T> Generator<T>::encode_reference(const Tensor<T>& reference_lab) const {
  if (reference_lab.rank() != 4 || reference_lab.dim(1) != 3) {
    throw ShapeError("encode_reference: expected [B,3,H,W] Lab reference, got " + scs::to_string(reference_lab.shape()));
  }
  if (reference_lab.dim(2) % 4 != 0 || reference_lab.dim(3) % 4 != 0) {
    throw ConfigError("encode_reference: spatial size " + scs::to_string(reference_lab.shape()) + " not divisible by 4");
  }
  return run_stage(enc_r_[1], act(run_stage(enc_r_[0], act(enc_r_stem_(reference_lab)))));
}

template <typename T>
Tensor<T> Generator<T>::vcattn(int level, const Tensor<T>& f_s, const Tensor<T>& f_r, const ForwardHooks<T>& hooks) const {
  const AttentionLevel& lvl = levels_.at(static_cast<std::size_t>(level));
  const std::int64_t b = f_s.dim(0), cs = f_s.dim(1), hs = f_s.dim(2), ws = f_s.dim(3);
  if (f_r.dim(0) != b) throw ShapeError("vcattn: batch mismatch " + scs::to_string(f_s.shape()) + " vs " + scs::to_string(f_r.shape()));
  const std::int64_t ns = hs * ws, nr = f_r.dim(2) * f_r.dim(3);

  const auto q = reshape(lvl.query(f_s), {b, -1, ns});      // [B,C,Ns]
  const auto k = reshape(lvl.key(f_r), {b, -1, nr});        // [B,C,Nr]
  const auto v = reshape(lvl.value(f_r), {b, cs, nr});      // [B,Cs,Nr]
  const auto cmat = softmax(matmul(permute(q, {0, 2, 1}), k), -1);  // [B,Ns,Nr]
  const auto f_rs = reshape(matmul(v, permute(cmat, {0, 2, 1})), {b, cs, hs, ws});

  Tensor<T> v1, v2;
  if (hooks.forced_valves) {
    v1 = Tensor<T>(f_s.shape(), hooks.forced_valves->first);
    v2 = Tensor<T>(f_s.shape(), hooks.forced_valves->second);
  } else {
    const auto gates = sigmoid(lvl.valves(concat_channels(f_s, f_rs)));
    v1 = slice(gates, 1, 0, cs);
    v2 = slice(gates, 1, cs, 2 * cs);
  }
  if (hooks.probe) {
    hooks.probe->correlation.push_back(cmat);
    hooks.probe->valve_source.push_back(v1);
    hooks.probe->valve_reference.push_back(v2);
  }
  return add(mul(v1, f_s), mul(v2, f_rs));
}

template <typename T>
Tensor<T> Generator<T>::pvcattn(const Tensor<T>& f_s, const Tensor<T>& f_r, const ForwardHooks<T>& hooks) const {
  const std::int64_t h = f_s.dim(2), w = f_s.dim(3);
  std::vector<Tensor<T>> outputs;
  for (int k = 0; k < config_.pyramid_levels; ++k) {
    const AttentionLevel& lvl = levels_[static_cast<std::size_t>(k)];
    const int factor = 1 << k;
    if (h / factor < 1 || w / factor < 1 || f_r.dim(2) / factor < 1 || f_r.dim(3) / factor < 1) {
      throw ConfigError("pvcattn: level " + std::to_string(k) + " resolution falls below one pixel for " +
                        scs::to_string(f_s.shape()));
    }
    auto s = lvl.pre_source(f_s);
    auto r = lvl.pre_reference(f_r);
    if (factor > 1) {
      s = avg_pool2d(s, factor);
      r = avg_pool2d(r, factor);
    }
    auto t = vcattn(k, s, r, hooks);
    if (factor > 1) t = bilinear_resize_corner_aligned(t, h, w);
    outputs.push_back(t);
  }
  return pvc_post_(outputs.size() == 1 ? outputs.front() : concat(outputs, 1));
}

template <typename T>
Tensor<T> Generator<T>::self_attention(const Tensor<T>& x) const {
  const std::int64_t b = x.dim(0), c = x.dim(1), n = x.dim(2) * x.dim(3);
  const auto f = reshape(sa_f_(x), {b, -1, n});
  const auto g = reshape(sa_g_(x), {b, -1, n});
  const auto hv = reshape(sa_h_(x), {b, c, n});
  // attn[j, i]: weight of input position i for output position j.
  const auto attn = softmax(matmul(permute(g, {0, 2, 1}), f), -1);
  const auto o = reshape(matmul(hv, permute(attn, {0, 2, 1})), x.shape());
  return add(mul(o, sa_gamma_), x);
}

template <typename T>
Tensor<T> Generator<T>::decode_color(const Tensor<T>& f_int) const {
  auto x = self_attention(f_int);
  const std::int64_t h = f_int.dim(2), w = f_int.dim(3);
  x = act(dec_up1_(bilinear_resize_corner_aligned(x, 2 * h, 2 * w)));
  return act(dec_up2_(bilinear_resize_corner_aligned(x, 4 * h, 4 * w)));
}

template <typename T>
Tensor<T> Generator<T>::sr_encode(const Tensor<T>& f_init) const {
  // The identity path of the block chain is the global skip: with every
  // residual branch at zero the output is F_init itself.
  auto x = f_init;
  for (const auto& [c1, c2] : sr_blocks_) x = add(x, c2(act(c1(x))));
  return x;
}

template <typename T>
Tensor<T> Generator<T>::fuse(const Tensor<T>& f_tex, const Tensor<T>& f_color) const {
  if (f_tex.dim(2) != f_color.dim(2) || f_tex.dim(3) != f_color.dim(3)) {
    throw ShapeError("fuse: spatial mismatch " + scs::to_string(f_tex.shape()) + " vs " + scs::to_string(f_color.shape()));
  }
  return fuse_(concat_channels(f_tex, f_color));
}

template <typename T>
Tensor<T> Generator<T>::cpm_forward(const Tensor<T>& f_cs, double p) const {
  const std::int64_t b = f_cs.dim(0), hs = f_cs.dim(2), ws = f_cs.dim(3);
  const Tensor<T> z = cpm_coords<T>(hs, ws, p);
  const std::int64_t ho = z.dim(1), wo = z.dim(2);
  const auto main = bilinear_resize_corner_aligned(f_cs, ho, wo);
  std::vector<Tensor<T>> zs(static_cast<std::size_t>(b), reshape(z, {1, 2, ho, wo}));
  auto x = permute(concat_channels(main, b == 1 ? zs.front() : concat(zs, 0)), {0, 2, 3, 1});
  x = act(cpm_[0](x));
  x = act(cpm_[1](x));
  x = act(cpm_[2](x));
  x = cpm_[3](x);
  return permute(x, {0, 3, 1, 2});
}

template <typename T>
Tensor<T> Generator<T>::forward(const Tensor<T>& source_l, const std::optional<Tensor<T>>& reference, Mode mode,
                                double p, const ForwardHooks<T>& hooks) const {
  if (mode == Mode::kRef && !reference) throw std::invalid_argument("Ref mode requires a reference image");
  const auto f_init = init_conv(source_l);
  const auto f_s = encode_source(f_init);
  Tensor<T> f_int = f_s;
  if (mode == Mode::kRef) f_int = pvcattn(f_s, encode_reference(*reference), hooks);
  const auto f_color = decode_color(f_int);
  const auto f_tex = sr_encode(f_init);
  return cpm_forward(fuse(f_tex, f_color), p);
}

template <typename T>
Discriminator<T>::Discriminator(const ScsNetConfig& config, ParamStore<T>& store, Rng& rng) : slope_(config.slope) {
  int cin = 3, cout = config.disc_base;
  for (int i = 0; i < 4; ++i) {
    convs_.push_back(make_conv(store, rng, "d.conv" + std::to_string(i), cin, cout, 3, 2));
    cin = cout;
    cout *= 2;
  }
  head_ = make_dense(store, rng, "d.head", cin, 1);
}

template <typename T>
Tensor<T> Discriminator<T>::operator()(const Tensor<T>& image) const {
  auto x = image;
  for (const auto& c : convs_) x = leaky_relu(c(x), static_cast<T>(slope_));
  const std::int64_t b = x.dim(0), c = x.dim(1);
  return head_(reduce_mean(reshape(x, {b, c, -1}), 2));
}

template <typename T>
ScsNet<T>::ScsNet(const ScsNetConfig& config, std::uint64_t seed)
    : config_(config), rng_(derive_seed(seed, 0x5c5)), generator_(config_, params_, rng_), discriminator_(config_, params_, rng_) {}

template <typename T>
std::vector<std::string> ScsNet<T>::generator_param_names(Mode mode) const {
  std::vector<std::string> out;
  for (const auto& e : params_.entries()) {
    if (e.name.rfind("g.", 0) != 0) continue;
    bool ref_only = false;
    for (const char* prefix : kReferenceOnlyPrefixes) ref_only = ref_only || e.name.rfind(prefix, 0) == 0;
    if (mode == Mode::kAuto && ref_only) continue;
    out.push_back(e.name);
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> ScsNet<T>::generator_params(Mode mode) const {
  std::vector<Tensor<T>> out;
  for (const auto& name : generator_param_names(mode)) out.push_back(params_.get(name));
  return out;
}

template Conv<float> make_conv(ParamStore<float>&, Rng&, const std::string&, int, int, int, int);
template Conv<double> make_conv(ParamStore<double>&, Rng&, const std::string&, int, int, int, int);
template Dense<float> make_dense(ParamStore<float>&, Rng&, const std::string&, int, int);
template Dense<double> make_dense(ParamStore<double>&, Rng&, const std::string&, int, int);
template Tensor<float> cpm_coords(std::int64_t, std::int64_t, double);
template Tensor<double> cpm_coords(std::int64_t, std::int64_t, double);
template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;
template class ScsNet<float>;
template class ScsNet<double>;

}  // namespace scs::model
