#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scs/ops.hpp"
#include "scs/params.hpp"

namespace scs::model {

enum class Mode { kAuto, kRef };

const char* to_string(Mode mode);
Mode parse_mode(const std::string& text);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ScsNetConfig {
  int base_channels = 64;
  int deep_channels = 256;
  int attn_qk_divisor = 8;
  int pyramid_levels = 3;
  int sr_blocks = 4;
  int cpm_hidden = 128;
  int cpm_layers = 4;
  int input_height = 128;
  int input_width = 128;
  int disc_base = 32;
  double slope = 0.2;

  int attn_qk_channels() const { return deep_channels / attn_qk_divisor; }
  /// Throws ConfigError naming the violated constraint.
  void validate() const;
};

/// Receives intermediate attention tensors when passed to a forward call.
template <typename T>
struct AttentionProbe {
  std::vector<Tensor<T>> correlation;  // CMat per pyramid level, [B, Ns, Nr]
  std::vector<Tensor<T>> valve_source; // V1 per level
  std::vector<Tensor<T>> valve_reference; // V2 per level
};

/// Test and diagnostic hooks for the attention path.
template <typename T>
struct ForwardHooks {
  /// Replaces the learned valves with constants (V1, V2) at every level.
  std::optional<std::pair<T, T>> forced_valves;
  AttentionProbe<T>* probe = nullptr;
};

template <typename T>
struct Conv {
  Tensor<T> weight, bias;
  int stride = 1;
  int padding = 0;
  Tensor<T> operator()(const Tensor<T>& x) const { return conv2d(x, weight, bias, stride, padding); }
};

template <typename T>
struct Dense {
  Tensor<T> weight, bias;
  Tensor<T> operator()(const Tensor<T>& x) const { return linear(x, weight, bias); }
};

/// Registers a Kaiming-initialized conv "<name>.weight" / "<name>.bias".
template <typename T>
Conv<T> make_conv(ParamStore<T>& store, Rng& rng, const std::string& name, int cin, int cout, int kernel, int stride = 1);
template <typename T>
Dense<T> make_dense(ParamStore<T>& store, Rng& rng, const std::string& name, int din, int dout);

/// Local relative coordinates of every output pixel for magnification p:
/// [2, floor(Hs p), floor(Ws p)], channel 0 is x, channel 1 is y, values in
/// [-1, 1). Output column j sits at x = j / W_out; its offset from the
/// anchor grid of pitch 1 / Ws is computed in exact integer arithmetic as
/// (j * Ws mod W_out) / W_out.
template <typename T>
Tensor<T> cpm_coords(std::int64_t hs, std::int64_t ws, double p);

/// Colorization branch, super-resolution branch and CPM head. Parameters are
/// registered under "g.".
template <typename T>
class Generator {
 public:
  Generator(const ScsNetConfig& config, ParamStore<T>& store, Rng& rng);

  /// [B,1,Hs,Ws] -> [B,base,Hs,Ws].
  Tensor<T> init_conv(const Tensor<T>& source_l) const;
  /// [B,base,Hs,Ws] -> [B,deep,Hs/4,Ws/4].
  Tensor<T> encode_source(const Tensor<T>& f_init) const;
  /// [B,3,Hs,Ws] -> [B,deep,Hs/4,Ws/4].
  Tensor<T> encode_reference(const Tensor<T>& reference_lab) const;
  /// Valve cross attention at one pyramid level.
  Tensor<T> vcattn(int level, const Tensor<T>& f_s, const Tensor<T>& f_r, const ForwardHooks<T>& hooks = {}) const;
  Tensor<T> pvcattn(const Tensor<T>& f_s, const Tensor<T>& f_r, const ForwardHooks<T>& hooks = {}) const;
  /// Residual self-attention over one feature map; identity while gamma is 0.
  Tensor<T> self_attention(const Tensor<T>& x) const;
  /// [B,deep,Hs/4,Ws/4] -> [B,base,Hs,Ws].
  Tensor<T> decode_color(const Tensor<T>& f_int) const;
  Tensor<T> sr_encode(const Tensor<T>& f_init) const;
  /// [B,base,..] x 2 -> [B,deep,Hs,Ws].
  Tensor<T> fuse(const Tensor<T>& f_tex, const Tensor<T>& f_color) const;
  /// [B,deep,Hs,Ws] -> normalized Lab [B,3,floor(Hs p),floor(Ws p)].
  Tensor<T> cpm_forward(const Tensor<T>& f_cs, double p) const;

  /// Full generator. In Auto mode the reference is ignored and the attention
  /// path is bypassed (F_int = F_s). Ref mode without a reference throws.
  Tensor<T> forward(const Tensor<T>& source_l, const std::optional<Tensor<T>>& reference, Mode mode, double p,
                    const ForwardHooks<T>& hooks = {}) const;

  const ScsNetConfig& config() const { return config_; }

 private:
  struct AttentionLevel {
    Conv<T> pre_source, pre_reference, query, key, value, valves;
  };
  struct Stage {
    Conv<T> down, refine;
  };

  Tensor<T> act(const Tensor<T>& x) const { return leaky_relu(x, static_cast<T>(config_.slope)); }
  Tensor<T> run_stage(const Stage& s, const Tensor<T>& x) const;

  ScsNetConfig config_;
  Conv<T> init_;
  Stage enc_s_[2];
  Conv<T> enc_r_stem_;
  Stage enc_r_[2];
  std::vector<AttentionLevel> levels_;
  Conv<T> pvc_post_;
  Conv<T> sa_f_, sa_g_, sa_h_;
  Tensor<T> sa_gamma_;
  Conv<T> dec_up1_, dec_up2_;
  std::vector<std::pair<Conv<T>, Conv<T>>> sr_blocks_;
  Conv<T> fuse_;
  std::vector<Dense<T>> cpm_;
};

/// Four stride-2 convolutions, global average pooling and a linear score.
/// Parameters are registered under "d.".
template <typename T>
class Discriminator {
 public:
  Discriminator(const ScsNetConfig& config, ParamStore<T>& store, Rng& rng);
  /// [B,3,H,W] -> logits [B,1].
  Tensor<T> operator()(const Tensor<T>& image) const;

 private:
  double slope_;
  std::vector<Conv<T>> convs_;
  Dense<T> head_;
};

/// Generator and discriminator sharing one flat parameter map.
template <typename T>
class ScsNet {
 public:
  ScsNet(const ScsNetConfig& config, std::uint64_t seed);
  ScsNet(const ScsNet&) = delete;
  ScsNet& operator=(const ScsNet&) = delete;
  ScsNet(ScsNet&&) = default;

  const ScsNetConfig& config() const { return config_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }
  const Generator<T>& generator() const { return generator_; }
  const Discriminator<T>& discriminator() const { return discriminator_; }

  /// Generator parameters that take part in a forward pass in `mode`.
  std::vector<Tensor<T>> generator_params(Mode mode) const;
  std::vector<std::string> generator_param_names(Mode mode) const;
  std::vector<Tensor<T>> discriminator_params() const { return params_.with_prefix("d."); }

 private:
  ScsNetConfig config_;
  ParamStore<T> params_;
  Rng rng_;
  Generator<T> generator_;
  Discriminator<T> discriminator_;
};

/// Prefixes of generator parameters used only in Ref mode.
inline constexpr const char* kReferenceOnlyPrefixes[] = {"g.enc_r.", "g.pvc."};

extern template class Generator<float>;
extern template class Generator<double>;
extern template class Discriminator<float>;
extern template class Discriminator<double>;
extern template class ScsNet<float>;
extern template class ScsNet<double>;

}  // namespace scs::model
