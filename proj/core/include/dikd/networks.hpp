#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dikd/adaptive_conv.hpp"
#include "dikd/ops.hpp"
#include "dikd/tensor.hpp"

namespace dikd {

template <typename T>
using Params = std::vector<std::pair<std::string, TensorT<T>>>;

struct NetworkConfig {
  int levels = 3;          // encoder breakpoints L
  int base_channels = 16;  // channels after level 1, doubling per level
  int input_size = 32;     // H = W
  int kernel_size = 3;     // adaptive-conv K
  bool filler_enabled = true;

  int channels_at(int level) const {  // level in 1..L
    return base_channels << (level - 1);
  }
  void validate() const {
    if (levels < 1 || base_channels < 1 || kernel_size < 1 ||
        kernel_size % 2 == 0)
      throw std::invalid_argument("NetworkConfig: invalid levels/channels/K");
    if (input_size % (1 << levels) != 0)
      throw std::invalid_argument(
          "NetworkConfig: input_size must be divisible by 2^levels");
  }
};

namespace detail {

// Per-parameter init stream derived from the name, so adding or removing a
// sub-network leaves every other parameter's init untouched.
template <typename T>
void init_uniform(TensorT<T>& t, const std::string& name, uint64_t seed,
                  double bound) {
  Rng rng(hash_name(name) ^ (seed * 0x9e3779b97f4a7c15ull + 0x1234567));
  for (T& v : t.data()) v = T(rng.uniform(-bound, bound));
}

}  // namespace detail

template <typename T>
struct ConvLayer {
  TensorT<T> w, b;
  int stride = 1, pad = 1;

  static ConvLayer make(const std::string& name, int cin, int cout, int k,
                        int stride, int pad, uint64_t seed,
                        bool zero_init = false) {
    ConvLayer l;
    l.w = TensorT<T>::zeros({cout, cin, k, k}, true);
    l.b = TensorT<T>::zeros({cout}, true);
    l.stride = stride;
    l.pad = pad;
    if (!zero_init) {
      const double bound = std::sqrt(6.0 / (double(cin) * k * k));
      detail::init_uniform(l.w, name + ".w", seed, bound);
    }
    return l;
  }

  TensorT<T> operator()(const TensorT<T>& x) const {
    return conv2d(x, w, b, stride, pad);
  }

  void collect(Params<T>& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".w", w);
    out.emplace_back(prefix + ".b", b);
  }
};

// Channel gate: global average pool -> C/2 -> ELU -> C -> softmax.
// Output lives on the probability simplex.
template <typename T>
struct MetaNet {
  TensorT<T> w1, b1, w2, b2;
  int channels = 0;

  static MetaNet make(const std::string& name, int channels, uint64_t seed) {
    MetaNet n;
    n.channels = channels;
    const int hidden = std::max(1, channels / 2);
    n.w1 = TensorT<T>::zeros({hidden, channels}, true);
    n.b1 = TensorT<T>::zeros({hidden}, true);
    n.w2 = TensorT<T>::zeros({channels, hidden}, true);
    n.b2 = TensorT<T>::zeros({channels}, true);
    detail::init_uniform(n.w1, name + ".w1", seed, std::sqrt(6.0 / channels));
    detail::init_uniform(n.w2, name + ".w2", seed, std::sqrt(6.0 / hidden));
    return n;
  }

  TensorT<T> operator()(const TensorT<T>& feature) const {
    if (feature.shape().size() != 3 || feature.shape()[0] != channels)
      throw ShapeError("MetaNet: feature " + shape_str(feature.shape()) +
                       " does not match " + std::to_string(channels) +
                       " channels");
    return softmax(linear(elu(linear(global_avg_pool(feature), w1, b1)), w2, b2));
  }

  void collect(Params<T>& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".w1", w1);
    out.emplace_back(prefix + ".b1", b1);
    out.emplace_back(prefix + ".w2", w2);
    out.emplace_back(prefix + ".b2", b2);
  }
};

// Adaptive convolution layer: fixed weight W plus small generator stacks for
// the per-pixel kernel field V (softplus, hence non-negative) and the
// per-tap fractional offsets. The offset generator's final stage starts at
// zero so training begins as an ordinary convolution.
template <typename T>
struct AdaptiveConvLayer {
  int k = 3;
  TensorT<T> w;  // [Cout,Cin,K,K]
  ConvLayer<T> kgen1, kgen2;  // -> K^2 kernel logits
  ConvLayer<T> ogen1, ogen2;  // -> 2K^2 offsets (dy,dx per tap)

  static AdaptiveConvLayer make(const std::string& name, int cin, int cout,
                                int k, uint64_t seed) {
    AdaptiveConvLayer l;
    l.k = k;
    l.w = TensorT<T>::zeros({cout, cin, k, k}, true);
    detail::init_uniform(l.w, name + ".W", seed,
                         std::sqrt(6.0 / (double(cin) * k * k)));
    const int hidden = std::max(4, cin / 2);
    l.kgen1 = ConvLayer<T>::make(name + ".kgen1", cin, hidden, 3, 1, 1, seed);
    l.kgen2 = ConvLayer<T>::make(name + ".kgen2", hidden, k * k, 3, 1, 1, seed);
    l.ogen1 = ConvLayer<T>::make(name + ".ogen1", cin, hidden, 3, 1, 1, seed);
    l.ogen2 = ConvLayer<T>::make(name + ".ogen2", hidden, 2 * k * k, 3, 1, 1,
                                 seed, /*zero_init=*/true);
    return l;
  }

  // (V, Delta) from the input feature map.
  std::pair<TensorT<T>, TensorT<T>> generate(const TensorT<T>& x) const {
    if (x.shape().size() != 3 || x.shape()[1] < k || x.shape()[2] < k)
      throw std::invalid_argument(
          "AdaptiveConvLayer: input spatial size must be >= K, got " +
          shape_str(x.shape()));
    TensorT<T> v = softplus(kgen2(elu(kgen1(x))));
    TensorT<T> d = ogen2(elu(ogen1(x)));
    return {std::move(v), std::move(d)};
  }

  TensorT<T> operator()(const TensorT<T>& x) const {
    auto [v, d] = generate(x);
    return adaptive_conv(x, v, d, w);
  }

  void collect(Params<T>& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".W", w);
    kgen1.collect(out, prefix + ".kgen1");
    kgen2.collect(out, prefix + ".kgen2");
    ogen1.collect(out, prefix + ".ogen1");
    ogen2.collect(out, prefix + ".ogen2");
  }
};

// Residual filler branch: two adaptive convolutions at the post-downsample
// resolution. The residual add happens in the encoder (E = feat + fill * M).
template <typename T>
struct FillerBlock {
  AdaptiveConvLayer<T> ac1, ac2;

  static FillerBlock make(const std::string& name, int channels, int k,
                          uint64_t seed) {
    FillerBlock f;
    f.ac1 = AdaptiveConvLayer<T>::make(name + ".ac1", channels, channels, k, seed);
    f.ac2 = AdaptiveConvLayer<T>::make(name + ".ac2", channels, channels, k, seed);
    // The residual branch starts as a no-op: the gated add then leaves the
    // plain encoder path untouched until the branch has learned something.
    for (T& v : f.ac2.w.data()) v = T(0);
    return f;
  }

  TensorT<T> operator()(const TensorT<T>& x) const { return ac2(elu(ac1(x))); }

  void collect(Params<T>& out, const std::string& prefix) const {
    ac1.collect(out, prefix + ".ac1");
    ac2.collect(out, prefix + ".ac2");
  }
};

// Plain decoder: L x (nearest upsample + `depth` x (conv + ELU)), then a
// conv to RGB with identity output. Hard clamping to [0,1] is applied
// outside the graph at evaluation time only. The teacher uses depth 2 for
// extra reconstruction capacity; the student stays at depth 1.
template <typename T>
struct Decoder {
  int depth = 1;
  std::vector<ConvLayer<T>> blocks;  // levels * depth entries
  ConvLayer<T> out_conv;

  static Decoder make(const std::string& name, const NetworkConfig& cfg,
                      uint64_t seed, int depth = 1) {
    Decoder d;
    d.depth = depth;
    for (int m = cfg.levels; m >= 1; --m) {
      const int cin = cfg.channels_at(m);
      const int cout = m > 1 ? cfg.channels_at(m - 1) : cfg.base_channels;
      // Multi-conv blocks keep a wider internal width; the extra capacity is
      // internal to the decoder, so level channel counts stay unchanged.
      const int mid = depth > 1 ? 2 * cout : cout;
      const std::string base =
          name + ".up" + std::to_string(cfg.levels - m + 1);
      d.blocks.push_back(ConvLayer<T>::make(
          base, cin, depth > 1 ? mid : cout, 3, 1, 1, seed));
      for (int r = 1; r < depth; ++r)
        d.blocks.push_back(ConvLayer<T>::make(base + "_" + std::to_string(r),
                                              mid, r == depth - 1 ? cout : mid,
                                              3, 1, 1, seed));
    }
    d.out_conv = ConvLayer<T>::make(name + ".out", cfg.base_channels, 3, 3, 1,
                                    1, seed);
    return d;
  }

  TensorT<T> operator()(const TensorT<T>& x) const {
    TensorT<T> cur = x;
    for (size_t i = 0; i < blocks.size(); ++i) {
      if (i % size_t(depth) == 0) cur = upsample_nearest(cur, 2);
      cur = elu(blocks[i](cur));
    }
    return out_conv(cur);
  }

  void collect(Params<T>& out, const std::string& prefix) const {
    for (size_t i = 0; i < blocks.size(); ++i) {
      const std::string base =
          prefix + ".up" + std::to_string(i / size_t(depth) + 1);
      const size_t r = i % size_t(depth);
      blocks[i].collect(out, r == 0 ? base : base + "_" + std::to_string(r));
    }
    out_conv.collect(out, prefix + ".out");
  }
};

// Under-complete autoencoder trained on ground-truth reconstruction. Frozen
// (forward under NoGradGuard, features detached) while the student trains.
template <typename T>
struct TeacherAE {
  NetworkConfig cfg;
  std::vector<ConvLayer<T>> enc;   // per level: stride-2 conv
  std::vector<ConvLayer<T>> enc2;  // per level: stride-1 refinement conv
  Decoder<T> dec;

  static TeacherAE make(const NetworkConfig& cfg, uint64_t seed) {
    cfg.validate();
    TeacherAE t;
    t.cfg = cfg;
    for (int m = 1; m <= cfg.levels; ++m) {
      const int cin = m == 1 ? 3 : cfg.channels_at(m - 1);
      const int cout = cfg.channels_at(m);
      t.enc.push_back(ConvLayer<T>::make("teacher.enc" + std::to_string(m),
                                         cin, cout, 3, 2, 1, seed));
      t.enc2.push_back(ConvLayer<T>::make(
          "teacher.enc" + std::to_string(m) + "b", cout, cout, 3, 1, 1, seed));
    }
    t.dec = Decoder<T>::make("teacher.dec", cfg, seed, /*depth=*/2);
    return t;
  }

  // Post-downsample features x_1*..x_L* and the reconstruction. When frozen,
  // nothing is recorded and the outputs carry no graph.
  std::pair<std::vector<TensorT<T>>, TensorT<T>> forward(
      const TensorT<T>& gt, bool frozen) const {
    if (gt.shape() != Shape{3, cfg.input_size, cfg.input_size})
      throw ShapeError("TeacherAE: input " + shape_str(gt.shape()) +
                       " does not match config size " +
                       std::to_string(cfg.input_size));
    std::optional<NoGradGuard> guard;
    if (frozen) guard.emplace();
    std::vector<TensorT<T>> feats;
    TensorT<T> cur = gt;
    for (size_t m = 0; m < enc.size(); ++m) {
      cur = elu(enc2[m](elu(enc[m](cur))));
      feats.push_back(cur);
    }
    TensorT<T> recon = dec(cur);
    return {std::move(feats), std::move(recon)};
  }

  void collect(Params<T>& out) const {
    for (size_t m = 0; m < enc.size(); ++m) {
      enc[m].collect(out, "teacher.enc" + std::to_string(m + 1));
      enc2[m].collect(out, "teacher.enc" + std::to_string(m + 1) + "b");
    }
    dec.collect(out, "teacher.dec");
  }
};

// Inpainting student: encoder levels of f_feat (stride-2 conv + ELU) plus a
// filler branch gated to hole positions, a plain decoder, per-level channel
// gates (rho for cross, phi for self) and stride-2 alignment convolutions.
template <typename T>
struct StudentNet {
  NetworkConfig cfg;
  std::vector<ConvLayer<T>> feat;
  std::vector<FillerBlock<T>> fill;  // empty when filler disabled
  Decoder<T> dec;
  std::vector<MetaNet<T>> rho;          // L entries
  std::vector<MetaNet<T>> phi;          // L-1 entries
  std::vector<ConvLayer<T>> align_conv;  // L-1 entries

  static StudentNet make(const NetworkConfig& cfg, uint64_t seed) {
    cfg.validate();
    StudentNet s;
    s.cfg = cfg;
    for (int m = 1; m <= cfg.levels; ++m) {
      const int cin = m == 1 ? 4 : cfg.channels_at(m - 1);
      const int cout = cfg.channels_at(m);
      s.feat.push_back(ConvLayer<T>::make("student.feat" + std::to_string(m),
                                          cin, cout, 3, 2, 1, seed));
      if (cfg.filler_enabled)
        s.fill.push_back(FillerBlock<T>::make(
            "student.fill" + std::to_string(m), cout, cfg.kernel_size, seed));
      s.rho.push_back(
          MetaNet<T>::make("student.rho" + std::to_string(m), cout, seed));
      if (m < cfg.levels) {
        s.phi.push_back(MetaNet<T>::make("student.phi" + std::to_string(m),
                                         cfg.channels_at(m + 1), seed));
        s.align_conv.push_back(
            ConvLayer<T>::make("student.align" + std::to_string(m), cout,
                               cfg.channels_at(m + 1), 3, 2, 1, seed));
      }
    }
    s.dec = Decoder<T>::make("student.dec", cfg, seed);
    return s;
  }

  // masks[l] is the level-(l+1) pyramid mask as a 1xhxw tensor.
  // E_m = f_feat(E_{m-1}) + f_fill(.) * M_m; returns x_1..x_L.
  std::vector<TensorT<T>> encode(const TensorT<T>& input,
                                 const std::vector<TensorT<T>>& masks) const {
    if (input.shape() != Shape{4, cfg.input_size, cfg.input_size})
      throw ShapeError("StudentNet: input must be [4," +
                       std::to_string(cfg.input_size) + "," +
                       std::to_string(cfg.input_size) + "], got " +
                       shape_str(input.shape()));
    if (int(masks.size()) != cfg.levels)
      throw ShapeError("StudentNet: mask pyramid has " +
                       std::to_string(masks.size()) + " levels, expected " +
                       std::to_string(cfg.levels));
    std::vector<TensorT<T>> feats;
    TensorT<T> cur = input;
    for (int m = 0; m < cfg.levels; ++m) {
      TensorT<T> d = elu(feat[size_t(m)](cur));
      if (d.shape()[1] != masks[size_t(m)].shape()[1] ||
          d.shape()[2] != masks[size_t(m)].shape()[2])
        throw ShapeError("StudentNet: level " + std::to_string(m + 1) +
                         " mask " + shape_str(masks[size_t(m)].shape()) +
                         " does not match feature " + shape_str(d.shape()));
      if (!fill.empty())
        cur = add(d, mask_mul(fill[size_t(m)](d), masks[size_t(m)]));
      else
        cur = d;
      feats.push_back(cur);
    }
    return feats;
  }

  TensorT<T> decode(const TensorT<T>& x_last) const { return dec(x_last); }

  // f_l for self distillation; level in 1..L-1.
  TensorT<T> align(int level, const TensorT<T>& x_l) const {
    if (level < 1 || level >= cfg.levels)
      throw std::invalid_argument("StudentNet::align: level " +
                                  std::to_string(level) +
                                  " out of range [1,L-1]");
    return align_conv[size_t(level - 1)](x_l);
  }

  void collect(Params<T>& out) const {
    for (size_t m = 0; m < feat.size(); ++m)
      feat[m].collect(out, "student.feat" + std::to_string(m + 1));
    for (size_t m = 0; m < fill.size(); ++m)
      fill[m].collect(out, "student.fill" + std::to_string(m + 1));
    dec.collect(out, "student.dec");
    for (size_t m = 0; m < rho.size(); ++m)
      rho[m].collect(out, "student.rho" + std::to_string(m + 1));
    for (size_t m = 0; m < phi.size(); ++m)
      phi[m].collect(out, "student.phi" + std::to_string(m + 1));
    for (size_t m = 0; m < align_conv.size(); ++m)
      align_conv[m].collect(out, "student.align" + std::to_string(m + 1));
  }
};

template <typename T>
void set_requires_grad(Params<T>& params, bool on) {
  for (auto& [name, t] : params) t.impl()->requires_grad = on;
}

template <typename T>
bool has_non_finite(const TensorT<T>& t) {
  for (T v : t.data())
    if (!std::isfinite(double(v))) return true;
  return false;
}

}  // namespace dikd
