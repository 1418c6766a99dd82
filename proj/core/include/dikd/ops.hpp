#pragma once

#include <cmath>
#include <vector>

#include "dikd/tensor.hpp"

namespace dikd {

namespace detail {

template <typename T>
void check_same_shape(const TensorT<T>& a, const TensorT<T>& b,
                      const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

template <typename T>
void check_rank(const TensorT<T>& a, size_t rank, const char* op) {
  if (a.shape().size() != rank)
    throw ShapeError(std::string(op) + ": expected rank " +
                     std::to_string(rank) + ", got shape " +
                     shape_str(a.shape()));
}

// Accumulate g into the grad buffer of `t` if it participates in the graph.
template <typename T, typename F>
void accum_grad(const TensorT<T>& t, F&& fill) {
  if (t.impl()->needs_grad()) fill(t.impl()->grad_buf());
}

}  // namespace detail

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<T> y(a.data());
  for (size_t i = 0; i < y.size(); ++i) y[i] += b.data()[i];
  return TensorT<T>::make_result(
      a.shape(), std::move(y), {a, b}, [a, b](const std::vector<T>& g) {
        detail::accum_grad(a, [&](std::vector<T>& ga) {
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        });
        detail::accum_grad(b, [&](std::vector<T>& gb) {
          for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        });
      });
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<T> y(a.data());
  for (size_t i = 0; i < y.size(); ++i) y[i] -= b.data()[i];
  return TensorT<T>::make_result(
      a.shape(), std::move(y), {a, b}, [a, b](const std::vector<T>& g) {
        detail::accum_grad(a, [&](std::vector<T>& ga) {
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        });
        detail::accum_grad(b, [&](std::vector<T>& gb) {
          for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        });
      });
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<T> y(a.data());
  for (size_t i = 0; i < y.size(); ++i) y[i] *= b.data()[i];
  return TensorT<T>::make_result(
      a.shape(), std::move(y), {a, b}, [a, b](const std::vector<T>& g) {
        detail::accum_grad(a, [&](std::vector<T>& ga) {
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.data()[i];
        });
        detail::accum_grad(b, [&](std::vector<T>& gb) {
          for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.data()[i];
        });
      });
}

template <typename T>
TensorT<T> scalar_mul(const TensorT<T>& a, T s) {
  std::vector<T> y(a.data());
  for (T& v : y) v *= s;
  return TensorT<T>::make_result(
      a.shape(), std::move(y), {a}, [a, s](const std::vector<T>& g) {
        detail::accum_grad(a, [&](std::vector<T>& ga) {
          for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
        });
      });
}

template <typename T>
TensorT<T> sum(const TensorT<T>& a) {
  T acc = T(0);
  for (T v : a.data()) acc += v;
  return TensorT<T>::make_result(
      {1}, {acc}, {a}, [a](const std::vector<T>& g) {
        detail::accum_grad(a, [&](std::vector<T>& ga) {
          for (T& v : ga) v += g[0];
        });
      });
}

template <typename T>
TensorT<T> mean(const TensorT<T>& a) {
  T acc = T(0);
  for (T v : a.data()) acc += v;
  const T inv = T(1) / T(a.size());
  return TensorT<T>::make_result(
      {1}, {acc * inv}, {a}, [a, inv](const std::vector<T>& g) {
        detail::accum_grad(a, [&](std::vector<T>& ga) {
          for (T& v : ga) v += g[0] * inv;
        });
      });
}

template <typename T>
TensorT<T> elu(const TensorT<T>& a) {
  std::vector<T> y(a.data());
  for (T& v : y) v = v > T(0) ? v : std::expm1(v);
  return TensorT<T>::make_result(
      a.shape(), std::move(y), {a}, [a](const std::vector<T>& g) {
        detail::accum_grad(a, [&](std::vector<T>& ga) {
          const auto& xd = a.data();
          for (size_t i = 0; i < g.size(); ++i)
            ga[i] += g[i] * (xd[i] > T(0) ? T(1) : std::exp(xd[i]));
        });
      });
}

template <typename T>
TensorT<T> softplus(const TensorT<T>& a) {
  std::vector<T> y(a.data());
  for (T& v : y) v = v > T(20) ? v : std::log1p(std::exp(v));
  return TensorT<T>::make_result(
      a.shape(), std::move(y), {a}, [a](const std::vector<T>& g) {
        detail::accum_grad(a, [&](std::vector<T>& ga) {
          const auto& xd = a.data();
          for (size_t i = 0; i < g.size(); ++i)
            ga[i] += g[i] / (T(1) + std::exp(-xd[i]));
        });
      });
}

// y = W x + b with x:[N], W:[M x N], b:[M].
template <typename T>
TensorT<T> linear(const TensorT<T>& x, const TensorT<T>& w,
                  const TensorT<T>& b) {
  detail::check_rank(x, 1, "linear");
  detail::check_rank(w, 2, "linear");
  detail::check_rank(b, 1, "linear");
  const int m = w.shape()[0], n = w.shape()[1];
  if (x.shape()[0] != n || b.shape()[0] != m)
    throw ShapeError("linear: incompatible shapes x" + shape_str(x.shape()) +
                     " W" + shape_str(w.shape()) + " b" +
                     shape_str(b.shape()));
  std::vector<T> y(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    T acc = b.data()[i];
    const T* wr = w.data().data() + size_t(i) * n;
    for (int j = 0; j < n; ++j) acc += wr[j] * x.data()[j];
    y[i] = acc;
  }
  return TensorT<T>::make_result(
      {m}, std::move(y), {x, w, b}, [x, w, b, m, n](const std::vector<T>& g) {
        detail::accum_grad(x, [&](std::vector<T>& gx) {
          for (int i = 0; i < m; ++i) {
            const T* wr = w.data().data() + size_t(i) * n;
            for (int j = 0; j < n; ++j) gx[j] += g[i] * wr[j];
          }
        });
        detail::accum_grad(w, [&](std::vector<T>& gw) {
          for (int i = 0; i < m; ++i) {
            T* gr = gw.data() + size_t(i) * n;
            for (int j = 0; j < n; ++j) gr[j] += g[i] * x.data()[j];
          }
        });
        detail::accum_grad(b, [&](std::vector<T>& gb) {
          for (int i = 0; i < m; ++i) gb[i] += g[i];
        });
      });
}

template <typename T>
TensorT<T> softmax(const TensorT<T>& x) {
  detail::check_rank(x, 1, "softmax");
  T mx = x.data()[0];
  for (T v : x.data()) mx = std::max(mx, v);
  std::vector<T> y(x.data().size());
  T z = T(0);
  for (size_t i = 0; i < y.size(); ++i) {
    y[i] = std::exp(x.data()[i] - mx);
    z += y[i];
  }
  for (T& v : y) v /= z;
  const std::vector<T> yv = y;  // kept for the backward formula
  return TensorT<T>::make_result(
      x.shape(), std::move(y), {x}, [x, yv](const std::vector<T>& g) {
        detail::accum_grad(x, [&](std::vector<T>& gx) {
          T dot = T(0);
          for (size_t i = 0; i < g.size(); ++i) dot += g[i] * yv[i];
          for (size_t i = 0; i < g.size(); ++i)
            gx[i] += yv[i] * (g[i] - dot);
        });
      });
}

// [C x H x W] -> [C], spatial mean per channel.
template <typename T>
TensorT<T> global_avg_pool(const TensorT<T>& x) {
  detail::check_rank(x, 3, "global_avg_pool");
  const int c = x.shape()[0];
  const int hw = x.shape()[1] * x.shape()[2];
  const T inv = T(1) / T(hw);
  std::vector<T> y(static_cast<size_t>(c));
  for (int i = 0; i < c; ++i) {
    T acc = T(0);
    const T* p = x.data().data() + size_t(i) * hw;
    for (int j = 0; j < hw; ++j) acc += p[j];
    y[i] = acc * inv;
  }
  return TensorT<T>::make_result(
      {c}, std::move(y), {x}, [x, c, hw, inv](const std::vector<T>& g) {
        detail::accum_grad(x, [&](std::vector<T>& gx) {
          for (int i = 0; i < c; ++i) {
            T* p = gx.data() + size_t(i) * hw;
            const T gi = g[i] * inv;
            for (int j = 0; j < hw; ++j) p[j] += gi;
          }
        });
      });
}

// result[c] = sum_{h,w} m[h,w] * d[c,h,w]^2. Differentiable w.r.t. d only;
// m is a binary constant.
template <typename T>
TensorT<T> masked_sq_norm(const TensorT<T>& d, const TensorT<T>& m) {
  detail::check_rank(d, 3, "masked_sq_norm");
  detail::check_rank(m, 3, "masked_sq_norm");
  if (m.shape()[0] != 1 || m.shape()[1] != d.shape()[1] ||
      m.shape()[2] != d.shape()[2])
    throw ShapeError("masked_sq_norm: mask " + shape_str(m.shape()) +
                     " does not match feature " + shape_str(d.shape()));
  const int c = d.shape()[0];
  const int hw = d.shape()[1] * d.shape()[2];
  std::vector<T> y(static_cast<size_t>(c));
  for (int i = 0; i < c; ++i) {
    T acc = T(0);
    const T* p = d.data().data() + size_t(i) * hw;
    const T* mm = m.data().data();
    for (int j = 0; j < hw; ++j) acc += mm[j] * p[j] * p[j];
    y[i] = acc;
  }
  return TensorT<T>::make_result(
      {c}, std::move(y), {d}, [d, m, c, hw](const std::vector<T>& g) {
        detail::accum_grad(d, [&](std::vector<T>& gd) {
          const T* mm = m.data().data();
          for (int i = 0; i < c; ++i) {
            const T* p = d.data().data() + size_t(i) * hw;
            T* gp = gd.data() + size_t(i) * hw;
            const T gi = T(2) * g[i];
            for (int j = 0; j < hw; ++j) gp[j] += gi * mm[j] * p[j];
          }
        });
      });
}

// Mean of |d| over masked elements (mask broadcast across channels).
// Empty mask region yields exactly 0.
template <typename T>
TensorT<T> masked_l1_mean(const TensorT<T>& d, const TensorT<T>& m) {
  detail::check_rank(d, 3, "masked_l1_mean");
  detail::check_rank(m, 3, "masked_l1_mean");
  if (m.shape()[0] != 1 || m.shape()[1] != d.shape()[1] ||
      m.shape()[2] != d.shape()[2])
    throw ShapeError("masked_l1_mean: mask " + shape_str(m.shape()) +
                     " does not match " + shape_str(d.shape()));
  const int c = d.shape()[0];
  const int hw = d.shape()[1] * d.shape()[2];
  const T* mm = m.data().data();
  T cnt = T(0);
  for (int j = 0; j < hw; ++j) cnt += mm[j];
  if (cnt == T(0))
    return TensorT<T>::make_result({1}, {T(0)}, {d},
                                   [](const std::vector<T>&) {});
  const T inv = T(1) / (cnt * T(c));
  T acc = T(0);
  for (int i = 0; i < c; ++i) {
    const T* p = d.data().data() + size_t(i) * hw;
    for (int j = 0; j < hw; ++j) acc += mm[j] * std::abs(p[j]);
  }
  return TensorT<T>::make_result(
      {1}, {acc * inv}, {d}, [d, m, c, hw, inv](const std::vector<T>& g) {
        detail::accum_grad(d, [&](std::vector<T>& gd) {
          const T* mm2 = m.data().data();
          for (int i = 0; i < c; ++i) {
            const T* p = d.data().data() + size_t(i) * hw;
            T* gp = gd.data() + size_t(i) * hw;
            for (int j = 0; j < hw; ++j) {
              const T s = p[j] > T(0) ? T(1) : (p[j] < T(0) ? T(-1) : T(0));
              gp[j] += g[0] * inv * mm2[j] * s;
            }
          }
        });
      });
}

// x[c,h,w] * m[0,h,w], broadcast over channels; the mask is constant.
template <typename T>
TensorT<T> mask_mul(const TensorT<T>& x, const TensorT<T>& m) {
  detail::check_rank(x, 3, "mask_mul");
  detail::check_rank(m, 3, "mask_mul");
  if (m.shape()[0] != 1 || m.shape()[1] != x.shape()[1] ||
      m.shape()[2] != x.shape()[2])
    throw ShapeError("mask_mul: mask " + shape_str(m.shape()) +
                     " does not match " + shape_str(x.shape()));
  const int c = x.shape()[0];
  const int hw = x.shape()[1] * x.shape()[2];
  std::vector<T> y(x.data());
  for (int i = 0; i < c; ++i) {
    T* p = y.data() + size_t(i) * hw;
    const T* mm = m.data().data();
    for (int j = 0; j < hw; ++j) p[j] *= mm[j];
  }
  return TensorT<T>::make_result(
      x.shape(), std::move(y), {x}, [x, m, c, hw](const std::vector<T>& g) {
        detail::accum_grad(x, [&](std::vector<T>& gx) {
          const T* mm = m.data().data();
          for (int i = 0; i < c; ++i) {
            const T* gp = g.data() + size_t(i) * hw;
            T* xp = gx.data() + size_t(i) * hw;
            for (int j = 0; j < hw; ++j) xp[j] += gp[j] * mm[j];
          }
        });
      });
}

// Cross-correlation with zero padding. x:[Cin,H,W], w:[Cout,Cin,K,K], b:[Cout].
template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w,
                  const TensorT<T>& b, int stride, int padding) {
  detail::check_rank(x, 3, "conv2d");
  detail::check_rank(w, 4, "conv2d");
  detail::check_rank(b, 1, "conv2d");
  const int cin = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  const int cout = w.shape()[0], k = w.shape()[2];
  if (w.shape()[1] != cin)
    throw ShapeError("conv2d: input channels " + shape_str(x.shape()) +
                     " do not match weight " + shape_str(w.shape()));
  if (w.shape()[3] != k || k % 2 == 0)
    throw std::invalid_argument("conv2d: kernel must be square with odd size, got " +
                                shape_str(w.shape()));
  if (b.shape()[0] != cout)
    throw ShapeError("conv2d: bias " + shape_str(b.shape()) +
                     " does not match weight " + shape_str(w.shape()));
  if (stride < 1 || padding < 0)
    throw std::invalid_argument("conv2d: stride must be >=1 and padding >=0");
  const int ho = (h + 2 * padding - k) / stride + 1;
  const int wo = (wd + 2 * padding - k) / stride + 1;
  if (h + 2 * padding < k || wd + 2 * padding < k || ho < 1 || wo < 1)
    throw std::invalid_argument("conv2d: output would be empty for input " +
                                shape_str(x.shape()));

  // Valid output-column range for a given kernel column kx:
  // 0 <= ox*stride - padding + kx < W.
  auto col_range = [stride, padding](int kx, int extent, int out_extent,
                                     int& o0, int& o1) {
    const int a = padding - kx;
    o0 = a <= 0 ? 0 : (a + stride - 1) / stride;
    const int num = extent - 1 + padding - kx;
    o1 = num < 0 ? -1 : std::min(out_extent - 1, num / stride);
  };

  std::vector<T> y(size_t(cout) * ho * wo);
  const T* xd = x.data().data();
  const T* wdat = w.data().data();
  for (int co = 0; co < cout; ++co) {
    T* yc = y.data() + size_t(co) * ho * wo;
    const T bv = b.data()[co];
    for (int i = 0; i < ho * wo; ++i) yc[i] = bv;
    for (int ci = 0; ci < cin; ++ci) {
      const T* xc = xd + size_t(ci) * h * wd;
      for (int ky = 0; ky < k; ++ky) {
        int oy0, oy1;
        col_range(ky, h, ho, oy0, oy1);
        for (int kx = 0; kx < k; ++kx) {
          const T wv = wdat[((size_t(co) * cin + ci) * k + ky) * k + kx];
          int ox0, ox1;
          col_range(kx, wd, wo, ox0, ox1);
          for (int oy = oy0; oy <= oy1; ++oy) {
            const int iy = oy * stride - padding + ky;
            const T* xrow = xc + size_t(iy) * wd - padding + kx;
            T* yrow = yc + size_t(oy) * wo;
            if (stride == 1) {
              for (int ox = ox0; ox <= ox1; ++ox) yrow[ox] += wv * xrow[ox];
            } else {
              for (int ox = ox0; ox <= ox1; ++ox)
                yrow[ox] += wv * xrow[size_t(ox) * stride];
            }
          }
        }
      }
    }
  }

  return TensorT<T>::make_result(
      {cout, ho, wo}, std::move(y), {x, w, b},
      [x, w, b, stride, padding, cin, h, wd, cout, k, ho, wo,
       col_range](const std::vector<T>& g) {
        const bool need_x = x.impl()->needs_grad();
        const bool need_w = w.impl()->needs_grad();
        detail::accum_grad(b, [&](std::vector<T>& gb) {
          for (int co = 0; co < cout; ++co) {
            const T* gc = g.data() + size_t(co) * ho * wo;
            T acc = T(0);
            for (int i = 0; i < ho * wo; ++i) acc += gc[i];
            gb[co] += acc;
          }
        });
        if (!need_x && !need_w) return;
        std::vector<T>* gx = need_x ? &x.impl()->grad_buf() : nullptr;
        std::vector<T>* gw = need_w ? &w.impl()->grad_buf() : nullptr;
        const T* xd = x.data().data();
        const T* wdat = w.data().data();
        for (int co = 0; co < cout; ++co) {
          const T* gc = g.data() + size_t(co) * ho * wo;
          for (int ci = 0; ci < cin; ++ci) {
            const T* xc = xd + size_t(ci) * h * wd;
            T* gxc = need_x ? gx->data() + size_t(ci) * h * wd : nullptr;
            for (int ky = 0; ky < k; ++ky) {
              int oy0, oy1;
              col_range(ky, h, ho, oy0, oy1);
              for (int kx = 0; kx < k; ++kx) {
                const size_t wi = ((size_t(co) * cin + ci) * k + ky) * k + kx;
                const T wv = wdat[wi];
                int ox0, ox1;
                col_range(kx, wd, wo, ox0, ox1);
                T wacc = T(0);
                for (int oy = oy0; oy <= oy1; ++oy) {
                  const int iy = oy * stride - padding + ky;
                  const T* xrow = xc + size_t(iy) * wd - padding + kx;
                  const T* grow = gc + size_t(oy) * wo;
                  if (need_x) {
                    T* gxrow = gxc + size_t(iy) * wd - padding + kx;
                    for (int ox = ox0; ox <= ox1; ++ox) {
                      const size_t ix = size_t(ox) * stride;
                      wacc += grow[ox] * xrow[ix];
                      gxrow[ix] += wv * grow[ox];
                    }
                  } else {
                    for (int ox = ox0; ox <= ox1; ++ox)
                      wacc += grow[ox] * xrow[size_t(ox) * stride];
                  }
                }
                if (need_w) (*gw)[wi] += wacc;
              }
            }
          }
        }
      });
}

// Nearest-neighbor upsampling by an integer factor.
template <typename T>
TensorT<T> upsample_nearest(const TensorT<T>& x, int factor) {
  detail::check_rank(x, 3, "upsample_nearest");
  if (factor < 1)
    throw std::invalid_argument("upsample_nearest: factor must be >= 1, got " +
                                std::to_string(factor));
  const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const int ho = h * factor, wo = w * factor;
  std::vector<T> y(size_t(c) * ho * wo);
  for (int ci = 0; ci < c; ++ci) {
    const T* xc = x.data().data() + size_t(ci) * h * w;
    T* yc = y.data() + size_t(ci) * ho * wo;
    for (int oy = 0; oy < ho; ++oy) {
      const T* xrow = xc + size_t(oy / factor) * w;
      T* yrow = yc + size_t(oy) * wo;
      for (int ox = 0; ox < wo; ++ox) yrow[ox] = xrow[ox / factor];
    }
  }
  return TensorT<T>::make_result(
      {c, ho, wo}, std::move(y), {x},
      [x, factor, c, h, w, ho, wo](const std::vector<T>& g) {
        detail::accum_grad(x, [&](std::vector<T>& gx) {
          for (int ci = 0; ci < c; ++ci) {
            const T* gc = g.data() + size_t(ci) * ho * wo;
            T* gxc = gx.data() + size_t(ci) * h * w;
            for (int oy = 0; oy < ho; ++oy) {
              const T* grow = gc + size_t(oy) * wo;
              T* gxrow = gxc + size_t(oy / factor) * w;
              for (int ox = 0; ox < wo; ++ox) gxrow[ox / factor] += grow[ox];
            }
          }
        });
      });
}

namespace detail {

// Bilinear interpolation with zero padding outside [0,H)x[0,W).
template <typename T>
struct BilinTaps {
  int y0, x0;
  T fy, fx;
  bool in00, in01, in10, in11;
};

template <typename T>
BilinTaps<T> bilin_taps(T py, T px, int h, int w) {
  BilinTaps<T> t;
  const T fy0 = std::floor(py), fx0 = std::floor(px);
  t.y0 = int(fy0);
  t.x0 = int(fx0);
  t.fy = py - fy0;
  t.fx = px - fx0;
  const int y1 = t.y0 + 1, x1 = t.x0 + 1;
  auto in = [&](int y, int x) { return y >= 0 && y < h && x >= 0 && x < w; };
  t.in00 = in(t.y0, t.x0);
  t.in01 = in(t.y0, x1);
  t.in10 = in(y1, t.x0);
  t.in11 = in(y1, x1);
  return t;
}

template <typename T>
T bilin_value(const T* plane, int w, const BilinTaps<T>& t) {
  const T v00 = t.in00 ? plane[size_t(t.y0) * w + t.x0] : T(0);
  const T v01 = t.in01 ? plane[size_t(t.y0) * w + t.x0 + 1] : T(0);
  const T v10 = t.in10 ? plane[size_t(t.y0 + 1) * w + t.x0] : T(0);
  const T v11 = t.in11 ? plane[size_t(t.y0 + 1) * w + t.x0 + 1] : T(0);
  return (T(1) - t.fy) * ((T(1) - t.fx) * v00 + t.fx * v01) +
         t.fy * ((T(1) - t.fx) * v10 + t.fx * v11);
}

}  // namespace detail

// Single-position bilinear sample of channel c at fractional (py,px),
// pos = [py, px]. Zero outside the frame; differentiable w.r.t. x and pos.
template <typename T>
TensorT<T> bilinear_sample(const TensorT<T>& x, const TensorT<T>& pos, int c) {
  detail::check_rank(x, 3, "bilinear_sample");
  if (pos.shape() != Shape{2})
    throw ShapeError("bilinear_sample: pos must have shape (2), got " +
                     shape_str(pos.shape()));
  if (c < 0 || c >= x.shape()[0])
    throw std::invalid_argument("bilinear_sample: channel out of range");
  const int h = x.shape()[1], w = x.shape()[2];
  const T py = pos.data()[0], px = pos.data()[1];
  const auto t = detail::bilin_taps(py, px, h, w);
  const T* plane = x.data().data() + size_t(c) * h * w;
  const T val = detail::bilin_value(plane, w, t);
  return TensorT<T>::make_result(
      {1}, {val}, {x, pos}, [x, pos, c, h, w, t](const std::vector<T>& g) {
        const T* plane = x.data().data() + size_t(c) * h * w;
        const T v00 = t.in00 ? plane[size_t(t.y0) * w + t.x0] : T(0);
        const T v01 = t.in01 ? plane[size_t(t.y0) * w + t.x0 + 1] : T(0);
        const T v10 = t.in10 ? plane[size_t(t.y0 + 1) * w + t.x0] : T(0);
        const T v11 = t.in11 ? plane[size_t(t.y0 + 1) * w + t.x0 + 1] : T(0);
        detail::accum_grad(x, [&](std::vector<T>& gx) {
          T* gp = gx.data() + size_t(c) * h * w;
          const T g0 = g[0];
          if (t.in00) gp[size_t(t.y0) * w + t.x0] += g0 * (T(1) - t.fy) * (T(1) - t.fx);
          if (t.in01) gp[size_t(t.y0) * w + t.x0 + 1] += g0 * (T(1) - t.fy) * t.fx;
          if (t.in10) gp[size_t(t.y0 + 1) * w + t.x0] += g0 * t.fy * (T(1) - t.fx);
          if (t.in11) gp[size_t(t.y0 + 1) * w + t.x0 + 1] += g0 * t.fy * t.fx;
        });
        detail::accum_grad(pos, [&](std::vector<T>& gp) {
          gp[0] += g[0] * ((T(1) - t.fx) * (v10 - v00) + t.fx * (v11 - v01));
          gp[1] += g[0] * ((T(1) - t.fy) * (v01 - v00) + t.fy * (v11 - v10));
        });
      });
}

}  // namespace dikd
