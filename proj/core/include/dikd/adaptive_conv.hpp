#pragma once

#include <cmath>
#include <vector>

#include "dikd/ops.hpp"
#include "dikd/tensor.hpp"

namespace dikd {

// Spatially adaptive convolution:
//
//   y[c,j] = sum_k V[k,j] * sum_ci W[c,ci,k] * x_ci[j + j_k + D[k,j]]
//
// where j_k walks the dilation-1 KxK neighborhood of j and samples at
// fractional positions use bilinear interpolation with zero padding.
// V:[K^2,H,W] and D:[2K^2,H,W] (per-tap dy,dx pairs) are shared across
// channels; W:[Cout,Cin,K,K] is position-independent. Output preserves the
// spatial size. Differentiable w.r.t. x, V, D and W.
template <typename T>
TensorT<T> adaptive_conv(const TensorT<T>& x, const TensorT<T>& v,
                         const TensorT<T>& d, const TensorT<T>& w) {
  detail::check_rank(x, 3, "adaptive_conv");
  detail::check_rank(v, 3, "adaptive_conv");
  detail::check_rank(d, 3, "adaptive_conv");
  detail::check_rank(w, 4, "adaptive_conv");
  const int cin = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  const int cout = w.shape()[0], k = w.shape()[2];
  if (w.shape()[1] != cin)
    throw ShapeError("adaptive_conv: input channels " + shape_str(x.shape()) +
                     " do not match weight " + shape_str(w.shape()));
  if (w.shape()[3] != k || k % 2 == 0)
    throw std::invalid_argument(
        "adaptive_conv: kernel must be square with odd size, got " +
        shape_str(w.shape()));
  const int kk = k * k;
  if (v.shape() != Shape{kk, h, wd})
    throw ShapeError("adaptive_conv: kernel field " + shape_str(v.shape()) +
                     " must be (" + std::to_string(kk) + "x" +
                     std::to_string(h) + "x" + std::to_string(wd) + ")");
  if (d.shape() != Shape{2 * kk, h, wd})
    throw ShapeError("adaptive_conv: offset field " + shape_str(d.shape()) +
                     " must be (" + std::to_string(2 * kk) + "x" +
                     std::to_string(h) + "x" + std::to_string(wd) + ")");

  const int hw = h * wd;
  const int r = k / 2;

  // W transposed to [k][co][ci] so the channel reductions are contiguous.
  std::vector<T> wt(size_t(kk) * cout * cin);
  for (int co = 0; co < cout; ++co)
    for (int ci = 0; ci < cin; ++ci)
      for (int t = 0; t < kk; ++t)
        wt[(size_t(t) * cout + co) * cin + ci] =
            w.data()[(size_t(co) * cin + ci) * kk + t];

  // Bilinear samples cached for the backward pass: a[(t*hw + j)*cin + ci].
  auto samples = std::make_shared<std::vector<T>>(size_t(kk) * hw * cin);
  std::vector<T> y(size_t(cout) * hw, T(0));
  const T* xd = x.data().data();
  const T* vd = v.data().data();
  const T* dd = d.data().data();

  for (int oy = 0; oy < h; ++oy) {
    for (int ox = 0; ox < wd; ++ox) {
      const int j = oy * wd + ox;
      for (int t = 0; t < kk; ++t) {
        const T py = T(oy + t / k - r) + dd[size_t(2 * t) * hw + j];
        const T px = T(ox + t % k - r) + dd[size_t(2 * t + 1) * hw + j];
        const auto bt = detail::bilin_taps(py, px, h, wd);
        const T w00 = (T(1) - bt.fy) * (T(1) - bt.fx);
        const T w01 = (T(1) - bt.fy) * bt.fx;
        const T w10 = bt.fy * (T(1) - bt.fx);
        const T w11 = bt.fy * bt.fx;
        const size_t i00 = size_t(bt.y0) * wd + bt.x0;
        T* arow = samples->data() + (size_t(t) * hw + j) * cin;
        if (bt.in00 && bt.in11) {
          // All four corners inside the frame.
          const T* p = xd + i00;
          for (int ci = 0; ci < cin; ++ci, p += hw)
            arow[ci] = w00 * p[0] + w01 * p[1] + w10 * p[wd] + w11 * p[wd + 1];
        } else {
          for (int ci = 0; ci < cin; ++ci) {
            const T* p = xd + size_t(ci) * hw;
            T acc = T(0);
            if (bt.in00) acc += w00 * p[i00];
            if (bt.in01) acc += w01 * p[i00 + 1];
            if (bt.in10) acc += w10 * p[i00 + wd];
            if (bt.in11) acc += w11 * p[i00 + wd + 1];
            arow[ci] = acc;
          }
        }
        const T vk = vd[size_t(t) * hw + j];
        if (vk == T(0)) continue;
        const T* wrow = wt.data() + size_t(t) * cout * cin;
        for (int co = 0; co < cout; ++co) {
          const T* wr = wrow + size_t(co) * cin;
          T acc = T(0);
          for (int ci = 0; ci < cin; ++ci) acc += wr[ci] * arow[ci];
          y[size_t(co) * hw + j] += vk * acc;
        }
      }
    }
  }

  return TensorT<T>::make_result(
      {cout, h, wd}, std::move(y), {x, v, d, w},
      [x, v, d, w, wt = std::move(wt), samples, cin, cout, h, wd, k, kk, hw,
       r](const std::vector<T>& g) {
        const bool need_x = x.impl()->needs_grad();
        const bool need_v = v.impl()->needs_grad();
        const bool need_d = d.impl()->needs_grad();
        const bool need_w = w.impl()->needs_grad();
        std::vector<T>* gx = need_x ? &x.impl()->grad_buf() : nullptr;
        std::vector<T>* gv = need_v ? &v.impl()->grad_buf() : nullptr;
        std::vector<T>* gd = need_d ? &d.impl()->grad_buf() : nullptr;
        std::vector<T> gwt;
        if (need_w) gwt.assign(wt.size(), T(0));

        const T* xd = x.data().data();
        const T* vd = v.data().data();
        const T* dd = d.data().data();
        std::vector<T> gout(static_cast<size_t>(cout));
        std::vector<T> u(static_cast<size_t>(cin));

        for (int oy = 0; oy < h; ++oy) {
          for (int ox = 0; ox < wd; ++ox) {
            const int j = oy * wd + ox;
            for (int co = 0; co < cout; ++co)
              gout[co] = g[size_t(co) * hw + j];
            for (int t = 0; t < kk; ++t) {
              const T vk = vd[size_t(t) * hw + j];
              const T* arow = samples->data() + (size_t(t) * hw + j) * cin;
              const T* wrow = wt.data() + size_t(t) * cout * cin;

              // u[ci] = sum_co g[co] * W[co,ci,t]; also dV via inner products.
              std::fill(u.begin(), u.end(), T(0));
              T dv = T(0);
              for (int co = 0; co < cout; ++co) {
                const T gco = gout[co];
                const T* wr = wrow + size_t(co) * cin;
                T inner = T(0);
                for (int ci = 0; ci < cin; ++ci) {
                  inner += wr[ci] * arow[ci];
                  u[ci] += gco * wr[ci];
                }
                dv += gco * inner;
              }
              if (need_v) (*gv)[size_t(t) * hw + j] += dv;
              if (need_w) {
                T* gwrow = gwt.data() + size_t(t) * cout * cin;
                for (int co = 0; co < cout; ++co) {
                  const T s = gout[co] * vk;
                  T* gr = gwrow + size_t(co) * cin;
                  for (int ci = 0; ci < cin; ++ci) gr[ci] += s * arow[ci];
                }
              }
              if (!need_x && !need_d) continue;
              if (vk == T(0) && !need_d) continue;

              const T py = T(oy + t / k - r) + dd[size_t(2 * t) * hw + j];
              const T px = T(ox + t % k - r) + dd[size_t(2 * t + 1) * hw + j];
              const auto bt = detail::bilin_taps(py, px, h, wd);
              const T w00 = (T(1) - bt.fy) * (T(1) - bt.fx);
              const T w01 = (T(1) - bt.fy) * bt.fx;
              const T w10 = bt.fy * (T(1) - bt.fx);
              const T w11 = bt.fy * bt.fx;
              const size_t i00 = size_t(bt.y0) * wd + bt.x0;
              T dpy = T(0), dpx = T(0);
              for (int ci = 0; ci < cin; ++ci) {
                const T da = vk * u[ci];
                const T* p = xd + size_t(ci) * hw;
                const T v00 = bt.in00 ? p[i00] : T(0);
                const T v01 = bt.in01 ? p[i00 + 1] : T(0);
                const T v10 = bt.in10 ? p[i00 + wd] : T(0);
                const T v11 = bt.in11 ? p[i00 + wd + 1] : T(0);
                if (need_d) {
                  dpy += da * ((T(1) - bt.fx) * (v10 - v00) + bt.fx * (v11 - v01));
                  dpx += da * ((T(1) - bt.fy) * (v01 - v00) + bt.fy * (v11 - v10));
                }
                if (need_x) {
                  T* gp = gx->data() + size_t(ci) * hw;
                  if (bt.in00) gp[i00] += da * w00;
                  if (bt.in01) gp[i00 + 1] += da * w01;
                  if (bt.in10) gp[i00 + wd] += da * w10;
                  if (bt.in11) gp[i00 + wd + 1] += da * w11;
                }
              }
              if (need_d) {
                (*gd)[size_t(2 * t) * hw + j] += dpy;
                (*gd)[size_t(2 * t + 1) * hw + j] += dpx;
              }
            }
          }
        }

        if (need_w) {
          std::vector<T>& gw = w.impl()->grad_buf();
          for (int co = 0; co < cout; ++co)
            for (int ci = 0; ci < cin; ++ci)
              for (int t = 0; t < kk; ++t)
                gw[(size_t(co) * cin + ci) * kk + t] +=
                    gwt[(size_t(t) * cout + co) * cin + ci];
        }
      });
}

}  // namespace dikd
