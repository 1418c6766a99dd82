#include "dikd/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace dikd {

namespace {

void check_sizes(const Image& a, const Image& b, const char* op) {
  if (a.h != b.h || a.w != b.w)
    throw ShapeError(std::string(op) + ": image sizes differ");
}

constexpr double kPsnrCap = 99.0;

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_sizes(a, b, "psnr");
  double mse = 0.0;
  for (size_t i = 0; i < a.pix.size(); ++i) {
    const double d = double(a.pix[i]) - double(b.pix[i]);
    mse += d * d;
  }
  mse /= double(a.pix.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double hole_psnr(const Image& a, const Image& b, const Mask& m) {
  check_sizes(a, b, "hole_psnr");
  if (m.h != a.h || m.w != a.w)
    throw ShapeError("hole_psnr: mask size does not match images");
  const size_t hw = size_t(a.h) * a.w;
  double mse = 0.0;
  int64_t n = 0;
  for (size_t i = 0; i < hw; ++i) {
    if (!m.grid[i]) continue;
    for (int c = 0; c < 3; ++c) {
      const double d =
          double(a.pix[size_t(c) * hw + i]) - double(b.pix[size_t(c) * hw + i]);
      mse += d * d;
      ++n;
    }
  }
  if (n == 0 || mse == 0.0) return kPsnrCap;
  mse /= double(n);
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
  check_sizes(a, b, "ssim");
  constexpr int kWin = 8;
  if (a.h < kWin || a.w < kWin)
    throw std::invalid_argument("ssim: image smaller than 8x8 window");
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;

  const size_t hw = size_t(a.h) * a.w;
  std::vector<double> ga(hw), gb(hw);
  for (size_t i = 0; i < hw; ++i) {
    ga[i] = (double(a.pix[i]) + double(a.pix[hw + i]) +
             double(a.pix[2 * hw + i])) / 3.0;
    gb[i] = (double(b.pix[i]) + double(b.pix[hw + i]) +
             double(b.pix[2 * hw + i])) / 3.0;
  }

  double total = 0.0;
  int64_t count = 0;
  const double inv = 1.0 / double(kWin * kWin);
  for (int y = 0; y + kWin <= a.h; ++y) {
    for (int x = 0; x + kWin <= a.w; ++x) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int dy = 0; dy < kWin; ++dy)
        for (int dx = 0; dx < kWin; ++dx) {
          const double va = ga[size_t(y + dy) * a.w + x + dx];
          const double vb = gb[size_t(y + dy) * a.w + x + dx];
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
      const double mua = sa * inv, mub = sb * inv;
      const double vara = saa * inv - mua * mua;
      const double varb = sbb * inv - mub * mub;
      const double cov = sab * inv - mua * mub;
      const double s = ((2 * mua * mub + kC1) * (2 * cov + kC2)) /
                       ((mua * mua + mub * mub + kC1) * (vara + varb + kC2));
      total += s;
      ++count;
    }
  }
  return total / double(count);
}

}  // namespace dikd
