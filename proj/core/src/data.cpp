#include "dikd/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "dikd/util.hpp"

namespace dikd {

Image gen_image(uint64_t seed, int h, int w) {
  Rng rng(seed ^ 0x696d67);
  Image img;
  img.h = h;
  img.w = w;
  img.pix.assign(size_t(3) * h * w, 0.0f);
  const size_t hw = size_t(h) * w;

  // Linear gradient base per channel.
  for (int c = 0; c < 3; ++c) {
    const double c0 = rng.uniform(0.1, 0.9);
    const double gx = rng.uniform(-0.5, 0.5);
    const double gy = rng.uniform(-0.5, 0.5);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        img.pix[size_t(c) * hw + size_t(y) * w + x] =
            float(c0 + gx * x / w + gy * y / h);
  }

  // Filled ellipses.
  const int nell = 2 + rng.uniform_int(4);
  for (int e = 0; e < nell; ++e) {
    const double cy = rng.uniform(0.0, double(h));
    const double cx = rng.uniform(0.0, double(w));
    const double ry = rng.uniform(0.08, 0.35) * h;
    const double rx = rng.uniform(0.08, 0.35) * w;
    const double ang = rng.uniform(0.0, 3.141592653589793);
    const double ca = std::cos(ang), sa = std::sin(ang);
    double col[3];
    for (double& v : col) v = rng.uniform(0.0, 1.0);
    // Anti-aliased coverage: blend over ~1 pixel across the boundary using
    // the approximate signed distance (1 - r) scaled back to pixel units.
    const double edge = std::min(rx, ry);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double dy = y - cy, dx = x - cx;
        const double u = (ca * dx + sa * dy) / rx;
        const double v = (-sa * dx + ca * dy) / ry;
        const double r = std::sqrt(u * u + v * v);
        const double alpha = std::clamp((1.0 - r) * edge + 0.5, 0.0, 1.0);
        if (alpha > 0.0)
          for (int c = 0; c < 3; ++c) {
            float& p = img.pix[size_t(c) * hw + size_t(y) * w + x];
            p = float(alpha * col[c] + (1.0 - alpha) * p);
          }
      }
  }

  // Sinusoidal texture.
  const double amp = rng.uniform(0.02, 0.08);
  const double fy = rng.uniform(1.0, 4.0) / h;
  const double fx = rng.uniform(1.0, 4.0) / w;
  const double phase = rng.uniform(0.0, 6.283185307179586);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float t = float(
          amp * std::sin(6.283185307179586 * (fx * x + fy * y) + phase));
      for (int c = 0; c < 3; ++c)
        img.pix[size_t(c) * hw + size_t(y) * w + x] += t;
    }

  for (float& v : img.pix) v = std::clamp(v, 0.0f, 1.0f);
  return img;
}

void gen_data(uint64_t seed, int n, int h, int w, const std::string& out_dir) {
  if (n < 1) throw std::invalid_argument("gen_data: n must be >= 1");
  std::filesystem::create_directories(out_dir);
  for (int i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img_%04d.ppm", i);
    const Image img = gen_image(seed * 0x100000001ull + uint64_t(i), h, w);
    write_ppm(out_dir + "/" + name, img);
  }
}

std::vector<Image> load_dataset(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ppm")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw std::runtime_error("load_dataset: no .ppm images in " + dir);
  std::vector<Image> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_ppm(f));
  return out;
}

}  // namespace dikd
