#include "dikd/mask.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dikd/util.hpp"

namespace dikd {

double Mask::ratio() const {
  int64_t s = 0;
  for (uint8_t v : grid) s += v;
  return double(s) / double(int64_t(h) * w);
}

double mask_ratio(const Mask& m) { return m.ratio(); }

namespace {

void stamp_disk(Mask& m, double cy, double cx, double radius) {
  const int y0 = std::max(0, int(std::floor(cy - radius)));
  const int y1 = std::min(m.h - 1, int(std::ceil(cy + radius)));
  const int x0 = std::max(0, int(std::floor(cx - radius)));
  const int x1 = std::min(m.w - 1, int(std::ceil(cx + radius)));
  const double r2 = radius * radius;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dy = y - cy, dx = x - cx;
      if (dy * dy + dx * dx <= r2) m.at(y, x) = 1;
    }
}

void stamp_segment(Mask& m, double y0, double x0, double y1, double x1,
                   double radius) {
  const double len = std::hypot(y1 - y0, x1 - x0);
  const int steps = std::max(1, int(std::ceil(len / std::max(0.5, radius * 0.5))));
  for (int s = 0; s <= steps; ++s) {
    const double t = double(s) / steps;
    stamp_disk(m, y0 + t * (y1 - y0), x0 + t * (x1 - x0), radius);
  }
}

// One boundary-peel pass: clears hole pixels that touch a known pixel
// (4-neighborhood), in scan order, stopping as soon as the hole count
// drops to `target`. Returns the new hole count.
int64_t peel_boundary(Mask& m, int64_t holes, int64_t target) {
  std::vector<size_t> boundary;
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x) {
      if (!m.at(y, x)) continue;
      const bool edge = y == 0 || y == m.h - 1 || x == 0 || x == m.w - 1;
      if (edge || !m.at(y - 1, x) || !m.at(y + 1, x) || !m.at(y, x - 1) ||
          !m.at(y, x + 1))
        boundary.push_back(size_t(y) * m.w + x);
    }
  for (size_t idx : boundary) {
    if (holes <= target) break;
    m.grid[idx] = 0;
    --holes;
  }
  return holes;
}

}  // namespace

Mask generate_irregular_mask(uint64_t seed, int h, int w, double lo,
                             double hi) {
  if (h < 16 || w < 16)
    throw std::invalid_argument("generate_irregular_mask: size must be >= 16");
  if (lo < 0.0 || lo >= hi || hi > 0.6)
    throw std::invalid_argument(
        "generate_irregular_mask: bucket must satisfy 0 <= lo < hi <= 0.6");

  Rng rng(seed ^ 0x6d61736b);
  Mask m{h, w, std::vector<uint8_t>(size_t(h) * w, 0)};
  const int64_t total = int64_t(h) * w;
  const double minside = double(std::min(h, w));

  for (int stroke = 0; stroke < 1000; ++stroke) {
    double y = rng.uniform(0.0, double(h));
    double x = rng.uniform(0.0, double(w));
    const int verts = 4 + rng.uniform_int(9);  // 4..12 vertices
    const double radius = rng.uniform(0.05, 0.15) * minside / 2.0;
    for (int v = 0; v < verts; ++v) {
      const double ang = rng.uniform(0.0, 6.283185307179586);
      const double len = rng.uniform(0.05, 0.25) * minside;
      const double ny = std::clamp(y + len * std::sin(ang), 0.0, double(h - 1));
      const double nx = std::clamp(x + len * std::cos(ang), 0.0, double(w - 1));
      stamp_segment(m, y, x, ny, nx, radius);
      y = ny;
      x = nx;
    }

    int64_t holes = 0;
    for (uint8_t v : m.grid) holes += v;
    if (double(holes) / double(total) > hi) {
      // Peel the hole boundary until the ratio re-enters the bucket.
      const int64_t target = int64_t(std::floor(hi * double(total)));
      while (holes > target) {
        const int64_t before = holes;
        holes = peel_boundary(m, holes, target);
        if (holes == before) break;  // nothing left to peel
      }
    }
    if (double(holes) / double(total) >= lo &&
        double(holes) / double(total) <= hi)
      return m;
  }
  throw GenerationError(
      "generate_irregular_mask: failed to reach bucket [" +
      std::to_string(lo) + "," + std::to_string(hi) + "] in 1000 strokes");
}

MaskPyramid build_mask_pyramid(const Mask& m, int levels) {
  if (levels < 1)
    throw std::invalid_argument("build_mask_pyramid: levels must be >= 1");
  const int div = 1 << levels;
  if (m.h % div != 0 || m.w % div != 0)
    throw std::invalid_argument(
        "build_mask_pyramid: mask size " + std::to_string(m.h) + "x" +
        std::to_string(m.w) + " not divisible by 2^" + std::to_string(levels));
  MaskPyramid pyr;
  const Mask* prev = &m;
  for (int l = 0; l < levels; ++l) {
    Mask next{prev->h / 2, prev->w / 2,
              std::vector<uint8_t>(size_t(prev->h / 2) * (prev->w / 2), 0)};
    for (int y = 0; y < next.h; ++y)
      for (int x = 0; x < next.w; ++x) {
        const uint8_t v = prev->at(2 * y, 2 * x) | prev->at(2 * y, 2 * x + 1) |
                          prev->at(2 * y + 1, 2 * x) |
                          prev->at(2 * y + 1, 2 * x + 1);
        next.at(y, x) = v;
      }
    pyr.levels.push_back(std::move(next));
    prev = &pyr.levels.back();
  }
  return pyr;
}

TensorT<float> apply_mask(const TensorT<float>& img, const Mask& m,
                          float fill) {
  if (img.shape().size() != 3 || img.shape()[0] != 3 ||
      img.shape()[1] != m.h || img.shape()[2] != m.w)
    throw ShapeError("apply_mask: image " + shape_str(img.shape()) +
                     " does not match mask " + std::to_string(m.h) + "x" +
                     std::to_string(m.w));
  std::vector<float> out(img.data());
  const size_t hw = size_t(m.h) * m.w;
  for (int c = 0; c < 3; ++c)
    for (size_t i = 0; i < hw; ++i)
      if (m.grid[i]) out[size_t(c) * hw + i] = fill;
  return TensorT<float>::from(img.shape(), std::move(out));
}

Mask read_pgm_mask(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open PGM file: " + path);
  std::string magic;
  f >> magic;
  if (magic != "P5") throw std::runtime_error("not a binary PGM (P5): " + path);
  auto next_int = [&f, &path]() {
    int v;
    f >> std::ws;
    while (f.peek() == '#') {
      std::string line;
      std::getline(f, line);
      f >> std::ws;
    }
    if (!(f >> v)) throw std::runtime_error("malformed PGM header: " + path);
    return v;
  };
  const int w = next_int(), h = next_int(), maxval = next_int();
  if (w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("unsupported PGM (need maxval 255): " + path);
  f.get();  // single whitespace after maxval
  std::vector<uint8_t> raw(size_t(h) * w);
  f.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (!f) throw std::runtime_error("truncated PGM data: " + path);
  Mask m{h, w, std::vector<uint8_t>(raw.size())};
  for (size_t i = 0; i < raw.size(); ++i) m.grid[i] = raw[i] >= 128 ? 1 : 0;
  return m;
}

void write_pgm_mask(const std::string& path, const Mask& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write PGM file: " + path);
  f << "P5\n" << m.w << " " << m.h << "\n255\n";
  std::vector<uint8_t> raw(m.grid.size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = m.grid[i] ? 255 : 0;
  f.write(reinterpret_cast<const char*>(raw.data()),
          std::streamsize(raw.size()));
  if (!f) throw std::runtime_error("failed writing PGM data: " + path);
}

}  // namespace dikd
