#include "dikd/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace dikd {

Image Image::from_tensor(const TensorT<float>& t) {
  if (t.shape().size() != 3 || t.shape()[0] != 3)
    throw ShapeError("Image::from_tensor: need [3,H,W], got " +
                     shape_str(t.shape()));
  Image img;
  img.h = t.shape()[1];
  img.w = t.shape()[2];
  img.pix = t.data();
  return img;
}

Image read_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open PPM file: " + path);
  std::string magic;
  f >> magic;
  if (magic != "P6") throw std::runtime_error("not a binary PPM (P6): " + path);
  auto next_int = [&f, &path]() {
    int v;
    f >> std::ws;
    while (f.peek() == '#') {
      std::string line;
      std::getline(f, line);
      f >> std::ws;
    }
    if (!(f >> v)) throw std::runtime_error("malformed PPM header: " + path);
    return v;
  };
  const int w = next_int(), h = next_int(), maxval = next_int();
  if (w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("unsupported PPM (need maxval 255): " + path);
  f.get();
  std::vector<uint8_t> raw(size_t(h) * w * 3);
  f.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (!f) throw std::runtime_error("truncated PPM data: " + path);
  Image img;
  img.h = h;
  img.w = w;
  img.pix.resize(raw.size());
  // Interleaved RGB on disk, planar in memory.
  const size_t hw = size_t(h) * w;
  for (size_t i = 0; i < hw; ++i)
    for (int c = 0; c < 3; ++c)
      img.pix[size_t(c) * hw + i] = float(raw[i * 3 + c]) / 255.0f;
  return img;
}

void write_ppm(const std::string& path, const Image& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write PPM file: " + path);
  f << "P6\n" << img.w << " " << img.h << "\n255\n";
  const size_t hw = size_t(img.h) * img.w;
  std::vector<uint8_t> raw(hw * 3);
  for (size_t i = 0; i < hw; ++i)
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(img.pix[size_t(c) * hw + i], 0.0f, 1.0f);
      raw[i * 3 + c] = uint8_t(std::lround(v * 255.0f));
    }
  f.write(reinterpret_cast<const char*>(raw.data()),
          std::streamsize(raw.size()));
  if (!f) throw std::runtime_error("failed writing PPM data: " + path);
}

}  // namespace dikd
