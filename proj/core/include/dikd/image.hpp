#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dikd/tensor.hpp"

namespace dikd {

// Planar RGB image, values in [0,1], layout [3,H,W] row-major.
struct Image {
  int h = 0;
  int w = 0;
  std::vector<float> pix;  // 3*h*w

  float at(int c, int y, int x) const {
    return pix[(size_t(c) * h + y) * w + x];
  }
  float& at(int c, int y, int x) { return pix[(size_t(c) * h + y) * w + x]; }

  TensorT<float> to_tensor() const {
    return TensorT<float>::from({3, h, w}, pix);
  }
  static Image from_tensor(const TensorT<float>& t);
};

// Binary PPM (P6), maxval 255. u8 -> float is v/255; float -> u8 is
// round(clamp(v,0,1)*255), so read/write round-trips are bit-exact.
Image read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Image& img);

}  // namespace dikd
