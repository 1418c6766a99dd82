#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dikd/tensor.hpp"

namespace dikd {

// Binary hole indicator. Convention: 1 = hole (missing pixel), 0 = known.
struct Mask {
  int h = 0;
  int w = 0;
  std::vector<uint8_t> grid;  // row-major, values in {0,1}

  uint8_t at(int y, int x) const { return grid[size_t(y) * w + x]; }
  uint8_t& at(int y, int x) { return grid[size_t(y) * w + x]; }
  double ratio() const;

  // 1xHxW float tensor view (0/1 values), optionally at T=double.
  template <typename T>
  TensorT<T> to_tensor() const {
    std::vector<T> d(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) d[i] = T(grid[i]);
    return TensorT<T>::from({1, h, w}, std::move(d));
  }
};

// Per-encoder-level downsampled masks; levels[l] is the mask at the feature
// resolution after l+1 downsamplings (H/2^(l+1) x W/2^(l+1)).
struct MaskPyramid {
  std::vector<Mask> levels;
};

// Procedural brush-stroke mask whose hole ratio lands in [lo,hi].
// Deterministic for a fixed seed. Throws std::invalid_argument for an
// infeasible bucket and GenerationError if 1000 strokes are not enough.
Mask generate_irregular_mask(uint64_t seed, int h, int w, double lo,
                             double hi);

// Max-pool downsampling: a level-l pixel is a hole iff any covered input
// pixel is a hole. Requires h,w divisible by 2^levels.
MaskPyramid build_mask_pyramid(const Mask& m, int levels);

double mask_ratio(const Mask& m);

// out = img*(1-m) + fill*m. img is [3,H,W] data in [0,1]; pure data op.
TensorT<float> apply_mask(const TensorT<float>& img, const Mask& m,
                          float fill);

// Binary PGM (P5), maxval 255. Pixels >= 128 map to hole=1 on read;
// holes are written as 255. Round-trip is bit-exact.
Mask read_pgm_mask(const std::string& path);
void write_pgm_mask(const std::string& path, const Mask& m);

}  // namespace dikd
