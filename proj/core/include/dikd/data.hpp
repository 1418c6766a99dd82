#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dikd/image.hpp"

namespace dikd {

// Procedural stand-in corpus: linear color gradients, 2-5 filled ellipses
// and a sinusoidal texture per image. Deterministic per seed.
Image gen_image(uint64_t seed, int h, int w);

// Writes n PPM images (img_0000.ppm ...) into out_dir.
void gen_data(uint64_t seed, int n, int h, int w, const std::string& out_dir);

// Loads every *.ppm in the directory, sorted by filename.
std::vector<Image> load_dataset(const std::string& dir);

}  // namespace dikd
