#pragma once

#include "dikd/image.hpp"
#include "dikd/mask.hpp"

namespace dikd {

// Peak signal-to-noise ratio on [0,1] images: 10*log10(1/MSE).
// Identical images (MSE == 0) report the cap 99.0.
double psnr(const Image& a, const Image& b);

// PSNR restricted to hole pixels (all three channels). No holes -> 99.0.
double hole_psnr(const Image& a, const Image& b, const Mask& m);

// Structural similarity: grayscale by channel mean, 8x8 sliding window at
// stride 1, C1=0.01^2, C2=0.03^2, mean over windows. Throws if either side
// of the image is smaller than the window.
double ssim(const Image& a, const Image& b);

}  // namespace dikd
