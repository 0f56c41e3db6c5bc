#pragma once

#include <limits>

#include "lorlut/image.hpp"

namespace lorlut {

/// Returned by psnr() for identical images.
inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

/// PSNR in dB with peak 1.0 over every pixel and channel.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

/// Mean SSIM over all valid 11x11 Gaussian windows (sigma 1.5, K1 0.01,
/// K2 0.03, range 1), averaged over the three channels.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

inline constexpr int kSsimWindow = 11;

/// Mean per-pixel CIEDE2000 after sRGB -> Lab (inputs clamped to [0,1]).
double mean_delta_e00(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace lorlut
