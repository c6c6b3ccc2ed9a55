/**
 * @file imgproc.hpp
 * @brief Raster primitives used by the estimators: CLAHE, Otsu thresholding,
 *        disk dilation, Gaussian blur and resampling
 */
#pragma once

#include "raster.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace dermacolor::imgproc {

struct ClaheConfig {
    int tiles_x = 8;
    int tiles_y = 8;
    double clip_limit = 2.0;  ///< in units of the mean bin count
    int bins = 256;
    double range_min = 0.0;  ///< value range of the channel (L* by default)
    double range_max = 100.0;
};

/// Contrast-limited adaptive histogram equalization with bilinear
/// interpolation between tile mappings. Each tile maps a bin to the
/// mid-rank of its clipped histogram, so a flat histogram is the identity.
Raster<float> clahe(const Raster<float>& channel, const ClaheConfig& config = {});

struct OtsuResult {
    double threshold = 0.0;  ///< values strictly below are the low class
    int split_bin = 0;       ///< last bin of the low class
};

/// Index k maximizing the between-class variance of {0..k} vs {k+1..}.
/// Ties resolve to the lowest index.
int otsu_split(std::span<const std::uint64_t> histogram);

/// Histogram spans [min(values), max(values)] with `bins` equal bins; the
/// returned threshold is the upper edge of the split bin.
OtsuResult otsu_threshold(std::span<const float> values, int bins = 256);

/// Dilation by the discrete disk dx^2 + dy^2 <= radius^2.
Mask dilate(const Mask& mask, int radius);

/// Separable Gaussian blur with reflect-101 borders. Instantiated for
/// float and double.
template <typename T>
Raster<T> gaussian_blur(const Raster<T>& img, double sigma, int kernel_size);

/// Normalized 1-D Gaussian taps of length kernel_size.
std::vector<double> gaussian_kernel(double sigma, int kernel_size);

/// Bilinear resampling (pixel-center aligned); exact area averaging when
/// both axes shrink by at least 2x.
template <typename T>
Raster<T> resize(const Raster<T>& img, int new_width, int new_height);

}  // namespace dermacolor::imgproc
