/**
 * @file estimators.hpp
 * @brief Segmentation-based, patch-based and color-quantization ITA estimators
 */
#pragma once

#include "color.hpp"
#include "imgproc.hpp"
#include "raster.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dermacolor::estimators {

enum class Method { Segmentation, Patch, Quantization };

const char* method_name(Method m) noexcept;
Method parse_method(const std::string& name);

struct Diagnostics {
    std::optional<std::size_t> n_pixels_used;
    std::optional<int> chosen_patch_index;      ///< patch only
    std::optional<std::size_t> chosen_cluster_size;  ///< quantization only
    std::optional<int> k_selected;               ///< quantization only
    std::optional<double> masked_fraction;       ///< quantization only
    bool knee_fallback = false;                  ///< kneedle found no knee; fallback k used
    bool suspect_inverted_contrast = false;      ///< dark class covers most of the image
};

struct ItaEstimate {
    color::ItaDegrees ita;
    Method method = Method::Segmentation;
    Diagnostics diagnostics;
};

// =============================================================================
// Segmentation-based
// =============================================================================

/// L* and b* of the non-lesion pixels that survive one-sigma rejection
/// around the medians. A pixel is dropped if either channel deviates by
/// more than that channel's standard deviation.
struct SkinPixels {
    std::vector<double> l_star;
    std::vector<double> b_star;
};

SkinPixels robust_skin_pixels(const LabImage& lab, const Mask& lesion_mask, std::size_t min_pixels = 10);

/// Median of a sequence (mean of the two central values for even sizes).
double median(std::vector<double> values);

ItaEstimate estimate_segmentation(const LabImage& lab, const Mask& lesion_mask);

// =============================================================================
// Patch-based
// =============================================================================

struct PatchConfig {
    int patch_size = 32;
    int n_patches = 8;
};

struct Patch {
    int x0 = 0;  ///< top-left corner
    int y0 = 0;
    RgbImage pixels;
};

/// Patches in order: the four corners (TL, TR, BL, BR) then the edge
/// midpoints (top, bottom, left, right); the first n_patches are returned.
/// Each patch is inset from the border by half a patch.
std::vector<Patch> sample_edge_patches(const RgbImage& img, int patch_size, int n_patches);

ItaEstimate estimate_patch(const RgbImage& img, const PatchConfig& config = {});

// =============================================================================
// Color quantization
// =============================================================================

struct KMeansResult {
    std::vector<color::LabPixel> centroids;
    std::vector<int> assignments;
    double inertia = 0.0;
    std::vector<double> inertia_history;  ///< after each assignment step
    int iterations = 0;
};

/// Lloyd iterations from a seeded k-means++ initialization. Stops after
/// max_iter iterations or when no centroid moves by tol or more.
KMeansResult kmeans(std::span<const color::LabPixel> points, int k, std::uint64_t seed, int max_iter = 100,
                    double tol = 1e-4);

/// Knee of a decreasing convex curve: the x at the maximum of
/// (1 - y_norm) - x_norm. Throws NoKnee when that maximum is not positive.
int kneedle(std::span<const int> xs, std::span<const double> ys);

struct QuantizationConfig {
    /// Cluster on CLAHE-enhanced L* instead of the original L*.
    bool clahe_clustering = false;
    imgproc::ClaheConfig clahe{};
    int otsu_bins = 256;
    int dilation_radius = 5;
    int k_min = 2;
    int k_max = 8;
    int k_fallback = 3;
    std::uint64_t seed = 0;
    int max_iter = 100;
    double tol = 1e-4;
    std::size_t max_points = 4096;   ///< k-means runs on an even-stride subsample above this
    double max_masked_fraction = 0.95;
};

ItaEstimate estimate_quantization(const RgbImage& img, const QuantizationConfig& config = {});

}  // namespace dermacolor::estimators
