/**
 * @file synth.hpp
 * @brief Procedural synthetic dermatoscopic images with known melanosome
 *        fraction and lighting, plus ground-truth Fitzpatrick labelling
 */
#pragma once

#include "color.hpp"
#include "raster.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dermacolor::synth {

inline constexpr int kLightingConditions = 18;

struct MelanosomeRange {
    double min = 0.01;
    double max = 0.50;
};

/// Affine CIELAB skin model: with t = (m - min) / (max - min),
/// L* = 72 - 48 t, a* = 8 + 4 t, b* = 14 + 6 t.
color::LabPixel skin_color_model(double melanosome_fraction, const MelanosomeRange& range = {});

/// Applied in linear RGB: channel gain x exposure x (1 + gradient * u),
/// where u in [-1, 1] is the pixel position projected on the illumination
/// direction (image centre at 0).
struct LightingTransform {
    std::array<double, 3> gains{1.0, 1.0, 1.0};
    double exposure = 1.0;
    double gradient = 0.0;
    double direction = 0.0;  ///< rad
};

/// Fixed table of 18 conditions; entry 0 is the identity.
const std::array<LightingTransform, kLightingConditions>& lighting_table();

struct Lesion {
    double center_x = 0.0;  ///< px
    double center_y = 0.0;
    double axis_a = 0.0;    ///< semi-axes, px
    double axis_b = 0.0;
    double rotation = 0.0;  ///< rad
    double darkening = 25.0;  ///< L* reduction, 15..35
};

struct SynthParams {
    double melanosome_fraction = 0.1;
    int lighting_id = 0;
    Lesion lesion;
    int n_hairs = 0;
    std::uint64_t seed = 0;
    int size = 512;
};

struct SynthConfig {
    MelanosomeRange range;
    double texture_sigma = 1.5;   ///< L* noise
    double lesion_a_shift = 3.0;  ///< a* added inside the lesion
    color::LabPixel hair_color{20.0, 3.0, 5.0};
};

struct SyntheticSample {
    RgbImage image;
    Mask lesion_mask;
    Mask hair_mask;
    SynthParams params;
};

SyntheticSample generate_sample(const SynthParams& params, const SynthConfig& config = {});

/// Per-sample parameters for an n-image dataset: melanosome fractions are
/// stratified over the range, lighting ids cycle round-robin and every other
/// parameter comes from a stream seeded by (seed, index).
std::vector<SynthParams> plan_dataset(std::size_t n, std::uint64_t seed, int size = 512,
                                      const SynthConfig& config = {});

/// Same plan with the lighting ids shuffled across samples.
std::vector<SynthParams> permute_lighting(std::vector<SynthParams> plan, std::uint64_t seed);

// =============================================================================
// Ground-truth Fitzpatrick labels
// =============================================================================

/// Five strictly increasing melanosome fractions separating types I..VI.
struct MelanosomeThresholds {
    std::array<double, 5> boundaries{};
};

/// Type k iff boundaries[k-2] < m <= boundaries[k-1] (open-ended at I and VI).
color::FitzpatrickType melanosome_to_fitzpatrick(double m, const MelanosomeThresholds& thresholds);

/// Mean per-pixel ITA of the non-lesion pixels that survive one-sigma
/// rejection around the median L* and b*.
double mean_skin_ita(const LabImage& lab, const Mask& lesion_mask);

struct GtLabels {
    std::vector<color::FitzpatrickType> labels;
    std::vector<color::FitzpatrickType> provisional;  ///< ITA-binned types
    std::array<std::optional<double>, 6> bin_means;   ///< mean fraction per occupied provisional bin
    MelanosomeThresholds thresholds;
};

/// Bins each image's mean skin ITA into provisional types, takes the mean
/// melanosome fraction of each occupied type, places thresholds at the
/// midpoints between consecutive means (empty bins get linearly
/// interpolated or extrapolated means) and relabels every image from its
/// melanosome fraction.
GtLabels derive_gt_fp_labels(std::span<const double> mean_itas, std::span<const double> melanosome_fractions,
                             const color::ItaThresholds& ita_thresholds = color::ItaThresholds::defaults());

}  // namespace dermacolor::synth
