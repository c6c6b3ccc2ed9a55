/**
 * @file color.hpp
 * @brief sRGB / CIELAB / HSV conversions, the Individual Typology Angle and
 *        ITA to Fitzpatrick binning
 */
#pragma once

#include "raster.hpp"

#include <array>
#include <cstdint>

namespace dermacolor::color {

struct SrgbPixel {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const SrgbPixel&) const = default;
};

struct LabPixel {
    double l_star = 0.0;
    double a_star = 0.0;
    double b_star = 0.0;
};

struct Hsv {
    double h = 0.0;  ///< degrees in [0, 360); 0 for achromatic pixels
    double s = 0.0;
    double v = 0.0;
};

/// Linear-light RGB triple, nominally in [0, 1] but unclamped.
struct LinearRgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
};

/// Reference white in XYZ (Y = 1).
struct WhitePoint {
    double x;
    double y;
    double z;
};

/// CIE D65, 2 degree observer.
inline constexpr WhitePoint kD65{0.95047, 1.0, 1.08883};

double srgb_decode(double encoded) noexcept;
double srgb_encode(double linear) noexcept;
/// Linear value of an 8-bit code, via a 256-entry table.
double srgb_decode_u8(std::uint8_t code) noexcept;
std::uint8_t quantize_u8(double encoded) noexcept;

LabPixel linear_rgb_to_lab(const LinearRgb& rgb, const WhitePoint& white = kD65) noexcept;
LinearRgb lab_to_linear_rgb(const LabPixel& lab, const WhitePoint& white = kD65) noexcept;

LabPixel srgb_to_lab(SrgbPixel p, const WhitePoint& white = kD65) noexcept;
/// Out-of-gamut colors clamp channel-wise to [0, 255].
SrgbPixel lab_to_srgb(const LabPixel& p, const WhitePoint& white = kD65) noexcept;
Hsv srgb_to_hsv(SrgbPixel p) noexcept;

LabImage to_lab(const RgbImage& img);

// =============================================================================
// ITA and Fitzpatrick types
// =============================================================================

enum class ItaVariant { Arctan, Arctan2 };

struct ItaDegrees {
    double value = 0.0;
};

/// ITA = arctan((L* - 50) / b*) in degrees. The arctan2 variant evaluates
/// atan2(L* - 50, b*) and is defined for b* = 0.
ItaDegrees ita(double l_star, double b_star, ItaVariant variant = ItaVariant::Arctan);

class FitzpatrickType {
public:
    explicit FitzpatrickType(int type_index);
    int index() const noexcept { return index_; }
    bool operator==(const FitzpatrickType&) const = default;
    auto operator<=>(const FitzpatrickType&) const = default;

private:
    int index_;
};

inline constexpr int kFitzpatrickTypes = 6;

/// Five strictly decreasing ITA boundaries separating I|II, ..., V|VI.
class ItaThresholds {
public:
    explicit ItaThresholds(const std::array<double, 5>& boundaries);
    static ItaThresholds defaults() { return ItaThresholds({55.0, 41.0, 28.0, 19.0, 10.0}); }
    const std::array<double, 5>& boundaries() const noexcept { return boundaries_; }

private:
    std::array<double, 5> boundaries_;
};

/// Type I iff ita > t[0]; type k iff t[k-1] < ita <= t[k-2]; type VI iff ita <= t[4].
FitzpatrickType ita_to_fitzpatrick(ItaDegrees value, const ItaThresholds& thresholds);

}  // namespace dermacolor::color
