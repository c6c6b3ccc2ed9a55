/**
 * @file color.cpp
 * @brief Color conversions (IEC 61966-2-1 sRGB, CIE 1976 L*a*b*)
 */
#include "color.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dermacolor::color {

namespace {

// sRGB primaries to XYZ (D65)
constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

constexpr double kXyzToRgb[3][3] = {
    {3.2404542, -1.5371385, -0.4985314},
    {-0.9692660, 1.8760108, 0.0415560},
    {0.0556434, -0.2040259, 1.0572252},
};

constexpr double kDelta = 6.0 / 29.0;

double lab_f(double t) {
    return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double t) {
    return t > kDelta ? t * t * t : 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

struct DecodeTable {
    double values[256];
    DecodeTable() {
        for (int i = 0; i < 256; ++i) values[i] = srgb_decode(i / 255.0);
    }
};

const DecodeTable& decode_table() {
    static const DecodeTable table;
    return table;
}

}  // namespace

double srgb_decode(double encoded) noexcept {
    return encoded <= 0.04045 ? encoded / 12.92 : std::pow((encoded + 0.055) / 1.055, 2.4);
}

double srgb_encode(double linear) noexcept {
    return linear <= 0.0031308 ? 12.92 * linear : 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

double srgb_decode_u8(std::uint8_t code) noexcept { return decode_table().values[code]; }

std::uint8_t quantize_u8(double encoded) noexcept {
    const double scaled = std::round(std::clamp(encoded, 0.0, 1.0) * 255.0);
    return static_cast<std::uint8_t>(scaled);
}

LabPixel linear_rgb_to_lab(const LinearRgb& rgb, const WhitePoint& white) noexcept {
    const double x = kRgbToXyz[0][0] * rgb.r + kRgbToXyz[0][1] * rgb.g + kRgbToXyz[0][2] * rgb.b;
    const double y = kRgbToXyz[1][0] * rgb.r + kRgbToXyz[1][1] * rgb.g + kRgbToXyz[1][2] * rgb.b;
    const double z = kRgbToXyz[2][0] * rgb.r + kRgbToXyz[2][1] * rgb.g + kRgbToXyz[2][2] * rgb.b;
    const double fx = lab_f(x / white.x);
    const double fy = lab_f(y / white.y);
    const double fz = lab_f(z / white.z);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LinearRgb lab_to_linear_rgb(const LabPixel& lab, const WhitePoint& white) noexcept {
    const double fy = (lab.l_star + 16.0) / 116.0;
    const double fx = fy + lab.a_star / 500.0;
    const double fz = fy - lab.b_star / 200.0;
    const double x = white.x * lab_f_inv(fx);
    const double y = white.y * lab_f_inv(fy);
    const double z = white.z * lab_f_inv(fz);
    return {
        kXyzToRgb[0][0] * x + kXyzToRgb[0][1] * y + kXyzToRgb[0][2] * z,
        kXyzToRgb[1][0] * x + kXyzToRgb[1][1] * y + kXyzToRgb[1][2] * z,
        kXyzToRgb[2][0] * x + kXyzToRgb[2][1] * y + kXyzToRgb[2][2] * z,
    };
}

LabPixel srgb_to_lab(SrgbPixel p, const WhitePoint& white) noexcept {
    return linear_rgb_to_lab({srgb_decode_u8(p.r), srgb_decode_u8(p.g), srgb_decode_u8(p.b)}, white);
}

SrgbPixel lab_to_srgb(const LabPixel& p, const WhitePoint& white) noexcept {
    const LinearRgb lin = lab_to_linear_rgb(p, white);
    auto encode = [](double v) { return quantize_u8(srgb_encode(std::clamp(v, 0.0, 1.0))); };
    return {encode(lin.r), encode(lin.g), encode(lin.b)};
}

Hsv srgb_to_hsv(SrgbPixel p) noexcept {
    const double r = p.r / 255.0;
    const double g = p.g / 255.0;
    const double b = p.b / 255.0;
    const double max = std::max({r, g, b});
    const double min = std::min({r, g, b});
    const double chroma = max - min;

    Hsv out;
    out.v = max;
    out.s = max > 0.0 ? chroma / max : 0.0;
    if (chroma <= 0.0) return out;

    double h;
    if (max == r) {
        h = std::fmod((g - b) / chroma, 6.0);
    } else if (max == g) {
        h = (b - r) / chroma + 2.0;
    } else {
        h = (r - g) / chroma + 4.0;
    }
    h *= 60.0;
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    out.h = h;
    return out;
}

LabImage to_lab(const RgbImage& img) {
    LabImage lab{Raster<float>(img.width(), img.height()), Raster<float>(img.width(), img.height()),
                 Raster<float>(img.width(), img.height())};
    const auto bytes = img.bytes();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const LabPixel p = srgb_to_lab({bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]});
        lab.l[i] = static_cast<float>(p.l_star);
        lab.a[i] = static_cast<float>(p.a_star);
        lab.b[i] = static_cast<float>(p.b_star);
    }
    return lab;
}

// =============================================================================
// ITA
// =============================================================================

ItaDegrees ita(double l_star, double b_star, ItaVariant variant) {
    if (!std::isfinite(l_star) || !std::isfinite(b_star)) {
        fail(ErrorCode::DegenerateInput, "ITA inputs must be finite");
    }
    constexpr double kToDegrees = 180.0 / std::numbers::pi;
    if (variant == ItaVariant::Arctan2 && !(b_star > 0.0)) {
        return {std::atan2(l_star - 50.0, b_star) * kToDegrees};
    }
    if (b_star == 0.0) {
        fail(ErrorCode::DegenerateInput, "arctan ITA is undefined at b* = 0");
    }
    return {std::atan((l_star - 50.0) / b_star) * kToDegrees};
}

FitzpatrickType::FitzpatrickType(int type_index) : index_(type_index) {
    if (type_index < 1 || type_index > kFitzpatrickTypes) {
        fail(ErrorCode::OutOfRange, "Fitzpatrick type must be in 1..6, got " + std::to_string(type_index));
    }
}

ItaThresholds::ItaThresholds(const std::array<double, 5>& boundaries) : boundaries_(boundaries) {
    for (std::size_t i = 0; i < boundaries.size(); ++i) {
        if (!std::isfinite(boundaries[i])) {
            fail(ErrorCode::InvalidThresholds, "ITA thresholds must be finite");
        }
        if (i > 0 && !(boundaries[i] < boundaries[i - 1])) {
            fail(ErrorCode::InvalidThresholds, "ITA thresholds must be strictly decreasing");
        }
    }
}

FitzpatrickType ita_to_fitzpatrick(ItaDegrees value, const ItaThresholds& thresholds) {
    int type = 1;
    for (double boundary : thresholds.boundaries()) {
        if (value.value <= boundary) ++type;
    }
    return FitzpatrickType(type);
}

}  // namespace dermacolor::color
