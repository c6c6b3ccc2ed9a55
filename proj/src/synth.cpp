/**
 * @file synth.cpp
 */
#include "synth.hpp"

#include "estimators.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace dermacolor::synth {

using color::LabPixel;

LabPixel skin_color_model(double melanosome_fraction, const MelanosomeRange& range) {
    if (!(range.max > range.min)) fail(ErrorCode::InvalidParams, "melanosome range is empty");
    if (!(melanosome_fraction >= range.min && melanosome_fraction <= range.max)) {
        fail(ErrorCode::OutOfRange, "melanosome fraction " + std::to_string(melanosome_fraction) +
                                        " outside [" + std::to_string(range.min) + ", " +
                                        std::to_string(range.max) + "]");
    }
    const double t = (melanosome_fraction - range.min) / (range.max - range.min);
    return {72.0 - 48.0 * t, 8.0 + 4.0 * t, 14.0 + 6.0 * t};
}

const std::array<LightingTransform, kLightingConditions>& lighting_table() {
    static const auto table = [] {
        std::array<LightingTransform, kLightingConditions> t{};
        Rng rng(0x11947A61ULL);
        std::uniform_real_distribution<double> gain(0.90, 1.10);
        std::uniform_real_distribution<double> exposure(0.90, 1.10);
        std::uniform_real_distribution<double> gradient(0.0, 0.8);
        std::uniform_real_distribution<double> direction(0.0, 2.0 * std::numbers::pi);
        for (std::size_t i = 1; i < t.size(); ++i) {
            for (double& g : t[i].gains) g = gain(rng);
            t[i].exposure = exposure(rng);
            t[i].gradient = gradient(rng);
            t[i].direction = direction(rng);
        }
        return t;
    }();
    return table;
}

namespace {

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
    const double vx = bx - ax;
    const double vy = by - ay;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (ax + t * vx);
    const double dy = py - (ay + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

bool inside_lesion(const Lesion& lesion, double px, double py) {
    if (lesion.axis_a <= 0.0 || lesion.axis_b <= 0.0) return false;
    const double dx = px - lesion.center_x;
    const double dy = py - lesion.center_y;
    const double c = std::cos(lesion.rotation);
    const double s = std::sin(lesion.rotation);
    const double u = (dx * c + dy * s) / lesion.axis_a;
    const double v = (-dx * s + dy * c) / lesion.axis_b;
    return u * u + v * v <= 1.0;
}

// Anti-aliased coverage of all hair strokes, max-combined.
Raster<float> hair_coverage(const SynthParams& p, Rng& rng) {
    Raster<float> cover(p.size, p.size, 0.0f);
    const double size = p.size;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int h = 0; h < p.n_hairs; ++h) {
        const double width = 1.0 + 2.0 * unit(rng);
        double x = size * unit(rng);
        double y = size * unit(rng);
        double heading = 2.0 * std::numbers::pi * unit(rng);
        const int segments = 4 + static_cast<int>(3.0 * unit(rng));
        for (int s = 0; s < segments; ++s) {
            const double len = size * (0.06 + 0.08 * unit(rng));
            heading += 0.6 * (unit(rng) - 0.5);
            const double nx = x + len * std::cos(heading);
            const double ny = y + len * std::sin(heading);
            const double reach = 0.5 * width + 1.0;
            const int x0 = std::max(0, static_cast<int>(std::floor(std::min(x, nx) - reach)));
            const int x1 = std::min(p.size - 1, static_cast<int>(std::ceil(std::max(x, nx) + reach)));
            const int y0 = std::max(0, static_cast<int>(std::floor(std::min(y, ny) - reach)));
            const int y1 = std::min(p.size - 1, static_cast<int>(std::ceil(std::max(y, ny) + reach)));
            for (int yy = y0; yy <= y1; ++yy) {
                for (int xx = x0; xx <= x1; ++xx) {
                    const double d = segment_distance(xx + 0.5, yy + 0.5, x, y, nx, ny);
                    const double alpha = std::clamp(0.5 * width + 0.5 - d, 0.0, 1.0);
                    float& c = cover.at(xx, yy);
                    c = std::max(c, static_cast<float>(alpha));
                }
            }
            x = nx;
            y = ny;
        }
    }
    return cover;
}

void validate(const SynthParams& p, const SynthConfig& config) {
    if (p.size < 64) fail(ErrorCode::InvalidParams, "image size must be >= 64");
    if (p.lighting_id < 0 || p.lighting_id >= kLightingConditions) {
        fail(ErrorCode::InvalidParams, "lighting id must be in 0..17");
    }
    if (p.n_hairs < 0) fail(ErrorCode::InvalidParams, "n_hairs must be >= 0");
    if (!(p.melanosome_fraction >= config.range.min && p.melanosome_fraction <= config.range.max)) {
        fail(ErrorCode::InvalidParams, "melanosome fraction outside the configured range");
    }
    const Lesion& l = p.lesion;
    if (l.axis_a < 0.0 || l.axis_b < 0.0) fail(ErrorCode::InvalidParams, "lesion axes must be >= 0");
    if (l.axis_a > 0.0 && l.axis_b > 0.0) {
        const double reach = std::max(l.axis_a, l.axis_b);
        if (l.center_x - reach < 0.0 || l.center_x + reach > p.size || l.center_y - reach < 0.0 ||
            l.center_y + reach > p.size) {
            fail(ErrorCode::InvalidParams, "lesion must lie fully inside the image");
        }
    }
}

}  // namespace

SyntheticSample generate_sample(const SynthParams& params, const SynthConfig& config) {
    validate(params, config);
    const int size = params.size;
    const LabPixel skin = skin_color_model(params.melanosome_fraction, config.range);
    const LightingTransform& light = lighting_table()[static_cast<std::size_t>(params.lighting_id)];

    Rng rng(params.seed);
    std::normal_distribution<double> texture(0.0, config.texture_sigma);
    const Raster<float> hair = hair_coverage(params, rng);

    SyntheticSample out{RgbImage(size, size), Mask(size, size), Mask(size, size), params};
    const double half = 0.5 * size;
    const double ux = std::cos(light.direction) / std::sqrt(2.0);
    const double uy = std::sin(light.direction) / std::sqrt(2.0);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            LabPixel px{skin.l_star + texture(rng), skin.a_star, skin.b_star};
            if (inside_lesion(params.lesion, x + 0.5, y + 0.5)) {
                px.l_star -= params.lesion.darkening;
                px.a_star += config.lesion_a_shift;
                out.lesion_mask.set(x, y, true);
            }
            const double alpha = hair.at(x, y);
            if (alpha > 0.0) {
                px.l_star += alpha * (config.hair_color.l_star - px.l_star);
                px.a_star += alpha * (config.hair_color.a_star - px.a_star);
                px.b_star += alpha * (config.hair_color.b_star - px.b_star);
                out.hair_mask.set(x, y, true);
            }
            px.l_star = std::clamp(px.l_star, 0.0, 100.0);

            const double dx = (x + 0.5 - half) / half;
            const double dy = (y + 0.5 - half) / half;
            const double shade = light.exposure * (1.0 + light.gradient * (dx * ux + dy * uy));
            const color::LinearRgb lin = color::lab_to_linear_rgb(px);
            const double channels[3] = {lin.r, lin.g, lin.b};
            std::uint8_t* dst = out.image.pixel(x, y);
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(channels[c] * light.gains[static_cast<std::size_t>(c)] * shade, 0.0, 1.0);
                dst[c] = color::quantize_u8(color::srgb_encode(v));
            }
        }
    }
    return out;
}

std::vector<SynthParams> plan_dataset(std::size_t n, std::uint64_t seed, int size, const SynthConfig& config) {
    if (n == 0) fail(ErrorCode::InvalidParams, "dataset size must be >= 1");
    if (size < 64) fail(ErrorCode::InvalidParams, "image size must be >= 64");
    Rng strata_rng(derive_seed(seed, 0xFFFFFFFFULL));
    std::vector<std::size_t> strata(n);
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    std::shuffle(strata.begin(), strata.end(), strata_rng);

    const double span = config.range.max - config.range.min;
    std::vector<SynthParams> plan(n);
    for (std::size_t i = 0; i < n; ++i) {
        SynthParams& p = plan[i];
        p.seed = derive_seed(seed, i);
        Rng rng(p.seed ^ 0xA5A5A5A5A5A5A5A5ULL);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double m = config.range.min + span * (static_cast<double>(strata[i]) + unit(rng)) / static_cast<double>(n);
        p.melanosome_fraction = std::clamp(m, config.range.min, config.range.max);
        p.lighting_id = static_cast<int>(i % kLightingConditions);
        p.size = size;
        p.n_hairs = static_cast<int>(7.0 * unit(rng));

        Lesion& l = p.lesion;
        l.axis_a = size * (0.12 + 0.13 * unit(rng));
        l.axis_b = l.axis_a * (0.6 + 0.4 * unit(rng));
        l.center_x = size * (0.5 + 0.1 * (unit(rng) - 0.5));
        l.center_y = size * (0.5 + 0.1 * (unit(rng) - 0.5));
        l.rotation = std::numbers::pi * unit(rng);
        l.darkening = 15.0 + 20.0 * unit(rng);
    }
    return plan;
}

std::vector<SynthParams> permute_lighting(std::vector<SynthParams> plan, std::uint64_t seed) {
    std::vector<int> ids;
    for (const auto& p : plan) ids.push_back(p.lighting_id);
    Rng rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t i = 0; i < plan.size(); ++i) plan[i].lighting_id = ids[i];
    return plan;
}

// =============================================================================
// Ground-truth labels
// =============================================================================

color::FitzpatrickType melanosome_to_fitzpatrick(double m, const MelanosomeThresholds& thresholds) {
    int type = 1;
    for (double boundary : thresholds.boundaries) {
        if (m > boundary) ++type;
    }
    return color::FitzpatrickType(type);
}

double mean_skin_ita(const LabImage& lab, const Mask& lesion_mask) {
    const estimators::SkinPixels skin = estimators::robust_skin_pixels(lab, lesion_mask);
    double sum = 0.0;
    for (std::size_t i = 0; i < skin.l_star.size(); ++i) {
        sum += color::ita(skin.l_star[i], skin.b_star[i], color::ItaVariant::Arctan).value;
    }
    return sum / static_cast<double>(skin.l_star.size());
}

GtLabels derive_gt_fp_labels(std::span<const double> mean_itas, std::span<const double> melanosome_fractions,
                             const color::ItaThresholds& ita_thresholds) {
    if (mean_itas.size() != melanosome_fractions.size() || mean_itas.empty()) {
        fail(ErrorCode::InvalidArgument, "label derivation needs one ITA per melanosome fraction");
    }
    GtLabels out;
    std::array<double, 6> sums{};
    std::array<std::size_t, 6> counts{};
    for (std::size_t i = 0; i < mean_itas.size(); ++i) {
        const auto type = color::ita_to_fitzpatrick({mean_itas[i]}, ita_thresholds);
        out.provisional.push_back(type);
        sums[static_cast<std::size_t>(type.index() - 1)] += melanosome_fractions[i];
        ++counts[static_cast<std::size_t>(type.index() - 1)];
    }

    std::vector<int> occupied;
    for (int b = 0; b < 6; ++b) {
        if (counts[static_cast<std::size_t>(b)] > 0) {
            out.bin_means[static_cast<std::size_t>(b)] =
                sums[static_cast<std::size_t>(b)] / static_cast<double>(counts[static_cast<std::size_t>(b)]);
            occupied.push_back(b);
        }
    }
    if (occupied.size() < 2) {
        fail(ErrorCode::InsufficientBins, "only " + std::to_string(occupied.size()) +
                                              " Fitzpatrick bin(s) occupied; need at least 2");
    }

    // Fill every bin mean: interpolate inside the occupied span, extrapolate
    // beyond it from the nearest two occupied bins.
    auto mean_of = [&](int b) { return *out.bin_means[static_cast<std::size_t>(b)]; };
    std::array<double, 6> filled{};
    for (int b = 0; b < 6; ++b) {
        auto hi = std::lower_bound(occupied.begin(), occupied.end(), b);
        int left;
        int right;
        if (hi == occupied.end()) {
            left = occupied[occupied.size() - 2];
            right = occupied.back();
        } else if (*hi == b) {
            filled[static_cast<std::size_t>(b)] = mean_of(b);
            continue;
        } else if (hi == occupied.begin()) {
            left = occupied[0];
            right = occupied[1];
        } else {
            left = *(hi - 1);
            right = *hi;
        }
        const double slope = (mean_of(right) - mean_of(left)) / (right - left);
        filled[static_cast<std::size_t>(b)] = mean_of(left) + slope * (b - left);
    }
    for (std::size_t k = 0; k < 5; ++k) {
        out.thresholds.boundaries[k] = 0.5 * (filled[k] + filled[k + 1]);
        if (k > 0 && !(out.thresholds.boundaries[k] > out.thresholds.boundaries[k - 1])) {
            fail(ErrorCode::DegenerateInput, "per-bin mean melanosome fractions are not increasing");
        }
    }
    for (double m : melanosome_fractions) out.labels.push_back(melanosome_to_fitzpatrick(m, out.thresholds));
    return out;
}

}  // namespace dermacolor::synth
