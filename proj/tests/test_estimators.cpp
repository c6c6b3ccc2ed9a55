#include "color.hpp"
#include "estimators.hpp"
#include "rng.hpp"
#include "synth.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace dermacolor::estimators {
namespace {

using color::LabPixel;
using color::SrgbPixel;
using testing::expect_error;
using testing::fill_rect;
using testing::uniform_image;

constexpr double kDeg = 180.0 / std::numbers::pi;

LabImage uniform_lab(int w, int h, double l, double a, double b) {
    return {Raster<float>(w, h, static_cast<float>(l)), Raster<float>(w, h, static_cast<float>(a)),
            Raster<float>(w, h, static_cast<float>(b))};
}

// -------------------------------------------------------- segmentation

TEST(Segmentation, UniformSkin) {
    const auto est = estimate_segmentation(uniform_lab(32, 32, 65.0, 8.0, 15.0), Mask(32, 32));
    EXPECT_NEAR(est.ita.value, 45.0, 1e-4);
    EXPECT_EQ(est.method, Method::Segmentation);
    EXPECT_EQ(est.diagnostics.n_pixels_used, 32u * 32u);
    EXPECT_FALSE(est.diagnostics.k_selected.has_value());
}

TEST(Segmentation, LesionHalfRemovedByMask) {
    auto lab = uniform_lab(32, 32, 65.0, 8.0, 15.0);
    Mask lesion(32, 32);
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 16; ++x) {
            lab.l.at(x, y) = 30.0f;
            lesion.set(x, y, true);
        }
    }
    const auto clean = estimate_segmentation(uniform_lab(32, 32, 65.0, 8.0, 15.0), Mask(32, 32));
    EXPECT_EQ(estimate_segmentation(lab, lesion).ita.value, clean.ita.value);
}

TEST(Segmentation, SaltNoiseSuppressed) {
    Rng rng(5);
    std::normal_distribution<double> tex(0.0, 1.0);
    auto lab = uniform_lab(64, 64, 65.0, 8.0, 15.0);
    for (std::size_t i = 0; i < lab.pixel_count(); ++i) {
        lab.l[i] = static_cast<float>(65.0 + tex(rng));
        lab.b[i] = static_cast<float>(15.0 + 0.5 * tex(rng));
    }
    const double clean = estimate_segmentation(lab, Mask(64, 64)).ita.value;
    std::uniform_int_distribution<std::size_t> pick(0, lab.pixel_count() - 1);
    for (int i = 0; i < 41; ++i) lab.l[pick(rng)] = 100.0f;
    EXPECT_NEAR(estimate_segmentation(lab, Mask(64, 64)).ita.value, clean, 0.5);
}

TEST(Segmentation, LesionContentNeverMatters) {
    Rng rng(99);
    std::uniform_real_distribution<float> u(0.0f, 100.0f);
    std::uniform_real_distribution<float> ub(-20.0f, 40.0f);
    for (int trial = 0; trial < 100; ++trial) {
        auto lab = uniform_lab(24, 24, 0, 0, 0);
        Mask lesion(24, 24);
        for (std::size_t i = 0; i < lab.pixel_count(); ++i) {
            lab.l[i] = 55.0f + 0.1f * u(rng);
            lab.a[i] = 0.05f * u(rng);
            lab.b[i] = 10.0f + 0.1f * u(rng);
            lesion.set(i, u(rng) < 40.0f);
        }
        const double before = estimate_segmentation(lab, lesion).ita.value;
        for (std::size_t i = 0; i < lab.pixel_count(); ++i) {
            if (!lesion[i]) continue;
            lab.l[i] = u(rng);
            lab.a[i] = ub(rng);
            lab.b[i] = ub(rng);
        }
        EXPECT_EQ(estimate_segmentation(lab, lesion).ita.value, before);
    }
}

TEST(Segmentation, NeedsTenSkinPixels) {
    Mask lesion(4, 4, true);
    lesion.set(0, 0, false);
    expect_error(ErrorCode::InsufficientSkinPixels,
                 [&] { estimate_segmentation(uniform_lab(4, 4, 60, 0, 10), lesion); });
    expect_error(ErrorCode::InvalidArgument,
                 [&] { estimate_segmentation(uniform_lab(4, 4, 60, 0, 10), Mask(5, 4)); });
    expect_error(ErrorCode::DegenerateInput,
                 [&] { estimate_segmentation(uniform_lab(8, 8, 60, 0, 0), Mask(8, 8)); });
}

// --------------------------------------------------------------- patch

TEST(EdgePatches, EightPatchLayout) {
    const auto img = uniform_image(512, 512, {200, 160, 140});
    const auto patches = sample_edge_patches(img, 32, 8);
    ASSERT_EQ(patches.size(), 8u);
    const int expected[8][2] = {{16, 16},  {464, 16},  {16, 464}, {464, 464},
                                {240, 16}, {240, 464}, {16, 240}, {464, 240}};
    for (int i = 0; i < 8; ++i) {
        EXPECT_EQ(patches[static_cast<std::size_t>(i)].x0, expected[i][0]);
        EXPECT_EQ(patches[static_cast<std::size_t>(i)].y0, expected[i][1]);
        EXPECT_EQ(patches[static_cast<std::size_t>(i)].pixels.width(), 32);
        EXPECT_EQ(patches[static_cast<std::size_t>(i)].pixels.height(), 32);
    }
}

TEST(EdgePatches, FourMeansCornersOnly) {
    const auto img = uniform_image(256, 256, {200, 160, 140});
    const auto patches = sample_edge_patches(img, 32, 4);
    ASSERT_EQ(patches.size(), 4u);
    for (const auto& p : patches) {
        EXPECT_TRUE(p.x0 == 16 || p.x0 == 256 - 48);
        EXPECT_TRUE(p.y0 == 16 || p.y0 == 256 - 48);
    }
    const auto again = sample_edge_patches(img, 32, 4);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(again[i].x0, patches[i].x0);
}

TEST(EdgePatches, TooLargeForImage) {
    const auto img = uniform_image(100, 100, {1, 2, 3});
    expect_error(ErrorCode::ImageTooSmall, [&] { sample_edge_patches(img, 26, 8); });
    EXPECT_NO_THROW(sample_edge_patches(img, 25, 8));
}

TEST(Patch, CentralLesionIgnored) {
    const SrgbPixel skin{214, 170, 146};
    auto img = uniform_image(256, 256, skin);
    fill_rect(img, 80, 80, 96, 96, {70, 40, 30});
    const auto lab = color::srgb_to_lab(skin);
    const double expected = std::atan2(lab.l_star - 50.0, lab.b_star) * kDeg;
    EXPECT_NEAR(estimate_patch(img).ita.value, expected, 1e-9);
}

TEST(Patch, DarkCornerDoesNotChangeMaximum) {
    const SrgbPixel skin{214, 170, 146};
    auto img = uniform_image(256, 256, skin);
    const double clean = estimate_patch(img).ita.value;
    fill_rect(img, 0, 0, 64, 64, {20, 15, 12});
    const auto est = estimate_patch(img);
    EXPECT_DOUBLE_EQ(est.ita.value, clean);
    EXPECT_NE(est.diagnostics.chosen_patch_index, 0);
}

TEST(Patch, HypopigmentedPatchWins) {
    auto img = uniform_image(256, 256, {214, 170, 146});
    const auto bright = color::lab_to_srgb({90.0, 0.0, 5.0});
    fill_rect(img, 256 - 48, 112, 32, 32, bright);  // right-middle patch
    const auto est = estimate_patch(img);
    EXPECT_EQ(est.diagnostics.chosen_patch_index, 7);
    const auto lab = color::srgb_to_lab(bright);
    EXPECT_NEAR(est.ita.value, std::atan2(lab.l_star - 50.0, lab.b_star) * kDeg, 1e-9);
    EXPECT_NEAR(est.ita.value, std::atan2(40.0, 5.0) * kDeg, 1.0);
}

TEST(Patch, EqualsMaximumOverPatches) {
    Rng rng(8);
    std::uniform_int_distribution<int> c(60, 230);
    for (int trial = 0; trial < 20; ++trial) {
        auto img = uniform_image(128, 128, {200, 160, 140});
        const auto patches = sample_edge_patches(img, 16, 8);
        double best = -1e9;
        for (const auto& p : patches) {
            const SrgbPixel px{std::uint8_t(c(rng)), std::uint8_t(c(rng)), std::uint8_t(c(rng))};
            fill_rect(img, p.x0, p.y0, 16, 16, px);
            const auto lab = color::srgb_to_lab(px);
            best = std::max(best, color::ita(lab.l_star, lab.b_star, color::ItaVariant::Arctan2).value);
        }
        EXPECT_NEAR(estimate_patch(img, {16, 8}).ita.value, best, 1e-9);
    }
}

// -------------------------------------------------------------- kmeans

TEST(KMeans, SingleClusterIsMean) {
    Rng rng(1);
    std::normal_distribution<double> n(0.0, 3.0);
    std::vector<LabPixel> pts;
    double ml = 0, ma = 0, mb = 0;
    for (int i = 0; i < 500; ++i) {
        pts.push_back({50 + n(rng), 10 + n(rng), 20 + n(rng)});
        ml += pts.back().l_star;
        ma += pts.back().a_star;
        mb += pts.back().b_star;
    }
    ml /= 500, ma /= 500, mb /= 500;
    const auto r = kmeans(pts, 1, 3);
    EXPECT_NEAR(r.centroids[0].l_star, ml, 1e-9);
    EXPECT_NEAR(r.centroids[0].a_star, ma, 1e-9);
    EXPECT_NEAR(r.centroids[0].b_star, mb, 1e-9);
    double ss = 0;
    for (const auto& p : pts) {
        ss += (p.l_star - ml) * (p.l_star - ml) + (p.a_star - ma) * (p.a_star - ma) + (p.b_star - mb) * (p.b_star - mb);
    }
    EXPECT_NEAR(r.inertia, ss, 1e-6 * ss);
}

TEST(KMeans, SeparatedBlobs) {
    Rng rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<LabPixel> pts;
    for (int i = 0; i < 300; ++i) pts.push_back({30 + n(rng), n(rng), 10 + n(rng)});
    for (int i = 0; i < 300; ++i) pts.push_back({80 + n(rng), n(rng), 10 + n(rng)});
    double m1 = 0, m2 = 0;
    for (int i = 0; i < 300; ++i) m1 += pts[static_cast<std::size_t>(i)].l_star / 300;
    for (int i = 300; i < 600; ++i) m2 += pts[static_cast<std::size_t>(i)].l_star / 300;
    const auto r = kmeans(pts, 2, 17);
    auto lo = r.centroids[0], hi = r.centroids[1];
    if (lo.l_star > hi.l_star) std::swap(lo, hi);
    EXPECT_NEAR(lo.l_star, m1, 1e-4);
    EXPECT_NEAR(hi.l_star, m2, 1e-4);
    for (std::size_t i = 1; i < 300; ++i) EXPECT_EQ(r.assignments[i], r.assignments[0]);
    EXPECT_NE(r.assignments[0], r.assignments[300]);
}

TEST(KMeans, InertiaNonIncreasingAndNearestAssignment) {
    Rng rng(4);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<LabPixel> pts;
        for (int i = 0; i < 200; ++i) pts.push_back({u(rng), u(rng) - 50, u(rng) - 50});
        const int k = 2 + trial % 6;
        const auto r = kmeans(pts, k, static_cast<std::uint64_t>(trial));
        for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
            EXPECT_LE(r.inertia_history[i], r.inertia_history[i - 1] * (1 + 1e-12));
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            auto d = [&](const LabPixel& c) {
                return std::pow(pts[i].l_star - c.l_star, 2) + std::pow(pts[i].a_star - c.a_star, 2) +
                       std::pow(pts[i].b_star - c.b_star, 2);
            };
            const double mine = d(r.centroids[static_cast<std::size_t>(r.assignments[i])]);
            for (const auto& c : r.centroids) EXPECT_LE(mine, d(c) + 1e-9);
        }
        const auto again = kmeans(pts, k, static_cast<std::uint64_t>(trial));
        EXPECT_EQ(again.assignments, r.assignments);
        EXPECT_EQ(again.inertia, r.inertia);
    }
}

TEST(KMeans, InvalidK) {
    const std::vector<LabPixel> pts(3, LabPixel{50, 0, 10});
    expect_error(ErrorCode::InvalidK, [&] { kmeans(pts, 0, 0); });
    expect_error(ErrorCode::InvalidK, [&] { kmeans(pts, 4, 0); });
}

// ------------------------------------------------------------- kneedle

// Normalised difference curve evaluated directly.
int knee_oracle(const std::vector<int>& xs, const std::vector<double>& ys) {
    const double x0 = xs.front(), x1 = xs.back();
    const double y_min = *std::min_element(ys.begin(), ys.end());
    const double y_max = *std::max_element(ys.begin(), ys.end());
    int best = -1;
    double best_d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double xn = (xs[i] - x0) / (x1 - x0);
        const double yn = (y_max - ys[i]) / (y_max - y_min);
        const double d = yn - xn;
        if (d > best_d) {
            best_d = d;
            best = xs[i];
        }
    }
    return best;
}

TEST(Kneedle, Reciprocal) {
    std::vector<int> xs;
    std::vector<double> ys;
    for (int x = 1; x <= 10; ++x) {
        xs.push_back(x);
        ys.push_back(1.0 / x);
    }
    const int knee = kneedle(xs, ys);
    EXPECT_NEAR(knee, knee_oracle(xs, ys), 1);
    EXPECT_TRUE(knee == 2 || knee == 3);
}

TEST(Kneedle, StraightLineHasNoKnee) {
    const std::vector<int> xs{1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<double> ys;
    for (int x : xs) ys.push_back(10.0 - x);
    expect_error(ErrorCode::NoKnee, [&] { kneedle(xs, ys); });
}

TEST(Kneedle, PiecewiseElbow) {
    const std::vector<int> xs{1, 2, 3, 4, 5};
    const std::vector<double> ys{10, 2, 1.5, 1.2, 1};
    EXPECT_EQ(kneedle(xs, ys), 2);
    EXPECT_EQ(knee_oracle(xs, ys), 2);
}

TEST(Kneedle, AgreesWithOracleOnConvexCurves) {
    Rng rng(12);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double p = u(rng);
        std::vector<int> xs;
        std::vector<double> ys;
        for (int x = 2; x <= 8; ++x) {
            xs.push_back(x);
            ys.push_back(std::pow(x, -p));
        }
        EXPECT_EQ(kneedle(xs, ys), knee_oracle(xs, ys)) << "p = " << p;
    }
}

// -------------------------------------------------------- quantization

TEST(Quantization, UniformSkin) {
    const SrgbPixel skin{214, 170, 146};
    const auto est = estimate_quantization(uniform_image(96, 96, skin));
    const auto lab = color::srgb_to_lab(skin);
    EXPECT_NEAR(est.ita.value, color::ita(lab.l_star, lab.b_star).value, 0.5);
    EXPECT_TRUE(est.diagnostics.k_selected.has_value());
    EXPECT_TRUE(est.diagnostics.knee_fallback);
}

// Flat skin isolates the Otsu + dilation lesion masking.
TEST(Quantization, AgreesWithSegmentationOnGeneratedLesions) {
    synth::SynthConfig flat;
    flat.texture_sigma = 0.0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        synth::SynthParams p;
        p.size = 128;
        p.seed = seed;
        p.melanosome_fraction = 0.05 + 0.08 * static_cast<double>(seed);
        p.lesion = {64.0, 64.0, 40.0, 39.0, 0.3, 25.0};  // ~30% of the frame
        const auto s = synth::generate_sample(p, flat);
        const double frac = static_cast<double>(s.lesion_mask.count()) / (128.0 * 128.0);
        EXPECT_NEAR(frac, 0.30, 0.03);
        const double seg = estimate_segmentation(color::to_lab(s.image), s.lesion_mask).ita.value;
        const double q = estimate_quantization(s.image).ita.value;
        EXPECT_NEAR(q, seg, 1.0) << "seed " << seed;
    }
}

// With textured skin the dominant cluster is one slice of a unimodal
// distribution, so it sits slightly off the median.
TEST(Quantization, TexturedSkinStaysCloseOnAverage) {
    auto plan = synth::plan_dataset(40, 3, 128);
    double total = 0.0;
    for (auto p : plan) {
        p.lighting_id = 0;
        p.n_hairs = 0;
        const auto s = synth::generate_sample(p);
        const double seg = estimate_segmentation(color::to_lab(s.image), s.lesion_mask).ita.value;
        total += std::abs(estimate_quantization(s.image).ita.value - seg);
    }
    EXPECT_LT(total / 40.0, 1.5);
}

TEST(Quantization, InvertedContrastIsFlagged) {
    auto img = uniform_image(128, 128, {150, 105, 80});
    fill_rect(img, 20, 20, 88, 88, {245, 225, 215});
    const auto est = estimate_quantization(img);
    EXPECT_TRUE(est.diagnostics.suspect_inverted_contrast);
    const auto skin = color::srgb_to_lab({150, 105, 80});
    EXPECT_GT(std::abs(est.ita.value - color::ita(skin.l_star, skin.b_star).value), 5.0);

    auto normal = uniform_image(128, 128, {245, 225, 215});
    fill_rect(normal, 40, 40, 48, 48, {90, 60, 45});
    EXPECT_FALSE(estimate_quantization(normal).diagnostics.suspect_inverted_contrast);
}

TEST(Quantization, DeterministicPerSeed) {
    synth::SynthParams p;
    p.size = 128;
    p.seed = 42;
    p.n_hairs = 3;
    p.lesion = {60.0, 70.0, 25.0, 18.0, 1.0, 20.0};
    const auto s = synth::generate_sample(p);
    QuantizationConfig cfg;
    cfg.seed = 9;
    const auto a = estimate_quantization(s.image, cfg);
    const auto b = estimate_quantization(s.image, cfg);
    EXPECT_EQ(a.ita.value, b.ita.value);
    EXPECT_EQ(a.diagnostics.k_selected, b.diagnostics.k_selected);
}

TEST(Quantization, RejectsSmallImages) {
    expect_error(ErrorCode::ImageTooSmall, [] { estimate_quantization(uniform_image(63, 80, {1, 2, 3})); });
}

TEST(Methods, NamesRoundTrip) {
    for (auto m : {Method::Segmentation, Method::Patch, Method::Quantization}) {
        EXPECT_EQ(parse_method(method_name(m)), m);
    }
    expect_error(ErrorCode::InvalidArgument, [] { parse_method("median"); });
}

TEST(Methods, UniformImageAllAgree) {
    for (SrgbPixel skin : {SrgbPixel{240, 210, 190}, SrgbPixel{190, 140, 110}, SrgbPixel{110, 75, 55}}) {
        const auto img = uniform_image(128, 128, skin);
        const auto lab = color::srgb_to_lab(skin);
        const double direct = color::ita(lab.l_star, lab.b_star).value;
        EXPECT_NEAR(estimate_segmentation(color::to_lab(img), Mask(128, 128)).ita.value, direct, 1.0);
        EXPECT_NEAR(estimate_patch(img).ita.value, direct, 1.0);
        EXPECT_NEAR(estimate_quantization(img).ita.value, direct, 1.0);
    }
}

}  // namespace
}  // namespace dermacolor::estimators
