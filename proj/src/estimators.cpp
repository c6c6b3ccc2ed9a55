/**
 * @file estimators.cpp
 */
#include "estimators.hpp"

#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dermacolor::estimators {

using color::ItaVariant;
using color::LabPixel;

const char* method_name(Method m) noexcept {
    switch (m) {
        case Method::Segmentation: return "segmentation";
        case Method::Patch: return "patch";
        case Method::Quantization: return "quantization";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "segmentation") return Method::Segmentation;
    if (name == "patch") return Method::Patch;
    if (name == "quantization") return Method::Quantization;
    fail(ErrorCode::InvalidArgument, "unknown estimation method '" + name + "'");
}

// =============================================================================
// Segmentation-based
// =============================================================================

double median(std::vector<double> values) {
    if (values.empty()) fail(ErrorCode::DegenerateInput, "median of an empty sequence");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

namespace {

double population_std(const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

SkinPixels robust_skin_pixels(const LabImage& lab, const Mask& lesion_mask, std::size_t min_pixels) {
    if (!lesion_mask.same_shape(lab.width(), lab.height())) {
        fail(ErrorCode::InvalidArgument, "lesion mask dimensions do not match the image");
    }
    SkinPixels skin;
    for (std::size_t i = 0; i < lab.pixel_count(); ++i) {
        if (lesion_mask[i]) continue;
        skin.l_star.push_back(lab.l[i]);
        skin.b_star.push_back(lab.b[i]);
    }
    if (skin.l_star.size() < min_pixels) {
        fail(ErrorCode::InsufficientSkinPixels,
             "only " + std::to_string(skin.l_star.size()) + " non-lesion pixels (need " +
                 std::to_string(min_pixels) + ")");
    }
    const double med_l = median(skin.l_star);
    const double med_b = median(skin.b_star);
    const double std_l = population_std(skin.l_star);
    const double std_b = population_std(skin.b_star);

    SkinPixels kept;
    for (std::size_t i = 0; i < skin.l_star.size(); ++i) {
        if (std::abs(skin.l_star[i] - med_l) > std_l || std::abs(skin.b_star[i] - med_b) > std_b) continue;
        kept.l_star.push_back(skin.l_star[i]);
        kept.b_star.push_back(skin.b_star[i]);
    }
    if (kept.l_star.empty()) {
        fail(ErrorCode::InsufficientSkinPixels, "outlier rejection removed every skin pixel");
    }
    return kept;
}

ItaEstimate estimate_segmentation(const LabImage& lab, const Mask& lesion_mask) {
    const SkinPixels skin = robust_skin_pixels(lab, lesion_mask);
    const double med_b = median(skin.b_star);
    if (med_b == 0.0) fail(ErrorCode::DegenerateInput, "median b* of the skin is 0");
    ItaEstimate est;
    est.method = Method::Segmentation;
    est.ita = color::ita(median(skin.l_star), med_b, ItaVariant::Arctan);
    est.diagnostics.n_pixels_used = skin.l_star.size();
    return est;
}

// =============================================================================
// Patch-based
// =============================================================================

std::vector<Patch> sample_edge_patches(const RgbImage& img, int patch_size, int n_patches) {
    if (n_patches < 1 || n_patches > 8) {
        fail(ErrorCode::InvalidArgument, "n_patches must be in 1..8, got " + std::to_string(n_patches));
    }
    if (patch_size < 1 || 4 * patch_size > std::min(img.width(), img.height())) {
        fail(ErrorCode::ImageTooSmall, "patch size " + std::to_string(patch_size) +
                                           " exceeds a quarter of the smaller image side");
    }
    const int inset = patch_size / 2;
    const int left = inset;
    const int right = img.width() - inset - patch_size;
    const int top = inset;
    const int bottom = img.height() - inset - patch_size;
    const int cx = (img.width() - patch_size) / 2;
    const int cy = (img.height() - patch_size) / 2;
    const int layout[8][2] = {
        {left, top}, {right, top}, {left, bottom}, {right, bottom},
        {cx, top},   {cx, bottom}, {left, cy},     {right, cy},
    };

    std::vector<Patch> patches;
    for (int i = 0; i < n_patches; ++i) {
        const int x0 = layout[i][0];
        const int y0 = layout[i][1];
        patches.push_back({x0, y0, img.crop(x0, y0, patch_size, patch_size)});
    }
    return patches;
}

ItaEstimate estimate_patch(const RgbImage& img, const PatchConfig& config) {
    const auto patches = sample_edge_patches(img, config.patch_size, config.n_patches);
    ItaEstimate est;
    est.method = Method::Patch;
    double best = -std::numeric_limits<double>::infinity();
    int best_index = 0;
    for (std::size_t p = 0; p < patches.size(); ++p) {
        const RgbImage& px = patches[p].pixels;
        const auto bytes = px.bytes();
        double sum_l = 0.0;
        double sum_b = 0.0;
        for (std::size_t i = 0; i < px.pixel_count(); ++i) {
            const LabPixel lab = color::srgb_to_lab({bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]});
            sum_l += lab.l_star;
            sum_b += lab.b_star;
        }
        const double n = static_cast<double>(px.pixel_count());
        const double value = color::ita(sum_l / n, sum_b / n, ItaVariant::Arctan2).value;
        if (value > best) {
            best = value;
            best_index = static_cast<int>(p);
        }
    }
    est.ita = {best};
    est.diagnostics.chosen_patch_index = best_index;
    est.diagnostics.n_pixels_used = static_cast<std::size_t>(config.patch_size) * static_cast<std::size_t>(config.patch_size);
    return est;
}

// =============================================================================
// k-means
// =============================================================================

namespace {

double sq_dist(const LabPixel& p, const LabPixel& q) {
    const double dl = p.l_star - q.l_star;
    const double da = p.a_star - q.a_star;
    const double db = p.b_star - q.b_star;
    return dl * dl + da * da + db * db;
}

std::vector<LabPixel> kmeanspp_init(std::span<const LabPixel> points, int k, Rng& rng) {
    std::vector<LabPixel> centers;
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    centers.push_back(points[pick(rng)]);
    std::vector<double> d2(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) d2[i] = sq_dist(points[i], centers[0]);

    while (static_cast<int>(centers.size()) < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t chosen = 0;
        if (total > 0.0) {
            const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            double run = 0.0;
            chosen = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                run += d2[i];
                if (run > target && d2[i] > 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centers.push_back(points[chosen]);
        for (std::size_t i = 0; i < points.size(); ++i) d2[i] = std::min(d2[i], sq_dist(points[i], centers.back()));
    }
    return centers;
}

double assign(std::span<const LabPixel> points, const std::vector<LabPixel>& centroids, std::vector<int>& labels) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        int best = 0;
        double best_d = sq_dist(points[i], centroids[0]);
        for (std::size_t c = 1; c < centroids.size(); ++c) {
            const double d = sq_dist(points[i], centroids[c]);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        labels[i] = best;
        inertia += best_d;
    }
    return inertia;
}

}  // namespace

KMeansResult kmeans(std::span<const LabPixel> points, int k, std::uint64_t seed, int max_iter, double tol) {
    if (k < 1 || points.empty() || static_cast<std::size_t>(k) > points.size()) {
        fail(ErrorCode::InvalidK, "k-means needs 1 <= k <= number of points (k = " + std::to_string(k) +
                                      ", points = " + std::to_string(points.size()) + ")");
    }
    if (max_iter < 1) fail(ErrorCode::InvalidArgument, "k-means max_iter must be >= 1");

    Rng rng(seed);
    KMeansResult res;
    res.centroids = kmeanspp_init(points, k, rng);
    res.assignments.assign(points.size(), 0);

    for (res.iterations = 0; res.iterations < max_iter;) {
        res.inertia_history.push_back(assign(points, res.centroids, res.assignments));
        std::vector<LabPixel> sums(static_cast<std::size_t>(k));
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            auto& s = sums[static_cast<std::size_t>(res.assignments[i])];
            s.l_star += points[i].l_star;
            s.a_star += points[i].a_star;
            s.b_star += points[i].b_star;
            ++counts[static_cast<std::size_t>(res.assignments[i])];
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < sums.size(); ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its centroid
            const double n = static_cast<double>(counts[c]);
            const LabPixel next{sums[c].l_star / n, sums[c].a_star / n, sums[c].b_star / n};
            shift = std::max(shift, std::sqrt(sq_dist(next, res.centroids[c])));
            res.centroids[c] = next;
        }
        ++res.iterations;
        if (shift < tol) break;
    }
    res.inertia = assign(points, res.centroids, res.assignments);
    res.inertia_history.push_back(res.inertia);
    return res;
}

int kneedle(std::span<const int> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 3) {
        fail(ErrorCode::InvalidArgument, "kneedle needs matching sequences of length >= 3");
    }
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1])) fail(ErrorCode::InvalidArgument, "kneedle xs must be strictly increasing");
        if (ys[i] > ys[i - 1]) fail(ErrorCode::InvalidArgument, "kneedle ys must be non-increasing");
    }
    const double x_span = static_cast<double>(xs.back() - xs.front());
    const double y_max = ys.front();
    const double y_min = ys.back();
    if (!(y_max > y_min)) fail(ErrorCode::NoKnee, "flat curve has no knee");

    constexpr double kEps = 1e-12;
    std::size_t best = 0;
    double best_d = kEps;
    bool found = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double xn = (xs[i] - xs.front()) / x_span;
        const double yn = (ys[i] - y_min) / (y_max - y_min);
        const double d = (1.0 - yn) - xn;
        if (d > best_d) {
            best_d = d;
            best = i;
            found = true;
        }
    }
    if (!found) fail(ErrorCode::NoKnee, "difference curve has no positive interior maximum");
    return xs[best];
}

// =============================================================================
// Color quantization
// =============================================================================

ItaEstimate estimate_quantization(const RgbImage& img, const QuantizationConfig& config) {
    if (img.width() < 64 || img.height() < 64) {
        fail(ErrorCode::ImageTooSmall, "color quantization needs an image of at least 64x64");
    }
    if (config.k_min < 1 || config.k_max < config.k_min || config.k_fallback < 1) {
        fail(ErrorCode::InvalidArgument, "invalid k search range");
    }
    const LabImage lab = color::to_lab(img);
    std::optional<Raster<float>> enhanced_l;
    if (config.clahe_clustering) enhanced_l = imgproc::clahe(lab.l, config.clahe);
    const std::size_t n = lab.pixel_count();

    // HSV value channel of the original image.
    std::vector<float> value(n);
    const auto bytes = img.bytes();
    for (std::size_t i = 0; i < n; ++i) {
        value[i] = static_cast<float>(std::max({bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]}) / 255.0);
    }

    ItaEstimate est;
    est.method = Method::Quantization;
    Mask dark(img.width(), img.height());
    try {
        const auto otsu = imgproc::otsu_threshold(value, config.otsu_bins);
        for (std::size_t i = 0; i < n; ++i) dark.set(i, value[i] < otsu.threshold);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateInput) throw;  // flat image: nothing to mask
    }
    est.diagnostics.suspect_inverted_contrast = 2 * dark.count() > n;

    const Mask masked = imgproc::dilate(dark, config.dilation_radius);
    const double masked_fraction = static_cast<double>(masked.count()) / static_cast<double>(n);
    est.diagnostics.masked_fraction = masked_fraction;
    if (masked_fraction > config.max_masked_fraction) {
        fail(ErrorCode::InsufficientSkinPixels,
             "lesion mask covers " + std::to_string(100.0 * masked_fraction) + "% of the image");
    }

    std::vector<LabPixel> skin;
    skin.reserve(n - masked.count());
    for (std::size_t i = 0; i < n; ++i) {
        if (!masked[i]) skin.push_back({lab.l[i], lab.a[i], lab.b[i]});
        if (!masked[i] && config.clahe_clustering) skin.back().l_star = (*enhanced_l)[i];
    }
    est.diagnostics.n_pixels_used = skin.size();
    std::vector<LabPixel> points;
    if (skin.size() > config.max_points) {
        points.reserve(config.max_points);
        for (std::size_t j = 0; j < config.max_points; ++j) points.push_back(skin[j * skin.size() / config.max_points]);
    } else {
        points = skin;
    }

    const int k_hi = std::min<int>(config.k_max, static_cast<int>(points.size()));
    std::vector<int> ks;
    std::vector<double> inertias;
    std::vector<KMeansResult> fits;
    for (int k = config.k_min; k <= k_hi; ++k) {
        fits.push_back(kmeans(points, k, derive_seed(config.seed, static_cast<std::uint64_t>(k)), config.max_iter,
                              config.tol));
        ks.push_back(k);
        // Each k has its own seed, so enforce the non-increasing envelope.
        inertias.push_back(inertias.empty() ? fits.back().inertia : std::min(inertias.back(), fits.back().inertia));
    }
    if (fits.empty()) fail(ErrorCode::InsufficientSkinPixels, "too few skin pixels for clustering");

    int k_selected = std::clamp(config.k_fallback, ks.front(), ks.back());
    if (ks.size() >= 3) {
        try {
            k_selected = kneedle(ks, inertias);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoKnee) throw;
            est.diagnostics.knee_fallback = true;
        }
    } else {
        est.diagnostics.knee_fallback = true;
    }
    const KMeansResult& fit = fits[static_cast<std::size_t>(k_selected - ks.front())];

    std::vector<std::size_t> counts(fit.centroids.size(), 0);
    for (int a : fit.assignments) ++counts[static_cast<std::size_t>(a)];
    auto ranks_before = [&](std::size_t p, std::size_t q) {
        if (counts[p] != counts[q]) return counts[p] > counts[q];
        const auto& cp = fit.centroids[p];
        const auto& cq = fit.centroids[q];
        if (cp.l_star != cq.l_star) return cp.l_star > cq.l_star;
        if (cp.a_star != cq.a_star) return cp.a_star > cq.a_star;
        return cp.b_star > cq.b_star;
    };
    std::size_t top = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
        if (ranks_before(c, top)) top = c;
    }
    const LabPixel& centroid = fit.centroids[top];
    if (centroid.b_star == 0.0) fail(ErrorCode::DegenerateInput, "dominant cluster has b* = 0");
    est.ita = color::ita(centroid.l_star, centroid.b_star, ItaVariant::Arctan);
    est.diagnostics.k_selected = k_selected;
    est.diagnostics.chosen_cluster_size = counts[top];
    return est;
}

}  // namespace dermacolor::estimators
