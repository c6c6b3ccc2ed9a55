/**
 * @file imgproc.cpp
 */
#include "imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dermacolor::imgproc {

namespace {

int reflect101(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

struct Tiling {
    std::vector<int> edges;      // n + 1 boundaries
    std::vector<double> centers; // n pixel-space centers
};

Tiling make_tiling(int extent, int tiles) {
    Tiling t;
    t.edges.resize(static_cast<std::size_t>(tiles) + 1);
    for (int i = 0; i <= tiles; ++i) {
        t.edges[static_cast<std::size_t>(i)] =
            static_cast<int>(static_cast<long long>(i) * extent / tiles);
    }
    for (int i = 0; i < tiles; ++i) {
        t.centers.push_back(0.5 * (t.edges[static_cast<std::size_t>(i)] + t.edges[static_cast<std::size_t>(i) + 1]));
    }
    return t;
}

// Neighbouring tile indices and the weight of the second one at pixel centre p.
struct Blend {
    int lo;
    int hi;
    double w;
};

Blend locate(const Tiling& t, double p) {
    const int n = static_cast<int>(t.centers.size());
    if (n == 1 || p <= t.centers.front()) return {0, 0, 0.0};
    if (p >= t.centers.back()) return {n - 1, n - 1, 0.0};
    const auto it = std::upper_bound(t.centers.begin(), t.centers.end(), p);
    const int hi = static_cast<int>(it - t.centers.begin());
    const int lo = hi - 1;
    const double w = (p - t.centers[static_cast<std::size_t>(lo)]) /
                     (t.centers[static_cast<std::size_t>(hi)] - t.centers[static_cast<std::size_t>(lo)]);
    return {lo, hi, w};
}

}  // namespace

// =============================================================================
// CLAHE
// =============================================================================

Raster<float> clahe(const Raster<float>& channel, const ClaheConfig& config) {
    if (config.tiles_x < 1 || config.tiles_y < 1) {
        fail(ErrorCode::InvalidArgument, "CLAHE tile grid must be at least 1x1");
    }
    if (!(config.clip_limit > 0.0) || config.bins < 2 || !(config.range_max > config.range_min)) {
        fail(ErrorCode::InvalidArgument, "CLAHE needs clip_limit > 0, bins >= 2 and a non-empty range");
    }
    const int w = channel.width();
    const int h = channel.height();
    const Tiling tx = make_tiling(w, config.tiles_x);
    const Tiling ty = make_tiling(h, config.tiles_y);
    for (int i = 0; i < config.tiles_x; ++i) {
        if (tx.edges[static_cast<std::size_t>(i) + 1] - tx.edges[static_cast<std::size_t>(i)] < 2) {
            fail(ErrorCode::ImageTooSmall, "CLAHE tile narrower than 2 px");
        }
    }
    for (int j = 0; j < config.tiles_y; ++j) {
        if (ty.edges[static_cast<std::size_t>(j) + 1] - ty.edges[static_cast<std::size_t>(j)] < 2) {
            fail(ErrorCode::ImageTooSmall, "CLAHE tile shorter than 2 px");
        }
    }

    const int bins = config.bins;
    const double lo = config.range_min;
    const double span = config.range_max - config.range_min;
    auto bin_of = [&](float v) {
        const int b = static_cast<int>(std::floor((v - lo) / span * bins));
        return std::clamp(b, 0, bins - 1);
    };

    // One lookup table per tile, row-major over the tile grid.
    std::vector<std::vector<float>> luts(static_cast<std::size_t>(config.tiles_x * config.tiles_y));
    std::vector<double> hist(static_cast<std::size_t>(bins));
    for (int j = 0; j < config.tiles_y; ++j) {
        for (int i = 0; i < config.tiles_x; ++i) {
            std::fill(hist.begin(), hist.end(), 0.0);
            const int x0 = tx.edges[static_cast<std::size_t>(i)];
            const int x1 = tx.edges[static_cast<std::size_t>(i) + 1];
            const int y0 = ty.edges[static_cast<std::size_t>(j)];
            const int y1 = ty.edges[static_cast<std::size_t>(j) + 1];
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) hist[static_cast<std::size_t>(bin_of(channel.at(x, y)))] += 1.0;
            }
            const double n = static_cast<double>(x1 - x0) * static_cast<double>(y1 - y0);
            const double limit = std::max(1.0, config.clip_limit * n / bins);
            double excess = 0.0;
            for (double& c : hist) {
                if (c > limit) {
                    excess += c - limit;
                    c = limit;
                }
            }
            const double share = excess / bins;
            auto& lut = luts[static_cast<std::size_t>(j * config.tiles_x + i)];
            lut.resize(static_cast<std::size_t>(bins));
            double below = 0.0;
            for (int b = 0; b < bins; ++b) {
                const double c = hist[static_cast<std::size_t>(b)] + share;
                lut[static_cast<std::size_t>(b)] = static_cast<float>(lo + span * (below + 0.5 * c) / n);
                below += c;
            }
        }
    }

    Raster<float> out(w, h);
    for (int y = 0; y < h; ++y) {
        const Blend by = locate(ty, y + 0.5);
        for (int x = 0; x < w; ++x) {
            const Blend bx = locate(tx, x + 0.5);
            const auto b = static_cast<std::size_t>(bin_of(channel.at(x, y)));
            auto lut = [&](int ty_i, int tx_i) {
                return static_cast<double>(luts[static_cast<std::size_t>(ty_i * config.tiles_x + tx_i)][b]);
            };
            const double top = (1.0 - bx.w) * lut(by.lo, bx.lo) + bx.w * lut(by.lo, bx.hi);
            const double bottom = (1.0 - bx.w) * lut(by.hi, bx.lo) + bx.w * lut(by.hi, bx.hi);
            out.at(x, y) = static_cast<float>((1.0 - by.w) * top + by.w * bottom);
        }
    }
    return out;
}

// =============================================================================
// Otsu
// =============================================================================

int otsu_split(std::span<const std::uint64_t> histogram) {
    if (histogram.size() < 2) {
        fail(ErrorCode::InvalidArgument, "Otsu needs at least 2 bins");
    }
    std::int64_t total = 0;
    std::int64_t weighted = 0;
    for (std::size_t i = 0; i < histogram.size(); ++i) {
        total += static_cast<std::int64_t>(histogram[i]);
        weighted += static_cast<std::int64_t>(i) * static_cast<std::int64_t>(histogram[i]);
    }

    // Between-class variance up to the constant factor 1 / total^2:
    // (total * S0 - N0 * S)^2 / (N0 * N1), with bin indices as values.
    int best = -1;
    double best_score = -1.0;
    std::int64_t n0 = 0;
    std::int64_t s0 = 0;
    for (std::size_t k = 0; k + 1 < histogram.size(); ++k) {
        n0 += static_cast<std::int64_t>(histogram[k]);
        s0 += static_cast<std::int64_t>(k) * static_cast<std::int64_t>(histogram[k]);
        const std::int64_t n1 = total - n0;
        if (n0 == 0 || n1 == 0) continue;
        const double diff = static_cast<double>(total * s0 - n0 * weighted);
        const double score = diff * diff / (static_cast<double>(n0) * static_cast<double>(n1));
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(k);
        }
    }
    if (best < 0) {
        fail(ErrorCode::DegenerateInput, "Otsu threshold undefined: all mass in one bin");
    }
    return best;
}

OtsuResult otsu_threshold(std::span<const float> values, int bins) {
    if (bins < 2) fail(ErrorCode::InvalidArgument, "Otsu needs bins >= 2");
    if (values.empty()) fail(ErrorCode::DegenerateInput, "Otsu threshold of an empty sequence");
    const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *min_it;
    const double hi = *max_it;
    if (!(hi > lo)) fail(ErrorCode::DegenerateInput, "Otsu threshold undefined: all values identical");

    std::vector<std::uint64_t> hist(static_cast<std::size_t>(bins), 0);
    const double scale = bins / (hi - lo);
    for (float v : values) {
        const int b = std::min(bins - 1, static_cast<int>((v - lo) * scale));
        ++hist[static_cast<std::size_t>(b)];
    }
    const int k = otsu_split(hist);
    return {lo + (k + 1) * (hi - lo) / bins, k};
}

// =============================================================================
// Morphology
// =============================================================================

Mask dilate(const Mask& mask, int radius) {
    if (radius < 0) fail(ErrorCode::InvalidArgument, "dilation radius must be >= 0");
    if (radius == 0) return mask;
    const int w = mask.width();
    const int h = mask.height();

    // prefix[y][x] = number of set pixels in row y strictly left of x
    std::vector<int> prefix(static_cast<std::size_t>(h) * static_cast<std::size_t>(w + 1), 0);
    auto pre = [&](int y, int x) -> int& {
        return prefix[static_cast<std::size_t>(y) * static_cast<std::size_t>(w + 1) + static_cast<std::size_t>(x)];
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) pre(y, x + 1) = pre(y, x) + (mask.at(x, y) ? 1 : 0);
    }
    std::vector<int> half_width(static_cast<std::size_t>(radius) + 1);
    for (int dy = 0; dy <= radius; ++dy) {
        int hw = 0;
        while ((hw + 1) * (hw + 1) + dy * dy <= radius * radius) ++hw;
        half_width[static_cast<std::size_t>(dy)] = hw;
    }

    Mask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool hit = false;
            for (int dy = -radius; dy <= radius && !hit; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                const int hw = half_width[static_cast<std::size_t>(std::abs(dy))];
                const int x0 = std::max(0, x - hw);
                const int x1 = std::min(w, x + hw + 1);
                hit = pre(yy, x1) - pre(yy, x0) > 0;
            }
            out.set(x, y, hit);
        }
    }
    return out;
}

// =============================================================================
// Gaussian blur
// =============================================================================

std::vector<double> gaussian_kernel(double sigma, int kernel_size) {
    if (kernel_size < 3 || kernel_size % 2 == 0) {
        fail(ErrorCode::InvalidKernel, "Gaussian kernel size must be odd and >= 3, got " +
                                           std::to_string(kernel_size));
    }
    if (!(sigma > 0.0)) fail(ErrorCode::InvalidKernel, "Gaussian sigma must be > 0");
    const int r = kernel_size / 2;
    std::vector<double> taps(static_cast<std::size_t>(kernel_size));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        taps[static_cast<std::size_t>(i + r)] = v;
        sum += v;
    }
    for (double& t : taps) t /= sum;
    return taps;
}

template <typename T>
Raster<T> gaussian_blur(const Raster<T>& img, double sigma, int kernel_size) {
    const std::vector<double> taps = gaussian_kernel(sigma, kernel_size);
    const int r = kernel_size / 2;
    const int w = img.width();
    const int h = img.height();

    std::vector<double> tmp(img.size());
    for (int y = 0; y < h; ++y) {
        const auto row = img.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                acc += taps[static_cast<std::size_t>(k + r)] * static_cast<double>(row[static_cast<std::size_t>(reflect101(x + k, w))]);
            }
            tmp[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = acc;
        }
    }
    Raster<T> out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                const int yy = reflect101(y + k, h);
                acc += taps[static_cast<std::size_t>(k + r)] *
                       tmp[static_cast<std::size_t>(yy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
            }
            out.at(x, y) = static_cast<T>(acc);
        }
    }
    return out;
}

// =============================================================================
// Resampling
// =============================================================================

namespace {

// Sparse 1-D resampling operator: out[j] = sum_k weight * in[index].
struct Taps {
    std::vector<std::vector<std::pair<int, double>>> rows;
};

Taps area_taps(int src, int dst) {
    Taps t;
    const double scale = static_cast<double>(src) / dst;
    t.rows.resize(static_cast<std::size_t>(dst));
    for (int j = 0; j < dst; ++j) {
        const double a = j * scale;
        const double b = (j + 1) * scale;
        for (int i = static_cast<int>(std::floor(a)); i < src && i < b; ++i) {
            const double overlap = std::min(b, i + 1.0) - std::max(a, static_cast<double>(i));
            if (overlap > 0.0) t.rows[static_cast<std::size_t>(j)].emplace_back(i, overlap / scale);
        }
    }
    return t;
}

Taps bilinear_taps(int src, int dst) {
    Taps t;
    const double scale = static_cast<double>(src) / dst;
    t.rows.resize(static_cast<std::size_t>(dst));
    for (int j = 0; j < dst; ++j) {
        const double p = std::clamp((j + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
        const int i0 = static_cast<int>(std::floor(p));
        const int i1 = std::min(i0 + 1, src - 1);
        const double f = p - i0;
        auto& row = t.rows[static_cast<std::size_t>(j)];
        row.emplace_back(i0, 1.0 - f);
        if (i1 != i0 && f > 0.0) row.emplace_back(i1, f);
    }
    return t;
}

}  // namespace

template <typename T>
Raster<T> resize(const Raster<T>& img, int new_width, int new_height) {
    if (new_width < 1 || new_height < 1) fail(ErrorCode::InvalidArgument, "resize target must be >= 1x1");
    const int w = img.width();
    const int h = img.height();
    if (new_width == w && new_height == h) return img;

    const bool area = w >= 2 * new_width && h >= 2 * new_height;
    const Taps tx = area ? area_taps(w, new_width) : bilinear_taps(w, new_width);
    const Taps ty = area ? area_taps(h, new_height) : bilinear_taps(h, new_height);

    std::vector<double> tmp(static_cast<std::size_t>(h) * static_cast<std::size_t>(new_width));
    for (int y = 0; y < h; ++y) {
        const auto row = img.row(y);
        for (int j = 0; j < new_width; ++j) {
            double acc = 0.0;
            for (const auto& [i, wt] : tx.rows[static_cast<std::size_t>(j)]) {
                acc += wt * static_cast<double>(row[static_cast<std::size_t>(i)]);
            }
            tmp[static_cast<std::size_t>(y) * static_cast<std::size_t>(new_width) + static_cast<std::size_t>(j)] = acc;
        }
    }
    Raster<T> out(new_width, new_height);
    for (int k = 0; k < new_height; ++k) {
        for (int j = 0; j < new_width; ++j) {
            double acc = 0.0;
            for (const auto& [i, wt] : ty.rows[static_cast<std::size_t>(k)]) {
                acc += wt * tmp[static_cast<std::size_t>(i) * static_cast<std::size_t>(new_width) + static_cast<std::size_t>(j)];
            }
            out.at(j, k) = static_cast<T>(acc);
        }
    }
    return out;
}

template Raster<float> gaussian_blur(const Raster<float>&, double, int);
template Raster<double> gaussian_blur(const Raster<double>&, double, int);
template Raster<float> resize(const Raster<float>&, int, int);
template Raster<double> resize(const Raster<double>&, int, int);

}  // namespace dermacolor::imgproc
