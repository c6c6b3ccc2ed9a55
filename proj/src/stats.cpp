/**
 * @file stats.cpp
 */
#include "stats.hpp"

#include "parallel.hpp"
#include "rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace dermacolor::stats {

namespace {

void require_pairs(std::span<const double> x, std::span<const double> y, std::size_t min_n, const char* what) {
    if (x.size() != y.size() || x.size() < min_n) {
        fail(ErrorCode::InvalidArgument, std::string(what) + " needs two equally sized samples of length >= " +
                                             std::to_string(min_n));
    }
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    require_pairs(x, y, 3, "pearson");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) fail(ErrorCode::DegenerateInput, "pearson of a constant sample");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> r(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    require_pairs(x, y, 3, "spearman");
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    return pearson(rx, ry);
}

// =============================================================================
// Bootstrap
// =============================================================================

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) fail(ErrorCode::DegenerateInput, "quantile of an empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapInterval bootstrap_ci(std::span<const double> x, std::span<const double> y, const PairStatistic& statistic,
                               std::size_t n_resamples, double alpha, std::uint64_t seed) {
    require_pairs(x, y, 10, "bootstrap_ci");
    if (n_resamples < 1 || !(alpha > 0.0 && alpha < 1.0)) {
        fail(ErrorCode::InvalidArgument, "bootstrap needs n_resamples >= 1 and alpha in (0, 1)");
    }
    const std::size_t n = x.size();
    std::vector<std::optional<double>> values(n_resamples);
    parallel_for(n_resamples, [&](std::size_t r) {
        Rng rng(derive_seed(seed, r));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<double> xs(n);
        std::vector<double> ys(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = pick(rng);
            xs[i] = x[j];
            ys[i] = y[j];
        }
        try {
            values[r] = statistic(xs, ys);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateInput) throw;
        }
    });

    std::vector<double> valid;
    for (const auto& v : values) {
        if (v) valid.push_back(*v);
    }
    BootstrapInterval ci;
    ci.n_valid = valid.size();
    ci.n_skipped = n_resamples - valid.size();
    if (valid.empty()) fail(ErrorCode::DegenerateInput, "every bootstrap resample was degenerate");
    std::sort(valid.begin(), valid.end());
    ci.lo = quantile_sorted(valid, alpha / 2.0);
    ci.hi = quantile_sorted(valid, 1.0 - alpha / 2.0);
    return ci;
}

// =============================================================================
// Bland-Altman
// =============================================================================

BlandAltman bland_altman(std::span<const double> method, std::span<const double> reference) {
    require_pairs(method, reference, 2, "bland_altman");
    BlandAltman ba;
    const std::size_t n = method.size();
    for (std::size_t i = 0; i < n; ++i) {
        ba.means.push_back(0.5 * (method[i] + reference[i]));
        ba.diffs.push_back(method[i] - reference[i]);
    }
    ba.bias = std::accumulate(ba.diffs.begin(), ba.diffs.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double d : ba.diffs) ss += (d - ba.bias) * (d - ba.bias);
    ba.sd = std::sqrt(ss / static_cast<double>(n - 1));
    ba.loa_low = ba.bias - 1.96 * ba.sd;
    ba.loa_high = ba.bias + 1.96 * ba.sd;
    return ba;
}

// =============================================================================
// Lighting-sensitivity regressions
// =============================================================================

double fit_r2(std::span<const double> y, std::span<const double> mel, std::span<const int> light) {
    if (y.size() != mel.size() || (!light.empty() && light.size() != y.size())) {
        fail(ErrorCode::InvalidArgument, "fit_r2 needs one regressor value per observation");
    }
    std::map<int, std::size_t> level_counts;
    for (int l : light) ++level_counts[l];
    for (const auto& [level, count] : level_counts) {
        if (count < 2) {
            fail(ErrorCode::InsufficientData, "lighting level " + std::to_string(level) + " has fewer than 2 samples");
        }
    }
    std::map<int, Eigen::Index> dummy_column;
    Eigen::Index cols = 2;
    for (auto it = level_counts.begin(); it != level_counts.end(); ++it) {
        if (it != level_counts.begin()) dummy_column[it->first] = cols++;
    }
    const auto n = static_cast<Eigen::Index>(y.size());
    if (n <= cols) fail(ErrorCode::InsufficientData, "fit_r2 needs more observations than regressors");

    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, cols);
    Eigen::VectorXd target(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        design(i, 0) = 1.0;
        design(i, 1) = mel[k];
        if (!light.empty()) {
            if (auto it = dummy_column.find(light[k]); it != dummy_column.end()) design(i, it->second) = 1.0;
        }
        target(i) = y[k];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < cols) fail(ErrorCode::RankDeficient, "design matrix is rank deficient");
    const Eigen::VectorXd beta = qr.solve(target);
    const Eigen::VectorXd resid = target - design * beta;
    const double mean = target.mean();
    const double sst = (target.array() - mean).square().sum();
    if (!(sst > 0.0)) fail(ErrorCode::DegenerateInput, "response is constant");
    return 1.0 - resid.squaredNorm() / sst;
}

LightingSensitivity lighting_sensitivity(std::span<const double> y, std::span<const double> mel,
                                         std::span<const int> light) {
    LightingSensitivity s;
    s.r2_mel = fit_r2(y, mel);
    s.r2_mel_light = fit_r2(y, mel, light);
    s.delta_r2 = s.r2_mel_light - s.r2_mel;
    return s;
}

// =============================================================================
// Classification metrics
// =============================================================================

double quadratic_weighted_kappa(std::span<const std::uint64_t> confusion, int classes) {
    const auto k = static_cast<std::size_t>(classes);
    if (classes < 2 || confusion.size() != k * k) {
        fail(ErrorCode::InvalidArgument, "kappa needs a square confusion matrix with >= 2 classes");
    }
    std::vector<double> rows(k, 0.0);
    std::vector<double> cols(k, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const auto c = static_cast<double>(confusion[i * k + j]);
            rows[i] += c;
            cols[j] += c;
            total += c;
        }
    }
    if (!(total > 0.0)) fail(ErrorCode::DegenerateInput, "kappa of an empty confusion matrix");
    const double norm = static_cast<double>((classes - 1) * (classes - 1));
    double observed = 0.0;
    double expected = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const double d = static_cast<double>(i) - static_cast<double>(j);
            const double w = d * d / norm;
            observed += w * static_cast<double>(confusion[i * k + j]) / total;
            expected += w * rows[i] * cols[j] / (total * total);
        }
    }
    if (expected == 0.0) return observed == 0.0 ? 1.0 : 0.0;  // single class on both sides
    return 1.0 - observed / expected;
}

FpMetrics fp_metrics(std::span<const color::FitzpatrickType> gt, std::span<const color::FitzpatrickType> pred) {
    if (gt.size() != pred.size() || gt.empty()) {
        fail(ErrorCode::InvalidArgument, "fp_metrics needs equally sized, non-empty label lists");
    }
    FpMetrics m;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        ++m.confusion[static_cast<std::size_t>(gt[i].index() - 1)][static_cast<std::size_t>(pred[i].index() - 1)];
    }
    int present = 0;
    for (std::size_t c = 0; c < 6; ++c) {
        std::uint64_t row = 0;
        std::uint64_t col = 0;
        for (std::size_t j = 0; j < 6; ++j) {
            row += m.confusion[c][j];
            col += m.confusion[j][c];
        }
        if (row == 0) continue;
        ++present;
        const auto tp = static_cast<double>(m.confusion[c][c]);
        const double recall = tp / static_cast<double>(row);
        const double precision = col > 0 ? tp / static_cast<double>(col) : 0.0;
        const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        m.macro_recall += recall;
        m.macro_precision += precision;
        m.macro_f1 += f1;
    }
    m.macro_recall /= present;
    m.macro_precision /= present;
    m.macro_f1 /= present;
    m.balanced_accuracy = m.macro_recall;

    std::vector<std::uint64_t> flat;
    for (const auto& row : m.confusion) flat.insert(flat.end(), row.begin(), row.end());
    m.qw_kappa = quadratic_weighted_kappa(flat, 6);
    return m;
}

}  // namespace dermacolor::stats
