/**
 * @file stats.hpp
 * @brief Evaluation statistics: correlation with bootstrap intervals,
 *        Bland-Altman agreement, lighting-sensitivity regressions and
 *        Fitzpatrick classification metrics
 */
#pragma once

#include "color.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace dermacolor::stats {

/// Sample Pearson correlation. Throws DegenerateInput on constant input.
double pearson(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based, ties share their mean rank).
std::vector<double> ranks(std::span<const double> values);

/// Pearson correlation of the average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

using PairStatistic = std::function<double(std::span<const double>, std::span<const double>)>;

struct BootstrapInterval {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n_valid = 0;
    std::size_t n_skipped = 0;  ///< resamples where the statistic threw
};

/// Percentile bootstrap over resampled (x, y) pairs. Resample r draws from
/// a stream seeded by (seed, r), so the result does not depend on threading.
BootstrapInterval bootstrap_ci(std::span<const double> x, std::span<const double> y, const PairStatistic& statistic,
                               std::size_t n_resamples = 1000, double alpha = 0.05, std::uint64_t seed = 0);

/// Linear-interpolated quantile of a sorted sample (q in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double q);

struct BlandAltman {
    std::vector<double> means;
    std::vector<double> diffs;  ///< method - reference
    double bias = 0.0;
    double sd = 0.0;  ///< sample standard deviation of diffs
    double loa_low = 0.0;
    double loa_high = 0.0;
};

BlandAltman bland_altman(std::span<const double> method, std::span<const double> reference);

/// OLS with intercept; `light` levels enter as reference-coded dummies
/// (first sorted level dropped). Solved by column-pivoting QR.
double fit_r2(std::span<const double> y, std::span<const double> mel, std::span<const int> light = {});

struct LightingSensitivity {
    double r2_mel = 0.0;
    double r2_mel_light = 0.0;
    double delta_r2 = 0.0;
};

LightingSensitivity lighting_sensitivity(std::span<const double> y, std::span<const double> mel,
                                         std::span<const int> light);

struct FpMetrics {
    std::array<std::array<std::uint64_t, 6>, 6> confusion{};  ///< rows = ground truth, cols = predicted
    double balanced_accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double qw_kappa = 0.0;
};

/// Macro averages run over the classes present in the ground truth.
FpMetrics fp_metrics(std::span<const color::FitzpatrickType> gt, std::span<const color::FitzpatrickType> pred);

/// Quadratic weighted kappa of a K x K confusion matrix (row-major).
double quadratic_weighted_kappa(std::span<const std::uint64_t> confusion, int classes);

}  // namespace dermacolor::stats
