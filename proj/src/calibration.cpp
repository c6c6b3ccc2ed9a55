/**
 * @file calibration.cpp
 */
#include "calibration.hpp"

#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dermacolor::calibration {

CalibrationModel fit_ols(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        fail(ErrorCode::InvalidArgument, "OLS needs two equally sized samples of length >= 2");
    }
    const double n = static_cast<double>(x.size());
    const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) fail(ErrorCode::DegenerateInput, "OLS regressor is constant");

    CalibrationModel m;
    m.slope = sxy / sxx;
    m.intercept = mean_y - m.slope * mean_x;
    m.n_fit = x.size();
    if (syy > 0.0) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - (m.slope * x[i] + m.intercept);
            ssr += r * r;
        }
        m.r2_fit = 1.0 - ssr / syy;
    } else {
        m.r2_fit = 1.0;
    }
    return m;
}

std::map<int, CalibrationModel> fit_ols_per_group(std::span<const double> x, std::span<const double> y,
                                                  std::span<const int> groups) {
    if (x.size() != y.size() || x.size() != groups.size()) {
        fail(ErrorCode::InvalidArgument, "per-group OLS needs one group label per pair");
    }
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> split;
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto& [gx, gy] = split[groups[i]];
        gx.push_back(x[i]);
        gy.push_back(y[i]);
    }
    std::map<int, CalibrationModel> out;
    for (const auto& [g, xy] : split) out[g] = fit_ols(xy.first, xy.second);
    return out;
}

std::vector<bool> calibration_split(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        fail(ErrorCode::InvalidArgument, "calibration fraction must be in (0, 1)");
    }
    if (n < 2) fail(ErrorCode::InsufficientData, "calibration needs at least 2 samples");
    const auto n_fit = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))),
                                               2, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> fit(n, false);
    for (std::size_t i = 0; i < n_fit; ++i) fit[order[i]] = true;
    return fit;
}

void to_json(nlohmann::json& j, const CalibrationModel& m) {
    j = nlohmann::json{{"slope", m.slope}, {"intercept", m.intercept}, {"n_fit", m.n_fit}, {"r2_fit", m.r2_fit}};
}

void from_json(const nlohmann::json& j, CalibrationModel& m) {
    try {
        m.slope = j.at("slope").get<double>();
        m.intercept = j.at("intercept").get<double>();
        m.n_fit = j.at("n_fit").get<std::size_t>();
        m.r2_fit = j.at("r2_fit").get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Format, std::string("invalid calibration model: ") + e.what());
    }
    if (m.n_fit < 2 || !std::isfinite(m.slope) || !std::isfinite(m.intercept)) {
        fail(ErrorCode::Format, "calibration model needs n_fit >= 2 and finite coefficients");
    }
}

}  // namespace dermacolor::calibration
