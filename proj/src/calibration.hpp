/**
 * @file calibration.hpp
 * @brief Ordinary-least-squares calibration of raw ITA against a reference ITA
 */
#pragma once

#include "color.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace dermacolor::calibration {

struct CalibrationModel {
    double slope = 1.0;
    double intercept = 0.0;  ///< degrees
    std::size_t n_fit = 0;
    double r2_fit = 1.0;
};

/// Closed-form simple linear regression y ~ slope * x + intercept.
CalibrationModel fit_ols(std::span<const double> x, std::span<const double> y);

inline color::ItaDegrees apply(const CalibrationModel& model, color::ItaDegrees raw) noexcept {
    return {model.slope * raw.value + model.intercept};
}

/// One model per group label (e.g. lighting condition).
std::map<int, CalibrationModel> fit_ols_per_group(std::span<const double> x, std::span<const double> y,
                                                  std::span<const int> groups);

/// Deterministic held-out split: returns true for the indices assigned to
/// the calibration (fit) split, round(fraction * n) of them, at least 2.
std::vector<bool> calibration_split(std::size_t n, double fraction, std::uint64_t seed);

void to_json(nlohmann::json& j, const CalibrationModel& m);
void from_json(const nlohmann::json& j, CalibrationModel& m);

}  // namespace dermacolor::calibration
