/**
 * @file raster.hpp
 * @brief Raster buffers: single-channel planes, boolean masks, 8-bit sRGB
 *        images and planar CIELAB images
 */
#pragma once

#include "error.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dermacolor {

/// Row-major single-channel plane.
template <typename T>
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
        if (width < 1 || height < 1) {
            fail(ErrorCode::InvalidArgument,
                 "raster dimensions must be >= 1, got " + std::to_string(width) + "x" +
                     std::to_string(height));
        }
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }
    Raster(int width, int height, std::vector<T> data) : Raster(width, height) {
        if (data.size() != data_.size()) {
            fail(ErrorCode::InvalidArgument, "raster data length does not match dimensions");
        }
        data_ = std::move(data);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& at(int x, int y) noexcept { return data_[index(x, y)]; }
    const T& at(int x, int y) const noexcept { return data_[index(x, y)]; }
    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<T> pixels() noexcept { return data_; }
    std::span<const T> pixels() const noexcept { return data_; }
    std::span<T> row(int y) noexcept { return std::span<T>(data_).subspan(index(0, y), width_); }
    std::span<const T> row(int y) const noexcept {
        return std::span<const T>(data_).subspan(index(0, y), width_);
    }

    bool operator==(const Raster&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Per-pixel selection; true marks a selected (e.g. lesion) pixel.
class Mask {
public:
    Mask() = default;
    Mask(int width, int height, bool fill = false)
        : bits_(width, height, static_cast<std::uint8_t>(fill ? 1 : 0)) {}

    int width() const noexcept { return bits_.width(); }
    int height() const noexcept { return bits_.height(); }
    std::size_t size() const noexcept { return bits_.size(); }

    bool at(int x, int y) const noexcept { return bits_.at(x, y) != 0; }
    void set(int x, int y, bool v) noexcept { bits_.at(x, y) = v ? 1 : 0; }
    bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }
    void set(std::size_t i, bool v) noexcept { bits_[i] = v ? 1 : 0; }

    std::size_t count() const noexcept;
    bool same_shape(int width, int height) const noexcept {
        return width == this->width() && height == this->height();
    }

    bool operator==(const Mask&) const = default;

private:
    Raster<std::uint8_t> bits_;
};

/// 8-bit sRGB image, interleaved RGB.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height);
    RgbImage(int width, int height, std::vector<std::uint8_t> rgb);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    std::uint8_t* pixel(int x, int y) noexcept { return data_.data() + offset(x, y); }
    const std::uint8_t* pixel(int x, int y) const noexcept { return data_.data() + offset(x, y); }
    std::span<const std::uint8_t> bytes() const noexcept { return data_; }
    std::span<std::uint8_t> bytes() noexcept { return data_; }

    /// Copy of the w x h window whose top-left corner is (x0, y0).
    RgbImage crop(int x0, int y0, int w, int h) const;

    bool operator==(const RgbImage&) const = default;

private:
    std::size_t offset(int x, int y) const noexcept {
        return 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                    static_cast<std::size_t>(x));
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Planar CIELAB image.
struct LabImage {
    Raster<float> l;
    Raster<float> a;
    Raster<float> b;

    int width() const noexcept { return l.width(); }
    int height() const noexcept { return l.height(); }
    std::size_t pixel_count() const noexcept { return l.size(); }
};

}  // namespace dermacolor
