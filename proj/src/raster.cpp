/**
 * @file raster.cpp
 */
#include "raster.hpp"

#include <algorithm>

namespace dermacolor {

std::size_t Mask::count() const noexcept {
    const auto px = bits_.pixels();
    return static_cast<std::size_t>(std::count_if(px.begin(), px.end(), [](std::uint8_t v) { return v != 0; }));
}

RgbImage::RgbImage(int width, int height) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
        fail(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
    }
    data_.assign(3 * pixel_count(), 0);
}

RgbImage::RgbImage(int width, int height, std::vector<std::uint8_t> rgb) : RgbImage(width, height) {
    if (rgb.size() != data_.size()) {
        fail(ErrorCode::InvalidArgument, "RGB buffer length does not match 3 x width x height");
    }
    data_ = std::move(rgb);
}

RgbImage RgbImage::crop(int x0, int y0, int w, int h) const {
    if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > width_ || y0 + h > height_) {
        fail(ErrorCode::InvalidArgument, "crop window outside image");
    }
    RgbImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = pixel(x0, y0 + y);
        std::copy(src, src + 3 * static_cast<std::size_t>(w), out.pixel(0, y));
    }
    return out;
}

}  // namespace dermacolor
