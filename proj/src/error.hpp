/**
 * @file error.hpp
 * @brief Error type shared by every core module
 */
#pragma once

#include <stdexcept>
#include <string>

namespace dermacolor {

enum class ErrorCode {
    InvalidArgument,
    DegenerateInput,
    InvalidThresholds,
    ImageTooSmall,
    InvalidKernel,
    InsufficientSkinPixels,
    InvalidK,
    NoKnee,
    RankDeficient,
    OutOfRange,
    InvalidParams,
    InsufficientBins,
    InsufficientData,
    Io,
    Format,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace dermacolor
