/**
 * @file error.cpp
 */
#include "error.hpp"

namespace dermacolor {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::InvalidThresholds: return "InvalidThresholds";
        case ErrorCode::ImageTooSmall: return "ImageTooSmall";
        case ErrorCode::InvalidKernel: return "InvalidKernel";
        case ErrorCode::InsufficientSkinPixels: return "InsufficientSkinPixels";
        case ErrorCode::InvalidK: return "InvalidK";
        case ErrorCode::NoKnee: return "NoKnee";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::InvalidParams: return "InvalidParams";
        case ErrorCode::InsufficientBins: return "InsufficientBins";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Format: return "Format";
    }
    return "Unknown";
}

}  // namespace dermacolor
