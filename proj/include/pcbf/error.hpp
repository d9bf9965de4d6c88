#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pcbf {

enum class ErrorCode {
    InvalidInput,
    NotPSD,
    EpsilonTooLarge,
    InvalidAlpha,
    InvalidShift,
    SupportViolated,
    DimensionMismatch,
    BarrierNotAffine,
    SingularInnovation,
    MissingColumns,
    ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::EpsilonTooLarge: return "EpsilonTooLarge";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::InvalidShift: return "InvalidShift";
    case ErrorCode::SupportViolated: return "SupportViolated";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BarrierNotAffine: return "BarrierNotAffine";
    case ErrorCode::SingularInnovation: return "SingularInnovation";
    case ErrorCode::MissingColumns: return "MissingColumns";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

} // namespace pcbf
