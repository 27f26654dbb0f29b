#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kse {

enum class ErrorCode {
    invalid_point,
    invalid_domain,
    map_evaluation,
    stencil_out_of_range,
    out_of_inner_domain,
    invalid_direction,
    unsupported_dimension,
    insufficient_data,
    invalid_config,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_point: return "invalid_point";
        case ErrorCode::invalid_domain: return "invalid_domain";
        case ErrorCode::map_evaluation: return "map_evaluation";
        case ErrorCode::stencil_out_of_range: return "stencil_out_of_range";
        case ErrorCode::out_of_inner_domain: return "out_of_inner_domain";
        case ErrorCode::invalid_direction: return "invalid_direction";
        case ErrorCode::unsupported_dimension: return "unsupported_dimension";
        case ErrorCode::insufficient_data: return "insufficient_data";
        case ErrorCode::invalid_config: return "invalid_config";
    }
    return "unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace kse
