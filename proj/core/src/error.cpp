#include "p2lr/error.hpp"

namespace p2lr {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::input_error: return "input_error";
    case ErrorCode::singular_normalization: return "singular_normalization";
    case ErrorCode::infinite_divergence: return "infinite_divergence";
    case ErrorCode::contract_error: return "contract_error";
    case ErrorCode::oracle_size: return "oracle_size";
    case ErrorCode::split_error: return "split_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::format_error: return "format_error";
    case ErrorCode::schema_error: return "schema_error";
    case ErrorCode::enum_error: return "enum_error";
    case ErrorCode::usage_error: return "usage_error";
    }
    return "unknown_error";
}

int exit_code(ErrorCode code) noexcept {
    return 10 + static_cast<int>(code);
}

} // namespace p2lr
