#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace p2lr {

/// Failure classes surfaced by the library. The CLI maps each one to a
/// distinct `error_code:message` line and a distinct process exit code.
enum class ErrorCode {
    config_error,           // invalid or infeasible configuration values
    input_error,            // malformed numeric input (non-finite, shape mismatch, k > N)
    singular_normalization, // zero-norm vector in a cosine classifier
    infinite_divergence,    // KL with q_j > 0 and p_j = 0
    contract_error,         // internal precondition between cooperating calls violated
    oracle_size,            // brute-force oracle asked to enumerate too many vectors
    split_error,            // retrieval split impossible (identity with one sample)
    io_error,
    format_error,           // bad magic, truncated file, bad CSV
    schema_error,           // report schema version mismatch
    enum_error,             // unknown enum string (criterion, format, ...)
    usage_error,            // CLI usage problems
};

std::string_view to_string(ErrorCode code) noexcept;
int exit_code(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace p2lr
