#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dpos {

enum class ErrorCode {
    InvalidInput,
    OutsideCone,
    InvalidCone,
    EvaluationError,
    LeftDomain,
    Diverged,
    NonContractive,
    NeedsDenserGrid,
    NoPeriod,
    NotHyperbolic,
    WrongConeKind,
    InvalidSpec,
    ConfigParse,
    MissingTransport,
    Unsupported,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (grid sweeps, the CLI envelope) can dispatch without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace dpos
