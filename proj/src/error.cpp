#include "dpos/error.hpp"

namespace dpos {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidInput: return "InvalidInput";
        case ErrorCode::OutsideCone: return "OutsideCone";
        case ErrorCode::InvalidCone: return "InvalidCone";
        case ErrorCode::EvaluationError: return "EvaluationError";
        case ErrorCode::LeftDomain: return "LeftDomain";
        case ErrorCode::Diverged: return "Diverged";
        case ErrorCode::NonContractive: return "NonContractive";
        case ErrorCode::NeedsDenserGrid: return "NeedsDenserGrid";
        case ErrorCode::NoPeriod: return "NoPeriod";
        case ErrorCode::NotHyperbolic: return "NotHyperbolic";
        case ErrorCode::WrongConeKind: return "WrongConeKind";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::ConfigParse: return "ConfigParse";
        case ErrorCode::MissingTransport: return "MissingTransport";
        case ErrorCode::Unsupported: return "Unsupported";
    }
    return "Unknown";
}

}  // namespace dpos
