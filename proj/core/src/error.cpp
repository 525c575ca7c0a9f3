#include "vfp/error.hpp"

namespace vfp {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedDocument: return "MalformedDocument";
        case ErrorCode::InvalidStochasticRow: return "InvalidStochasticRow";
        case ErrorCode::InvalidGamma: return "InvalidGamma";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::UnknownFixture: return "UnknownFixture";
        case ErrorCode::EnumerationTooLarge: return "EnumerationTooLarge";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::MuOutOfRange: return "MuOutOfRange";
        case ErrorCode::OrderViolation: return "OrderViolation";
        case ErrorCode::NotAgreeing: return "NotAgreeing";
        case ErrorCode::DimensionUnsupported: return "DimensionUnsupported";
        case ErrorCode::NonFiniteLogits: return "NonFiniteLogits";
        case ErrorCode::MissingPolicy: return "MissingPolicy";
        case ErrorCode::UnknownSuite: return "UnknownSuite";
    }
    return "Unknown";
}

}  // namespace vfp
