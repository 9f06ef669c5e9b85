#include "retenta/error.hpp"

#include <utility>

namespace retenta {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::NonNumericField: return "NonNumericField";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::DuplicatePair: return "DuplicatePair";
        case ErrorCode::RatingOutOfRange: return "RatingOutOfRange";
        case ErrorCode::UnknownColumn: return "UnknownColumn";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::DegenerateLabels: return "DegenerateLabels";
        case ErrorCode::ThresholdOrder: return "ThresholdOrder";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::AssignmentMismatch: return "AssignmentMismatch";
        case ErrorCode::TooManyPoints: return "TooManyPoints";
        case ErrorCode::NoSupport: return "NoSupport";
        case ErrorCode::NotRisky: return "NotRisky";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
    return code != ErrorCode::NonFiniteLoss && code != ErrorCode::Io;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code),
      detail_(message) {}

Error::Error(ErrorCode code, std::string detail, const std::string& what)
    : std::runtime_error(what), code_(code), detail_(std::move(detail)) {}

Error Error::prefixed(const std::string& prefix) const {
    return Error(code_, prefix + ": " + detail_, prefix + ": " + what());
}

}  // namespace retenta
