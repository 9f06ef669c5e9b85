#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace retenta {

enum class ErrorCode {
    // input / validation
    MissingColumn,
    DuplicateId,
    NonNumericField,
    OutOfRange,
    DuplicatePair,
    RatingOutOfRange,
    UnknownColumn,
    EmptyMatrix,
    InvalidConfig,
    DimensionMismatch,
    DegenerateLabels,
    ThresholdOrder,
    KTooLarge,
    EmptyInput,
    AssignmentMismatch,
    TooManyPoints,
    NoSupport,
    NotRisky,
    ParseError,
    // runtime
    NonFiniteLoss,
    Io,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// True for errors caused by bad input or configuration (CLI exit code 1);
// false for runtime failures (exit code 2).
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    // Message without the leading code name.
    const std::string& detail() const noexcept { return detail_; }

    // Same code, with "prefix: " in front of the whole message.
    Error prefixed(const std::string& prefix) const;

private:
    Error(ErrorCode code, std::string detail, const std::string& what);

    ErrorCode code_;
    std::string detail_;
};

}  // namespace retenta
