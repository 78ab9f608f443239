#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace causeway {

enum class ErrorCode {
    CycleDetected,
    UnknownEndpoint,
    DuplicateEdge,
    SelfLoop,
    DuplicateVariable,
    InvalidVariable,
    UnknownVariable,
    UnknownLevel,
    ParseError,
    HeaderMismatch,
    MissingCell,
    OverlappingRoles,
    SchemaMismatch,
    DegenerateTable,
    InvalidArgument,
    PerfectSeparation,
    DegenerateOutcome,
    NonFinite,
    InvalidAdjustment,
    TooManyFailures,
    IncompleteAssignment,
    ZeroDenominator,
    InvalidCpt,
    Io,
    WorkspaceLocked,
    PortInUse,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library. `line` / `row` / `column` are 1-based
/// locations when the failure can be pinned to input text, 0 otherwise.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::size_t line = 0, std::size_t row = 0,
          std::size_t column = 0);

    ErrorCode code() const noexcept { return code_; }
    std::size_t line() const noexcept { return line_; }
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }
    /// Message without the code/location decoration carried by what().
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
    std::size_t line_;
    std::size_t row_;
    std::size_t column_;
};

}  // namespace causeway
