#include "causeway/error.hpp"

namespace causeway {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::CycleDetected: return "CycleDetected";
        case ErrorCode::UnknownEndpoint: return "UnknownEndpoint";
        case ErrorCode::DuplicateEdge: return "DuplicateEdge";
        case ErrorCode::SelfLoop: return "SelfLoop";
        case ErrorCode::DuplicateVariable: return "DuplicateVariable";
        case ErrorCode::InvalidVariable: return "InvalidVariable";
        case ErrorCode::UnknownVariable: return "UnknownVariable";
        case ErrorCode::UnknownLevel: return "UnknownLevel";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::HeaderMismatch: return "HeaderMismatch";
        case ErrorCode::MissingCell: return "MissingCell";
        case ErrorCode::OverlappingRoles: return "OverlappingRoles";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::DegenerateTable: return "DegenerateTable";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::PerfectSeparation: return "PerfectSeparation";
        case ErrorCode::DegenerateOutcome: return "DegenerateOutcome";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::InvalidAdjustment: return "InvalidAdjustment";
        case ErrorCode::TooManyFailures: return "TooManyFailures";
        case ErrorCode::IncompleteAssignment: return "IncompleteAssignment";
        case ErrorCode::ZeroDenominator: return "ZeroDenominator";
        case ErrorCode::InvalidCpt: return "InvalidCpt";
        case ErrorCode::Io: return "Io";
        case ErrorCode::WorkspaceLocked: return "WorkspaceLocked";
        case ErrorCode::PortInUse: return "PortInUse";
    }
    return "Unknown";
}

namespace {
std::string decorate(ErrorCode code, const std::string& message, std::size_t line, std::size_t row,
                     std::size_t column) {
    std::string out(error_code_name(code));
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    if (row > 0) {
        out += " (row " + std::to_string(row);
        if (column > 0) out += ", column " + std::to_string(column);
        out += ")";
    }
    return out + ": " + message;
}
}  // namespace

Error::Error(ErrorCode code, std::string message, std::size_t line, std::size_t row,
             std::size_t column)
    : std::runtime_error(decorate(code, message, line, row, column)),
      code_(code),
      message_(std::move(message)),
      line_(line),
      row_(row),
      column_(column) {}

}  // namespace causeway
