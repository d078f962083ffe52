#pragma once

#include <stdexcept>
#include <string>

namespace equisparse {

/// Broad failure class. The CLI maps these onto process exit codes.
enum class ErrorCategory { Input, Shape, Numeric };

enum class ErrorCode {
    EmptyInput,
    MalformedLine,
    DuplicateNodeId,
    CycleDetected,
    DuplicateLeafColumn,
    MissingLeafColumn,
    LeafColumnOutOfRange,
    LeafColumnOnInternalNode,
    LeafWithoutColumn,
    DanglingParent,
    TooFewInternalNodes,
    CannotDeleteRoot,
    CannotDeleteLeaf,
    UnknownNode,
    DimensionMismatch,
    NegativeLambda,
    NonBinaryResponse,
    NonFiniteValue,
    PowerIterationDiverged,
    InvalidArgument,
    FoldTooSmall,
    UnknownVariant,
    IndivisibleSizes,
    ZeroSignal,
    DeltaOutOfRange,
    Separation,
    OutOfRange,
    FileUnreadable,
};

inline ErrorCategory category_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::DimensionMismatch:
        case ErrorCode::FoldTooSmall:
        case ErrorCode::IndivisibleSizes:
            return ErrorCategory::Shape;
        case ErrorCode::PowerIterationDiverged:
        case ErrorCode::ZeroSignal:
        case ErrorCode::Separation:
            return ErrorCategory::Numeric;
        default:
            return ErrorCategory::Input;
    }
}

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::MalformedLine: return "MalformedLine";
        case ErrorCode::DuplicateNodeId: return "DuplicateNodeId";
        case ErrorCode::CycleDetected: return "CycleDetected";
        case ErrorCode::DuplicateLeafColumn: return "DuplicateLeafColumn";
        case ErrorCode::MissingLeafColumn: return "MissingLeafColumn";
        case ErrorCode::LeafColumnOutOfRange: return "LeafColumnOutOfRange";
        case ErrorCode::LeafColumnOnInternalNode: return "LeafColumnOnInternalNode";
        case ErrorCode::LeafWithoutColumn: return "LeafWithoutColumn";
        case ErrorCode::DanglingParent: return "DanglingParent";
        case ErrorCode::TooFewInternalNodes: return "TooFewInternalNodes";
        case ErrorCode::CannotDeleteRoot: return "CannotDeleteRoot";
        case ErrorCode::CannotDeleteLeaf: return "CannotDeleteLeaf";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NegativeLambda: return "NegativeLambda";
        case ErrorCode::NonBinaryResponse: return "NonBinaryResponse";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::PowerIterationDiverged: return "PowerIterationDiverged";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::FoldTooSmall: return "FoldTooSmall";
        case ErrorCode::UnknownVariant: return "UnknownVariant";
        case ErrorCode::IndivisibleSizes: return "IndivisibleSizes";
        case ErrorCode::ZeroSignal: return "ZeroSignal";
        case ErrorCode::DeltaOutOfRange: return "DeltaOutOfRange";
        case ErrorCode::Separation: return "Separation";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::FileUnreadable: return "FileUnreadable";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace equisparse
