#include "oodkit/error.hpp"

namespace oodkit {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::MetaSectionMismatch: return "MetaSectionMismatch";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::HeaderMismatch: return "HeaderMismatch";
    case ErrorKind::RaggedRow: return "RaggedRow";
    case ErrorKind::UnparsableNumber: return "UnparsableNumber";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::EmptyFeatureSet: return "EmptyFeatureSet";
    case ErrorKind::MissingLabels: return "MissingLabels";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::DimZero: return "DimZero";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ZeroL1Norm: return "ZeroL1Norm";
    case ErrorKind::SingleClassNonNearest: return "SingleClassNonNearest";
    case ErrorKind::MissingLogits: return "MissingLogits";
    case ErrorKind::MissingModel: return "MissingModel";
    case ErrorKind::MissingTrainSet: return "MissingTrainSet";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorKind::EmptyScoreSet: return "EmptyScoreSet";
    case ErrorKind::BadTarget: return "BadTarget";
    case ErrorKind::EmptyValidationSet: return "EmptyValidationSet";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::SpecInvalid: return "SpecInvalid";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::IoFailure:
        return ErrorCategory::Io;
    case ErrorKind::BadMagic:
    case ErrorKind::TruncatedFile:
    case ErrorKind::MetaSectionMismatch:
    case ErrorKind::NonFiniteValue:
    case ErrorKind::LabelOutOfRange:
    case ErrorKind::HeaderMismatch:
    case ErrorKind::RaggedRow:
    case ErrorKind::UnparsableNumber:
    case ErrorKind::SchemaMismatch:
        return ErrorCategory::Format;
    default:
        return ErrorCategory::Contract;
    }
}

int exit_code_for(ErrorCategory category) noexcept {
    switch (category) {
    case ErrorCategory::Io: return 2;
    case ErrorCategory::Format: return 3;
    case ErrorCategory::Contract: return 4;
    }
    return 4;
}

} // namespace oodkit
