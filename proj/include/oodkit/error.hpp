#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace oodkit {

/// Every failure the library reports carries one of these kinds.
enum class ErrorKind {
    // I/O
    IoFailure,
    // format
    BadMagic,
    TruncatedFile,
    MetaSectionMismatch,
    NonFiniteValue,
    LabelOutOfRange,
    HeaderMismatch,
    RaggedRow,
    UnparsableNumber,
    SchemaMismatch,
    // contract
    EmptyFeatureSet,
    MissingLabels,
    EmptyClass,
    DimZero,
    DimensionMismatch,
    ZeroL1Norm,
    SingleClassNonNearest,
    MissingLogits,
    MissingModel,
    MissingTrainSet,
    KTooLarge,
    EmptyTrainSet,
    EmptyScoreSet,
    BadTarget,
    EmptyValidationSet,
    BadConfig,
    SpecInvalid,
};

/// Coarse grouping used for CLI exit codes (2 = IO, 3 = format, 4 = contract).
enum class ErrorCategory { Io, Format, Contract };

std::string_view to_string(ErrorKind kind) noexcept;
ErrorCategory category_of(ErrorKind kind) noexcept;
int exit_code_for(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> row = std::nullopt)
        : std::runtime_error(message), kind_(kind), row_(row) {}

    ErrorKind kind() const noexcept { return kind_; }
    ErrorCategory category() const noexcept { return category_of(kind_); }
    /// Row (sample) index the error refers to, when it is a per-sample failure.
    std::optional<std::size_t> row() const noexcept { return row_; }

private:
    ErrorKind kind_;
    std::optional<std::size_t> row_;
};

} // namespace oodkit
