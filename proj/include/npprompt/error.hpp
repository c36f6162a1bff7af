#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace npprompt {

enum class ErrorCode {
    // tensor / file formats
    Io,
    BadMagic,
    VersionMismatch,
    Truncated,
    LengthMismatch,
    MalformedHeader,
    NonFinite,
    // vocabulary / manifests / datasets
    DuplicateId,
    IdGap,
    MalformedLine,
    EmptyVocabulary,
    RowCountMismatch,
    VocabSizeMismatch,
    MissingExample,
    InvalidRecord,
    ChecksumMismatch,
    // verbalizer
    UnresolvableLabel,
    DegenerateVector,
    InvalidK,
    DegenerateWeights,
    InsufficientSample,
    DimensionMismatch,
    // aggregator
    CorruptVerbalizer,
    EmptyCandidates,
    // prompting
    MissingMask,
    MultipleMask,
    MixedSlots,
    UnknownPlaceholder,
    RecordShapeMismatch,
    // eval
    EmptyInput,
    NonBinaryLabels,
    MissingLabel,
    // backend
    Transport,
    HttpStatus,
    BadResponse,
    // cli
    Config,
    InvalidArgument,
};

/// Exit-code families used by the command line: 1 config, 2 data, 3 backend.
enum class ErrorCategory { Config = 1, Data = 2, Backend = 3 };

std::string_view to_string(ErrorCode code);
ErrorCategory category(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);
    Error(ErrorCode code, const std::string& message, std::string example_id);

    ErrorCode code() const noexcept { return code_; }
    const std::string& example_id() const noexcept { return example_id_; }

private:
    ErrorCode code_;
    std::string example_id_;
};

} // namespace npprompt
