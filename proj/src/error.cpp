#include "npprompt/error.hpp"

namespace npprompt {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::Io: return "io";
    case ErrorCode::BadMagic: return "bad-magic";
    case ErrorCode::VersionMismatch: return "version-mismatch";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::LengthMismatch: return "length-mismatch";
    case ErrorCode::MalformedHeader: return "malformed-header";
    case ErrorCode::NonFinite: return "non-finite";
    case ErrorCode::DuplicateId: return "duplicate-id";
    case ErrorCode::IdGap: return "id-gap";
    case ErrorCode::MalformedLine: return "malformed-line";
    case ErrorCode::EmptyVocabulary: return "empty-vocabulary";
    case ErrorCode::RowCountMismatch: return "row-count-mismatch";
    case ErrorCode::VocabSizeMismatch: return "vocab-size-mismatch";
    case ErrorCode::MissingExample: return "missing-example";
    case ErrorCode::InvalidRecord: return "invalid-record";
    case ErrorCode::ChecksumMismatch: return "checksum-mismatch";
    case ErrorCode::UnresolvableLabel: return "unresolvable-label";
    case ErrorCode::DegenerateVector: return "degenerate-vector";
    case ErrorCode::InvalidK: return "invalid-k";
    case ErrorCode::DegenerateWeights: return "degenerate-weights";
    case ErrorCode::InsufficientSample: return "insufficient-sample";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::CorruptVerbalizer: return "corrupt-verbalizer";
    case ErrorCode::EmptyCandidates: return "empty-candidates";
    case ErrorCode::MissingMask: return "missing-mask";
    case ErrorCode::MultipleMask: return "multiple-mask";
    case ErrorCode::MixedSlots: return "mixed-slots";
    case ErrorCode::UnknownPlaceholder: return "unknown-placeholder";
    case ErrorCode::RecordShapeMismatch: return "record-shape-mismatch";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::NonBinaryLabels: return "non-binary-labels";
    case ErrorCode::MissingLabel: return "missing-label";
    case ErrorCode::Transport: return "transport";
    case ErrorCode::HttpStatus: return "http-status";
    case ErrorCode::BadResponse: return "bad-response";
    case ErrorCode::Config: return "config";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    }
    return "unknown";
}

ErrorCategory category(ErrorCode code) {
    switch (code) {
    case ErrorCode::Config:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidK:
    case ErrorCode::MissingMask:
    case ErrorCode::MultipleMask:
    case ErrorCode::MixedSlots:
    case ErrorCode::UnknownPlaceholder:
    case ErrorCode::UnresolvableLabel:
        return ErrorCategory::Config;
    case ErrorCode::Transport:
    case ErrorCode::HttpStatus:
    case ErrorCode::BadResponse:
        return ErrorCategory::Backend;
    default:
        return ErrorCategory::Data;
    }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

Error::Error(ErrorCode code, const std::string& message, std::string example_id)
    : std::runtime_error(std::string(to_string(code)) + ": " + message + " (example " + example_id +
                         ")"),
      code_(code), example_id_(std::move(example_id)) {}

} // namespace npprompt
