#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace refer {

enum class ErrorCode {
    // prompt-engine
    MissingSlot,
    EmptyPeerSet,
    UnparseableCompletion,
    InvalidSchema,
    // agent-gateway
    BackendFailure,
    BackendExhausted,
    UnsupportedImage,
    UnscriptedPrompt,
    InvalidRequest,
    // review-parser
    NoRatingFound,
    OutOfScale,
    NoAnswerFound,
    LabelOutsideSpace,
    // orchestrator
    InsufficientPeers,
    ACFailure,
    ParseFailure,
    InvalidConfig,
    // metrics
    DegenerateInput,
    DegenerateVariance,
    LengthMismatch,
    MissingScale,
    AllZeroCosts,
    // dataset-io
    SchemaViolation,
    DuplicateId,
    UnknownFormatVersion,
    IOFailure,
    EmptyRun,
    IdMismatch,
    MixedTaskKinds,
};

std::string_view to_string(ErrorCode code);

/// Every library failure is a refer::Error carrying a machine-checkable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace refer
