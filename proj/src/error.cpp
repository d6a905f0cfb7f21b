#include "refer/error.hpp"

namespace refer {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingSlot: return "MissingSlot";
        case ErrorCode::EmptyPeerSet: return "EmptyPeerSet";
        case ErrorCode::UnparseableCompletion: return "UnparseableCompletion";
        case ErrorCode::InvalidSchema: return "InvalidSchema";
        case ErrorCode::BackendFailure: return "BackendFailure";
        case ErrorCode::BackendExhausted: return "BackendExhausted";
        case ErrorCode::UnsupportedImage: return "UnsupportedImage";
        case ErrorCode::UnscriptedPrompt: return "UnscriptedPrompt";
        case ErrorCode::InvalidRequest: return "InvalidRequest";
        case ErrorCode::NoRatingFound: return "NoRatingFound";
        case ErrorCode::OutOfScale: return "OutOfScale";
        case ErrorCode::NoAnswerFound: return "NoAnswerFound";
        case ErrorCode::LabelOutsideSpace: return "LabelOutsideSpace";
        case ErrorCode::InsufficientPeers: return "InsufficientPeers";
        case ErrorCode::ACFailure: return "ACFailure";
        case ErrorCode::ParseFailure: return "ParseFailure";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::DegenerateVariance: return "DegenerateVariance";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::MissingScale: return "MissingScale";
        case ErrorCode::AllZeroCosts: return "AllZeroCosts";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::UnknownFormatVersion: return "UnknownFormatVersion";
        case ErrorCode::IOFailure: return "IOFailure";
        case ErrorCode::EmptyRun: return "EmptyRun";
        case ErrorCode::IdMismatch: return "IdMismatch";
        case ErrorCode::MixedTaskKinds: return "MixedTaskKinds";
    }
    return "Unknown";
}

}  // namespace refer
