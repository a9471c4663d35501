#include "fofr/error.hpp"

namespace fofr {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateTimestamp: return "DuplicateTimestamp";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::MissingChannel: return "MissingChannel";
    case ErrorCode::InsufficientCoverage: return "InsufficientCoverage";
    case ErrorCode::BadGridSize: return "BadGridSize";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::BadScenario: return "BadScenario";
    case ErrorCode::DegenerateWindow: return "DegenerateWindow";
    case ErrorCode::NonFiniteFit: return "NonFiniteFit";
    case ErrorCode::NoPairs: return "NoPairs";
    case ErrorCode::AllCandidatesDegenerate: return "AllCandidatesDegenerate";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::EmptySpectrum: return "EmptySpectrum";
    case ErrorCode::TooSparse: return "TooSparse";
    case ErrorCode::TooFewSubjects: return "TooFewSubjects";
    case ErrorCode::BlockMismatch: return "BlockMismatch";
    case ErrorCode::ChannelCountMismatch: return "ChannelCountMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptArtifact: return "CorruptArtifact";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, std::string detail)
    : Error(code, std::move(detail), std::string{}) {}

Error::Error(ErrorCode code, std::string detail, std::string stage)
    : std::runtime_error(compose(code, detail, stage)),
      code_(code),
      detail_(std::move(detail)),
      stage_(std::move(stage)) {}

std::string Error::compose(ErrorCode code, const std::string& detail, const std::string& stage) {
    std::string out;
    if (!stage.empty()) {
        out += stage;
        out += ": ";
    }
    out += to_string(code);
    if (!detail.empty()) {
        out += ": ";
        out += detail;
    }
    return out;
}

Error Error::staged(std::string_view label) const {
    std::string stage(label);
    if (!stage_.empty()) {
        stage += '/';
        stage += stage_;
    }
    return Error(code_, detail_, std::move(stage));
}

bool Error::is_input_error() const noexcept {
    switch (code_) {
    case ErrorCode::Io:
    case ErrorCode::MalformedRow:
    case ErrorCode::DuplicateTimestamp:
    case ErrorCode::DomainViolation:
    case ErrorCode::MissingChannel:
    case ErrorCode::InsufficientCoverage:
    case ErrorCode::BadGridSize:
    case ErrorCode::BadConfig:
    case ErrorCode::BadScenario:
        return true;
    default:
        return false;
    }
}

}  // namespace fofr
