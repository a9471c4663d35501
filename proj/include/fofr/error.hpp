#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fofr {

enum class ErrorCode {
    // ingestion and configuration
    Io,
    MalformedRow,
    DuplicateTimestamp,
    DomainViolation,
    MissingChannel,
    InsufficientCoverage,
    BadGridSize,
    BadConfig,
    BadScenario,
    // smoothing
    DegenerateWindow,
    NonFiniteFit,
    NoPairs,
    AllCandidatesDegenerate,
    // fpca
    EigenFailure,
    EmptySpectrum,
    TooSparse,
    TooFewSubjects,
    BlockMismatch,
    ChannelCountMismatch,
    LengthMismatch,
    // regression
    ShapeMismatch,
    DivergenceDetected,
    // pipeline
    ChannelMismatch,
    NoOverlap,
    VersionMismatch,
    CorruptArtifact,
    IndexOutOfRange,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. `stage` accumulates a slash-separated location
/// such as `fpca/response/channel=2`, prepended as errors propagate upward.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string detail);

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }
    const std::string& stage() const noexcept { return stage_; }

    /// Returns a copy with `label` prepended to the stage path.
    Error staged(std::string_view label) const;

    /// True for errors caused by the caller's inputs (data, config, scenario).
    bool is_input_error() const noexcept;

private:
    Error(ErrorCode code, std::string detail, std::string stage);
    static std::string compose(ErrorCode code, const std::string& detail, const std::string& stage);

    ErrorCode code_;
    std::string detail_;
    std::string stage_;
};

/// Runs `fn`, relabelling any fofr::Error with `label`.
template <typename Fn>
decltype(auto) with_stage(std::string_view label, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw e.staged(label);
    }
}

}  // namespace fofr
