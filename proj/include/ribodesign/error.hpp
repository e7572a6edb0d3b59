#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ribodesign {

enum class ErrorCode {
    IllegalSymbol,
    UnbalancedStructure,
    LengthMismatch,
    EmptyInput,
    TooLong,
    ExternalFolderFailure,
    MisalignedTemplates,
    ExtensionSiteMismatch,
    BadLengthRange,
    IllegalToken,
    CorpusTooSmall,
    IllegalPairAction,
    EpisodeDone,
    EpisodeNotDone,
    ShapeMismatch,
    AnchorNotFound,
    InvalidConfig,
    Io,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library is reported through this type;
/// `code()` identifies the failure class and `what()` carries the detail.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ribodesign
