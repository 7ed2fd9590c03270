#pragma once

#include <stdexcept>
#include <string>

namespace adafilter {

enum class ErrorCode {
    kOk = 0,
    kOutOfRangeEntry,
    kEmptyColumn,
    kDimensionMismatch,
    kIndexOutOfRange,
    kReplicabilityLevelOutOfRange,
    kInvalidDegreesOfFreedom,
    kInvalidArgument,
    kNoTestableHypotheses,
    kOracleSizeExceeded,
    kNoConvergence,
    kParseError,
    kDuplicateIdentifier,
    kInvalidScenario,
    kIoError,
};

const char* error_code_name(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// C layer can translate it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace adafilter
