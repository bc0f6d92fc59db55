#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace phmm {

enum class ErrorCode {
    InvalidArgument,
    NonIrreducible,
    InvalidRate,
    NoStationarySolution,
    FloorViolation,
    EmptyInput,
    InvalidLength,
    SizeCap,
    TooLarge,
    NotConverged,
    BudgetExceeded,
    Parse,
    Io,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` lets callers
// (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace phmm
