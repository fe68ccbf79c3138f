#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace selfselect {

enum class ErrorCategory {
    InvalidInput,
    InfeasibleRegion,
    LowMass,
    SingularDesign,
    Unsupported,
    InsufficientConditioning,
    BudgetExceeded,
    NoCandidate,
    SamplerFailure,
    Io,
    Validation,
};

/// Machine-readable name, used by the CLI and in reports.
std::string_view category_name(ErrorCategory c);

/// Process exit code for a category (0 is reserved for success).
int exit_code(ErrorCategory c);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& what) {
    throw Error(c, what);
}

}  // namespace selfselect
