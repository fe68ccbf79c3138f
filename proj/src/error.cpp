#include "selfselect/error.hpp"

namespace selfselect {

std::string_view category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::InvalidInput: return "invalid-input";
        case ErrorCategory::InfeasibleRegion: return "infeasible-region";
        case ErrorCategory::LowMass: return "low-mass";
        case ErrorCategory::SingularDesign: return "singular-design";
        case ErrorCategory::Unsupported: return "unsupported";
        case ErrorCategory::InsufficientConditioning: return "insufficient-conditioning";
        case ErrorCategory::BudgetExceeded: return "budget-exceeded";
        case ErrorCategory::NoCandidate: return "no-candidate";
        case ErrorCategory::SamplerFailure: return "sampler-failure";
        case ErrorCategory::Io: return "io";
        case ErrorCategory::Validation: return "validation";
    }
    return "unknown";
}

int exit_code(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Io: return 2;
        case ErrorCategory::Validation: return 3;
        case ErrorCategory::InvalidInput: return 4;
        case ErrorCategory::InfeasibleRegion: return 10;
        case ErrorCategory::LowMass: return 11;
        case ErrorCategory::SamplerFailure: return 12;
        case ErrorCategory::SingularDesign: return 13;
        case ErrorCategory::Unsupported: return 14;
        case ErrorCategory::InsufficientConditioning: return 15;
        case ErrorCategory::BudgetExceeded: return 16;
        case ErrorCategory::NoCandidate: return 17;
    }
    return 1;
}

}  // namespace selfselect
