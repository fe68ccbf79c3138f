#pragma once

#include "selfselect/types.hpp"

#include <vector>

namespace selfselect {

struct ColumnMatching {
    /// permutation[j] = estimate column paired with truth column j.
    std::vector<int> permutation;
    /// ||estimate[:, permutation[j]] - truth[:, j]|| per truth column.
    VectorXd errors;
    double total = 0.0;
    double max_error = 0.0;
};

/// Minimum total l2 assignment of estimate columns to truth columns, by
/// enumerating all permutations. Throws InvalidInput on shape mismatch or
/// k > 8.
ColumnMatching match_columns(const MatrixXd& estimate, const MatrixXd& truth);

}  // namespace selfselect
