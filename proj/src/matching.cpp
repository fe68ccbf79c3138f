#include "selfselect/matching.hpp"

#include "selfselect/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace selfselect {

ColumnMatching match_columns(const MatrixXd& estimate, const MatrixXd& truth) {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
        fail(ErrorCategory::InvalidInput, "matching needs estimate and truth of the same shape");
    const auto k = static_cast<int>(truth.cols());
    if (k > 8) fail(ErrorCategory::InvalidInput, "exhaustive matching supports at most 8 columns");

    MatrixXd cost(k, k);
    for (int j = 0; j < k; ++j)
        for (int e = 0; e < k; ++e) cost(j, e) = (estimate.col(e) - truth.col(j)).norm();

    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    ColumnMatching best;
    best.total = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int j = 0; j < k; ++j) total += cost(j, perm[j]);
        if (total < best.total) {
            best.total = total;
            best.permutation = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    best.errors.resize(k);
    for (int j = 0; j < k; ++j) best.errors[j] = cost(j, best.permutation[j]);
    best.max_error = k > 0 ? best.errors.maxCoeff() : 0.0;
    if (k == 0) best.total = 0.0;
    return best;
}

}  // namespace selfselect
