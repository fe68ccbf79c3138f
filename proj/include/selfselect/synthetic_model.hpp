#pragma once

#include "selfselect/selection_rules.hpp"
#include "selfselect/types.hpp"

#include <cstdint>
#include <optional>
#include <utility>

namespace selfselect {

/// Covariate source for known-index generation. A fixed design fixes n to
/// its row count.
struct CovariateSpec {
    CovariateMode mode = CovariateMode::StandardGaussian;
    RowMatrix design;

    static CovariateSpec gaussian() { return {}; }
    static CovariateSpec fixed(RowMatrix x) { return {CovariateMode::FixedDesign, std::move(x)}; }
};

/// Covariates and all k latent outputs of one generated record.
struct LatentRecord {
    VectorXd x;
    VectorXd latents;
};

/// Rebuilds record i exactly as the generators drew it. Each record owns a
/// substream keyed by (seed, i), so records can be produced in any order.
LatentRecord regenerate_latents(const WeightMatrix& w, double sigma, const CovariateSpec& covariates,
                                std::uint64_t seed, Eigen::Index i);

KnownIndexDataset sample_known_index(const WeightMatrix& w, double sigma, const SelectionRule& rule,
                                     const CovariateSpec& covariates, Eigen::Index n,
                                     std::uint64_t seed);

/// sigma = 1, standard Gaussian covariates, max rule, winner discarded.
UnknownIndexDataset sample_unknown_index(const WeightMatrix& w, Eigen::Index n, std::uint64_t seed);

/// Per-index least squares on the records that index won. Biased under
/// self-selection; kept as the baseline.
WeightMatrix naive_ols(const KnownIndexDataset& data);

/// Plain least squares of y on x.
VectorXd least_squares(const RowMatrix& x, const VectorXd& y);

struct SeparabilityCheck {
    double margin = 0.0;
    double bound = 0.0;
    bool pass = false;
    /// 0-based (i, j) with |w_i^T w_j| / ||w_j|| + margin > ||w_j||.
    std::optional<std::pair<int, int>> violating_pair;
    /// Column whose norm exceeds the bound.
    std::optional<int> norm_violation;
};

SeparabilityCheck check_separability(const WeightMatrix& w, double margin, double bound);

/// Random d x k weights with ||w_j|| = norm, each column uniform on the sphere.
WeightMatrix random_weights(Eigen::Index d, Eigen::Index k, double norm, double bound,
                            std::uint64_t seed);

/// n x d design with rows x ~ N(shift * 1, I); shift != 0 makes the
/// naive per-index fits biased.
RowMatrix shifted_gaussian_design(Eigen::Index n, Eigen::Index d, double shift, std::uint64_t seed);

/// n x d design whose first column is the constant 1 and the rest N(0, 1).
RowMatrix intercept_design(Eigen::Index n, Eigen::Index d, std::uint64_t seed);

/// Smallest eigenvalue of (1/n) X^T X.
double design_thickness(const RowMatrix& x);

}  // namespace selfselect
