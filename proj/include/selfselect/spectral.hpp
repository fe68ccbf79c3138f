#pragma once

#include "selfselect/types.hpp"

#include <cstdint>
#include <vector>

namespace selfselect {

/// Eigen-structure of the weighted second moment M = E[max(0,y)^2 x x^T].
struct SpectralResult {
    /// All eigenvalues, descending.
    VectorXd eigenvalues;
    /// Matching eigenvectors as columns.
    MatrixXd eigenvectors;
    /// Top-k orthonormal basis (d x k).
    MatrixXd basis;
    /// Estimate of E[max(0,y)^2]; the eigenvalue of directions orthogonal to span(W).
    double baseline = 0.0;
    /// lambda_k - lambda_{k+1}; lambda_k - 0 when k = d.
    double gap = 0.0;
    /// Gap is zero up to round-off, so the basis is not determined.
    bool degenerate = false;
};

/// (1/n) sum max(0, y)^2 x x^T.
MatrixXd weighted_second_moment(const UnknownIndexDataset& data);

struct BaselineEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Mean of max(0, y)^2 with its standard error.
BaselineEstimate positive_square_mean(const UnknownIndexDataset& data);

/// Exact symmetric eigendecomposition; keeps the top k directions. Throws
/// InvalidInput when d < k.
SpectralResult top_k_subspace(const MatrixXd& m, int k, double baseline);

/// Convenience: moment, baseline and top-k subspace of a dataset.
SpectralResult spectral_subspace(const UnknownIndexDataset& data, int k);

/// Number of directions at the largest relative eigen-gap
/// (lambda_i - lambda_{i+1}) / lambda_1. Diagnostic only.
int gap_heuristic_rank(const VectorXd& eigenvalues_desc);

/// max_j ||w_j - P_U w_j|| / ||w_j|| over nonzero columns.
double subspace_angle(const MatrixXd& basis, const MatrixXd& w);

/// v^T M v for a unit v.
double rayleigh_quotient(const MatrixXd& m, const Eigen::Ref<const VectorXd>& v);

struct ConcentrationRow {
    Eigen::Index n = 0;
    int seed = 0;
    double deviation = 0.0;
};

struct ConcentrationTable {
    std::vector<ConcentrationRow> rows;
    Eigen::Index reference_size = 0;
    /// Least-squares slope of log(deviation) on log(n) over all rows.
    double slope = 0.0;
    /// Median deviation per entry of n_grid.
    std::vector<double> median_deviation;
};

/// ||M_n - M_ref||_2 for fresh datasets of each size, against a reference
/// moment built from 10 * max(n_grid) records.
ConcentrationTable concentration_probe(const WeightMatrix& w, const std::vector<Eigen::Index>& n_grid, int seeds,
                                       std::uint64_t seed);

}  // namespace selfselect
