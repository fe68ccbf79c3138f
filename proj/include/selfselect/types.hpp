#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace selfselect {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Row-major sample matrix: one observation per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// The d x k parameter matrix, one model per column, with a column norm bound.
struct WeightMatrix {
    MatrixXd columns;
    double bound = 1.0;

    WeightMatrix() = default;
    WeightMatrix(MatrixXd w, double b) : columns(std::move(w)), bound(b) {}

    Eigen::Index dim() const { return columns.rows(); }
    Eigen::Index models() const { return columns.cols(); }
    auto col(Eigen::Index j) const { return columns.col(j); }

    /// max_j ||w_j|| <= bound (with a relative slack for round-off).
    bool within_bound() const;

    static WeightMatrix zeros(Eigen::Index d, Eigen::Index k, double b) {
        return WeightMatrix(MatrixXd::Zero(d, k), b);
    }
};

enum class CovariateMode { StandardGaussian, FixedDesign };

/// Known-index observations. winner holds 0-based indices; 1-based on disk.
struct KnownIndexDataset {
    RowMatrix x;
    VectorXd y;
    std::vector<int> winner;
    int models = 1;
    double sigma = 1.0;
    CovariateMode covariates = CovariateMode::StandardGaussian;
    /// Smallest eigenvalue of (1/n) sum x x^T, reported for FixedDesign.
    std::optional<double> thickness;

    Eigen::Index size() const { return y.size(); }
    Eigen::Index dim() const { return x.cols(); }
};

struct UnknownIndexDataset {
    RowMatrix x;
    VectorXd y;

    Eigen::Index size() const { return y.size(); }
    Eigen::Index dim() const { return x.cols(); }

    /// Rows [begin, begin + count) as a new dataset.
    UnknownIndexDataset slice(Eigen::Index begin, Eigen::Index count) const;
};

}  // namespace selfselect
