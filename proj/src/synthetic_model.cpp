#include "selfselect/synthetic_model.hpp"

#include "selfselect/error.hpp"
#include "selfselect/random.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace selfselect {

namespace {

constexpr std::string_view kGenerateTag = "generate";

void validate(const WeightMatrix& w, double sigma) {
    if (w.dim() < 1 || w.models() < 1) fail(ErrorCategory::InvalidInput, "weights must be d x k with d, k >= 1");
    if (!(sigma > 0.0)) fail(ErrorCategory::InvalidInput, "noise scale must be positive");
    if (!w.columns.allFinite()) fail(ErrorCategory::InvalidInput, "weights must be finite");
}

}  // namespace

LatentRecord regenerate_latents(const WeightMatrix& w, double sigma, const CovariateSpec& covariates,
                                std::uint64_t seed, Eigen::Index i) {
    const Eigen::Index d = w.dim(), k = w.models();
    Engine eng = make_engine(seed, kGenerateTag, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> normal;
    LatentRecord rec;
    if (covariates.mode == CovariateMode::FixedDesign) {
        rec.x = covariates.design.row(i).transpose();
    } else {
        rec.x.resize(d);
        for (Eigen::Index l = 0; l < d; ++l) rec.x[l] = normal(eng);
    }
    rec.latents.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) rec.latents[j] = sigma * normal(eng);
    rec.latents.noalias() += w.columns.transpose() * rec.x;
    return rec;
}

KnownIndexDataset sample_known_index(const WeightMatrix& w, double sigma, const SelectionRule& rule,
                                     const CovariateSpec& covariates, Eigen::Index n,
                                     std::uint64_t seed) {
    validate(w, sigma);
    if (rule.k() != w.models()) fail(ErrorCategory::InvalidInput, "rule k differs from number of weight columns");
    if (covariates.mode == CovariateMode::FixedDesign) {
        if (covariates.design.cols() != w.dim())
            fail(ErrorCategory::InvalidInput, "fixed design has wrong column count");
        n = covariates.design.rows();
    }
    if (n < 1) fail(ErrorCategory::InvalidInput, "need at least one record");

    KnownIndexDataset data;
    data.x.resize(n, w.dim());
    data.y.resize(n);
    data.winner.resize(n);
    data.models = static_cast<int>(w.models());
    data.sigma = sigma;
    data.covariates = covariates.mode;
    for (Eigen::Index i = 0; i < n; ++i) {
        LatentRecord rec = regenerate_latents(w, sigma, covariates, seed, i);
        int j = rule.select(rec.latents);
        data.x.row(i) = rec.x.transpose();
        data.y[i] = rec.latents[j];
        data.winner[i] = j;
    }
    if (covariates.mode == CovariateMode::FixedDesign) data.thickness = design_thickness(data.x);
    return data;
}

UnknownIndexDataset sample_unknown_index(const WeightMatrix& w, Eigen::Index n, std::uint64_t seed) {
    validate(w, 1.0);
    if (n < 1) fail(ErrorCategory::InvalidInput, "need at least one record");
    const CovariateSpec gaussian = CovariateSpec::gaussian();
    UnknownIndexDataset data;
    data.x.resize(n, w.dim());
    data.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        LatentRecord rec = regenerate_latents(w, 1.0, gaussian, seed, i);
        data.x.row(i) = rec.x.transpose();
        data.y[i] = rec.latents.maxCoeff();
    }
    return data;
}

UnknownIndexDataset UnknownIndexDataset::slice(Eigen::Index begin, Eigen::Index count) const {
    UnknownIndexDataset out;
    out.x = x.middleRows(begin, count);
    out.y = y.segment(begin, count);
    return out;
}

VectorXd least_squares(const RowMatrix& x, const VectorXd& y) {
    const Eigen::Index d = x.cols();
    if (x.rows() < d) fail(ErrorCategory::SingularDesign, "fewer records than covariates");
    Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
    if (qr.rank() < d) fail(ErrorCategory::SingularDesign, "rank-deficient design");
    return qr.solve(y);
}

WeightMatrix naive_ols(const KnownIndexDataset& data) {
    const Eigen::Index d = data.dim();
    const int k = data.models;
    std::vector<std::vector<Eigen::Index>> rows(k);
    for (Eigen::Index i = 0; i < data.size(); ++i) rows[data.winner[i]].push_back(i);

    MatrixXd est(d, k);
    for (int j = 0; j < k; ++j) {
        const auto& idx = rows[j];
        if (static_cast<Eigen::Index>(idx.size()) < d)
            fail(ErrorCategory::SingularDesign,
                 "model " + std::to_string(j + 1) + " won only " + std::to_string(idx.size()) + " records");
        RowMatrix xj(idx.size(), d);
        VectorXd yj(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            xj.row(r) = data.x.row(idx[r]);
            yj[r] = data.y[idx[r]];
        }
        est.col(j) = least_squares(xj, yj);
    }
    double b = 0.0;
    for (int j = 0; j < k; ++j) b = std::max(b, est.col(j).norm());
    return WeightMatrix(std::move(est), b);
}

SeparabilityCheck check_separability(const WeightMatrix& w, double margin, double bound) {
    SeparabilityCheck out;
    out.margin = margin;
    out.bound = bound;
    const auto k = static_cast<int>(w.models());
    for (int j = 0; j < k; ++j) {
        if (w.col(j).norm() > bound) {
            out.norm_violation = j;
            return out;
        }
    }
    for (int j = 0; j < k; ++j) {
        double nj = w.col(j).norm();
        for (int i = 0; i < k; ++i) {
            if (i == j) continue;
            double proj = nj > 0.0 ? std::abs(w.col(i).dot(w.col(j))) / nj : 0.0;
            if (nj == 0.0 || proj + margin > nj) {
                out.violating_pair = std::pair{std::min(i, j), std::max(i, j)};
                return out;
            }
        }
    }
    out.pass = true;
    return out;
}

WeightMatrix random_weights(Eigen::Index d, Eigen::Index k, double norm, double bound,
                            std::uint64_t seed) {
    Engine eng = make_engine(seed, "weights");
    std::normal_distribution<double> normal;
    MatrixXd w(d, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index l = 0; l < d; ++l) w(l, j) = normal(eng);
        w.col(j) *= norm / w.col(j).norm();
    }
    return WeightMatrix(std::move(w), bound);
}

RowMatrix shifted_gaussian_design(Eigen::Index n, Eigen::Index d, double shift, std::uint64_t seed) {
    Engine eng = make_engine(seed, "design");
    std::normal_distribution<double> normal;
    RowMatrix x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index l = 0; l < d; ++l) x(i, l) = shift + normal(eng);
    return x;
}

RowMatrix intercept_design(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    RowMatrix x = shifted_gaussian_design(n, d, 0.0, seed);
    x.col(0).setOnes();
    return x;
}

double design_thickness(const RowMatrix& x) {
    MatrixXd gram = (x.transpose() * x) / static_cast<double>(x.rows());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace selfselect
