#include "selfselect/spectral.hpp"

#include "selfselect/error.hpp"
#include "selfselect/random.hpp"
#include "selfselect/synthetic_model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace selfselect {

namespace {

double median(std::vector<double> v) {
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + h, v.end());
    if (v.size() % 2 == 1) return v[h];
    double upper = v[h];
    return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + h));
}

}  // namespace

MatrixXd weighted_second_moment(const UnknownIndexDataset& data) {
    if (data.size() < 1) fail(ErrorCategory::InvalidInput, "second moment needs at least one record");
    const Eigen::Index d = data.dim();
    VectorXd scale = data.y.cwiseMax(0.0);
    RowMatrix weighted = data.x.array().colwise() * scale.array();
    MatrixXd m = MatrixXd::Zero(d, d);
    m.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
    m = m.selfadjointView<Eigen::Lower>();
    return m / static_cast<double>(data.size());
}

BaselineEstimate positive_square_mean(const UnknownIndexDataset& data) {
    if (data.size() < 1) fail(ErrorCategory::InvalidInput, "baseline needs at least one record");
    VectorXd s = data.y.cwiseMax(0.0).cwiseAbs2();
    const double n = static_cast<double>(data.size());
    BaselineEstimate b;
    b.value = s.mean();
    b.std_error = n > 1 ? std::sqrt((s.array() - b.value).square().sum() / (n - 1.0) / n) : 0.0;
    return b;
}

SpectralResult top_k_subspace(const MatrixXd& m, int k, double baseline) {
    const Eigen::Index d = m.rows();
    if (m.cols() != d) fail(ErrorCategory::InvalidInput, "moment matrix must be square");
    if (k < 1) fail(ErrorCategory::InvalidInput, "subspace rank must be >= 1");
    if (d < k) fail(ErrorCategory::InvalidInput, "dimension " + std::to_string(d) + " is below k = " + std::to_string(k));
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()));
    if (es.info() != Eigen::Success) fail(ErrorCategory::Validation, "eigendecomposition failed");

    SpectralResult r;
    r.eigenvalues = es.eigenvalues().reverse();
    r.eigenvectors = es.eigenvectors().rowwise().reverse();
    r.basis = r.eigenvectors.leftCols(k);
    r.baseline = baseline;
    double next = k < d ? r.eigenvalues[k] : 0.0;
    r.gap = r.eigenvalues[k - 1] - next;
    double scale = std::max(std::abs(r.eigenvalues[0]), 1e-300);
    r.degenerate = r.gap <= 1e-12 * scale;
    return r;
}

SpectralResult spectral_subspace(const UnknownIndexDataset& data, int k) {
    return top_k_subspace(weighted_second_moment(data), k, positive_square_mean(data).value);
}

int gap_heuristic_rank(const VectorXd& ev) {
    if (ev.size() < 2) return static_cast<int>(ev.size());
    double scale = std::max(std::abs(ev[0]), 1e-300);
    int best = 1;
    double widest = -1.0;
    for (Eigen::Index i = 0; i + 1 < ev.size(); ++i) {
        double g = (ev[i] - ev[i + 1]) / scale;
        if (g > widest) {
            widest = g;
            best = static_cast<int>(i + 1);
        }
    }
    return best;
}

double subspace_angle(const MatrixXd& basis, const MatrixXd& w) {
    if (basis.rows() != w.rows()) fail(ErrorCategory::InvalidInput, "basis and weights differ in dimension");
    double worst = 0.0;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        double norm = w.col(j).norm();
        if (norm == 0.0) continue;
        VectorXd resid = w.col(j) - basis * (basis.transpose() * w.col(j));
        worst = std::max(worst, resid.norm() / norm);
    }
    return worst;
}

double rayleigh_quotient(const MatrixXd& m, const Eigen::Ref<const VectorXd>& v) {
    return v.dot(m * v) / v.squaredNorm();
}

ConcentrationTable concentration_probe(const WeightMatrix& w, const std::vector<Eigen::Index>& n_grid, int seeds,
                                       std::uint64_t seed) {
    if (n_grid.empty() || seeds < 1) fail(ErrorCategory::InvalidInput, "concentration probe needs sizes and seeds");
    ConcentrationTable table;
    table.reference_size = 10 * *std::max_element(n_grid.begin(), n_grid.end());
    const MatrixXd reference =
        weighted_second_moment(sample_unknown_index(w, table.reference_size, substream_seed(seed, "reference")));

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
        std::vector<double> devs;
        for (int s = 0; s < seeds; ++s) {
            auto data = sample_unknown_index(w, n_grid[g], substream_seed(seed, "probe", g * 1000003ULL + s));
            MatrixXd diff = weighted_second_moment(data) - reference;
            double dev = Eigen::SelfAdjointEigenSolver<MatrixXd>(diff, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .cwiseAbs()
                             .maxCoeff();
            table.rows.push_back({n_grid[g], s, dev});
            devs.push_back(dev);
            double lx = std::log(static_cast<double>(n_grid[g])), ly = std::log(dev);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        table.median_deviation.push_back(median(devs));
    }
    const double cnt = static_cast<double>(table.rows.size());
    double denom = cnt * sxx - sx * sx;
    table.slope = denom > 0.0 ? (cnt * sxy - sx * sy) / denom : 0.0;
    return table;
}

}  // namespace selfselect
