#include "selfselect/k2_moment.hpp"

#include "selfselect/csv_io.hpp"
#include "selfselect/error.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace selfselect {

namespace {

constexpr double kFactorial[5] = {1.0, 1.0, 2.0, 6.0, 24.0};

VectorXd residuals(const UnknownIndexDataset& data, const MatrixXd& basis, const Eigen::Vector2d& c) {
    return data.y - data.x * (basis * c);
}

}  // namespace

MomentPair moment_pair(const Eigen::Ref<const VectorXd>& samples) {
    const Eigen::Index n = samples.size();
    if (n < 2) fail(ErrorCategory::InvalidInput, "need at least two samples for the moments");
    MomentPair p;
    p.count = n;
    VectorXd sq = samples.array().square();
    VectorXd quad = sq.array().square();
    p.m2 = sq.mean();
    p.m4 = quad.mean();
    const double root_n = std::sqrt(static_cast<double>(n));
    auto sd = [&](const VectorXd& v, double mean) {
        return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(n - 1));
    };
    p.se2 = sd(sq, p.m2) / root_n;
    p.se4 = sd(quad, p.m4) / root_n;
    VectorXd g = quad / 3.0 - 2.0 * p.m2 * sq;
    p.se_discriminant = sd(g, g.mean()) / root_n;
    return p;
}

VariancePair invert_moments(double m2, double m4, double se_discriminant) {
    if (!(m2 > 0.0)) fail(ErrorCategory::InvalidInput, "second moment must be positive");
    VariancePair v;
    v.discriminant = m4 / 3.0 - m2 * m2;
    v.inconsistent = v.discriminant < -3.0 * se_discriminant;
    double root = std::sqrt(std::max(v.discriminant, 0.0));
    v.low = m2 - root;
    v.high = m2 + root;
    return v;
}

VariancePair min_variance(const Eigen::Ref<const VectorXd>& samples) {
    MomentPair p = moment_pair(samples);
    return invert_moments(p.m2, p.m4, p.se_discriminant);
}

double chebyshev_budget(double sigma_max2, double eps, double fail_prob) {
    return std::pow(sigma_max2, 4.0) / (fail_prob * std::pow(eps, 4.0));
}

void K2Config::validate() const {
    if (!(epsilon > 0.0)) fail(ErrorCategory::InvalidInput, "k2: epsilon must be positive");
    if (!(delta > 0.0) || !(bound > 0.0)) fail(ErrorCategory::InvalidInput, "k2: delta and bound must be positive");
    if (!(fail_prob > 0.0 && fail_prob < 1.0)) fail(ErrorCategory::InvalidInput, "k2: fail_prob must lie in (0, 1)");
}

ResidualMoments::ResidualMoments(const VectorXd& y, const RowMatrix& z) {
    if (z.cols() != 2 || z.rows() != y.size()) fail(ErrorCategory::InvalidInput, "residual moments need n x 2 coords");
    count_ = y.size();
    if (count_ == 0) fail(ErrorCategory::InvalidInput, "residual moments need at least one record");
    double p[3][5];
    for (Eigen::Index i = 0; i < count_; ++i) {
        double b[3] = {y[i], z(i, 0), z(i, 1)};
        for (int v = 0; v < 3; ++v) {
            p[v][0] = 1.0;
            for (int e = 1; e < 5; ++e) p[v][e] = p[v][e - 1] * b[v];
        }
        for (int a = 0; a <= 2; ++a)
            for (int c = 0; a + c <= 2; ++c) deg2_[a][c] += p[0][2 - a - c] * p[1][a] * p[2][c];
        for (int a = 0; a <= 4; ++a)
            for (int c = 0; a + c <= 4; ++c) deg4_[a][c] += p[0][4 - a - c] * p[1][a] * p[2][c];
    }
    const double inv = 1.0 / static_cast<double>(count_);
    for (auto& row : deg2_)
        for (double& e : row) e *= inv;
    for (auto& row : deg4_)
        for (double& e : row) e *= inv;
}

double ResidualMoments::second(const Eigen::Vector2d& c) const {
    double total = 0.0;
    for (int a = 0; a <= 2; ++a)
        for (int b = 0; a + b <= 2; ++b)
            total += kFactorial[2] / (kFactorial[2 - a - b] * kFactorial[a] * kFactorial[b]) *
                     std::pow(-c[0], a) * std::pow(-c[1], b) * deg2_[a][b];
    return total;
}

double ResidualMoments::fourth(const Eigen::Vector2d& c) const {
    double total = 0.0;
    for (int a = 0; a <= 4; ++a)
        for (int b = 0; a + b <= 4; ++b)
            total += kFactorial[4] / (kFactorial[4 - a - b] * kFactorial[a] * kFactorial[b]) *
                     std::pow(-c[0], a) * std::pow(-c[1], b) * deg4_[a][b];
    return total;
}

std::vector<Eigen::Vector2d> k2_grid(const K2Config& cfg) {
    cfg.validate();
    const double h = cfg.pitch();
    const auto half = static_cast<Eigen::Index>(std::floor(cfg.bound / h));
    const double side = 2.0 * static_cast<double>(half) + 1.0;
    if (side * side > static_cast<double>(cfg.max_grid))
        fail(ErrorCategory::BudgetExceeded, "k2 grid would need about " + std::to_string(side * side) +
                                                " points; cap is " + std::to_string(cfg.max_grid));
    std::vector<Eigen::Vector2d> grid;
    for (Eigen::Index a = -half; a <= half; ++a)
        for (Eigen::Index b = -half; b <= half; ++b) {
            Eigen::Vector2d c(a * h, b * h);
            if (c.norm() <= cfg.bound + 1e-12) grid.push_back(c);
        }
    return grid;
}

K2Result k2_estimate(const UnknownIndexDataset& data, const K2Config& cfg) {
    cfg.validate();
    if (data.size() < 6) fail(ErrorCategory::InvalidInput, "k2 estimator needs at least six records");
    SpectralResult spectral = spectral_subspace(data.slice(0, data.size() / 3), 2);
    K2Result res = k2_estimate(data, spectral.basis, cfg);
    res.spectral = std::move(spectral);
    return res;
}

K2Result k2_estimate(const UnknownIndexDataset& data, const MatrixXd& basis, const K2Config& cfg) {
    cfg.validate();
    if (basis.cols() != 2 || basis.rows() != data.dim())
        fail(ErrorCategory::InvalidInput, "k2 estimator needs a d x 2 basis");
    const Eigen::Index n = data.size();
    if (n < 6) fail(ErrorCategory::InvalidInput, "k2 estimator needs at least six records");
    K2Result res;
    res.split_sizes[0] = n / 3;
    res.split_sizes[1] = 2 * n / 3 - n / 3;
    res.split_sizes[2] = n - 2 * n / 3;
    res.spectral.basis = basis;
    res.pitch = cfg.pitch();
    res.sample_budget = chebyshev_budget(4.0 * cfg.bound * cfg.bound + 1.0, cfg.epsilon, cfg.fail_prob);

    const auto grid = k2_grid(cfg);
    auto first = data.slice(n / 3, res.split_sizes[1]);
    auto second = data.slice(2 * n / 3, res.split_sizes[2]);
    ResidualMoments m1(first.y, first.x * basis);

    res.surface.reserve(grid.size());
    res.first_value = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double value = invert_moments(m1.second(grid[g]), m1.fourth(grid[g])).low;
        res.surface.push_back({grid[g], value});
        if (value < res.first_value) {
            res.first_value = value;
            res.first_index = g;
        }
    }
    const Eigen::Vector2d c1 = grid[res.first_index];

    ResidualMoments m2(second.y, second.x * basis);
    res.second_value = std::numeric_limits<double>::infinity();
    bool found = false;
    for (const auto& c : grid) {
        if ((c - c1).norm() < cfg.exclusion_radius()) continue;
        double value = invert_moments(m2.second(c), m2.fourth(c)).low;
        if (value < res.second_value) {
            res.second_value = value;
            res.second_coords = c;
            found = true;
        }
    }
    if (!found) fail(ErrorCategory::NoCandidate, "no grid point lies outside the exclusion ball");

    res.first_check = min_variance(residuals(first, basis, c1));
    res.second_check = min_variance(residuals(second, basis, res.second_coords));
    res.estimates.resize(data.dim(), 2);
    res.estimates.col(0) = basis * c1;
    res.estimates.col(1) = basis * res.second_coords;
    return res;
}

void write_surface(std::ostream& out, const K2Result& result) {
    out << "w_coord1,w_coord2,sigma2_min\n";
    for (const auto& p : result.surface)
        out << csv::format_double(p.coords[0]) << ',' << csv::format_double(p.coords[1]) << ','
            << csv::format_double(p.sigma2_min) << '\n';
}

}  // namespace selfselect
