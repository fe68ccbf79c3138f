#pragma once

#include "selfselect/spectral.hpp"
#include "selfselect/types.hpp"

#include <cstdint>
#include <iosfwd>

namespace selfselect {

/// Second and fourth sample moments with their standard errors.
struct MomentPair {
    double m2 = 0.0;
    double m4 = 0.0;
    double se2 = 0.0;
    double se4 = 0.0;
    /// Standard error of m4/3 - m2^2 (delta method).
    double se_discriminant = 0.0;
    Eigen::Index count = 0;
};

MomentPair moment_pair(const Eigen::Ref<const VectorXd>& samples);

/// Variances of two centered Gaussians recovered from the moments of their
/// maximum: m2 -+ sqrt(m4/3 - m2^2), with the discriminant clipped at 0.
struct VariancePair {
    double low = 0.0;
    double high = 0.0;
    /// Unclipped m4/3 - m2^2.
    double discriminant = 0.0;
    /// Discriminant below -3 standard errors.
    bool inconsistent = false;
};

VariancePair invert_moments(double m2, double m4, double se_discriminant = 0.0);

/// Moments of the samples followed by the inversion. Throws InvalidInput on
/// fewer than two samples.
VariancePair min_variance(const Eigen::Ref<const VectorXd>& samples);

/// Chebyshev sample budget sigma_max^8 / (fail_prob * eps^4), reported only.
double chebyshev_budget(double sigma_max2, double eps, double fail_prob);

struct K2Config {
    double epsilon = 0.2;
    /// Separation margin and weight-norm bound.
    double delta = 1.0;
    double bound = 2.0;
    /// <= 0 selects 3 * delta / 4.
    double exclusion = 0.0;
    double fail_prob = 0.1;
    Eigen::Index max_grid = 4000000;

    void validate() const;
    double pitch() const { return epsilon / 6.0; }
    double exclusion_radius() const { return exclusion > 0.0 ? exclusion : 0.75 * delta; }
};

/// Moments of (y, z1, z2) up to degree 4, enough to evaluate E[X^2] and
/// E[X^4] of X = y - c1 z1 - c2 z2 for any c without another pass.
class ResidualMoments {
public:
    ResidualMoments(const VectorXd& y, const RowMatrix& z);

    double second(const Eigen::Vector2d& c) const;
    double fourth(const Eigen::Vector2d& c) const;
    Eigen::Index count() const { return count_; }

private:
    // e_[a][b] = mean of y^(p-a-b) z1^a z2^b for total degree p.
    double deg2_[3][3] = {};
    double deg4_[5][5] = {};
    Eigen::Index count_ = 0;
};

struct SurfacePoint {
    Eigen::Vector2d coords;
    double sigma2_min = 0.0;
};

struct K2Result {
    /// d x 2, first column from the global minimum, second from the
    /// minimum outside the exclusion ball.
    MatrixXd estimates;
    SpectralResult spectral;
    /// Surface from the first-stage split.
    std::vector<SurfacePoint> surface;
    std::size_t first_index = 0;
    Eigen::Vector2d second_coords = Eigen::Vector2d::Zero();
    double first_value = 0.0;
    double second_value = 0.0;
    double pitch = 0.0;
    /// Direct inversions at the two minima, with the consistency check.
    VariancePair first_check;
    VariancePair second_check;
    double sample_budget = 0.0;
    Eigen::Index split_sizes[3] = {0, 0, 0};
};

/// Grid over span(basis) intersected with B(bound), same order as the surface.
std::vector<Eigen::Vector2d> k2_grid(const K2Config& cfg);

/// Moment-inversion estimator for two models. The data is split in thirds:
/// subspace, first minimum, second minimum.
K2Result k2_estimate(const UnknownIndexDataset& data, const K2Config& cfg);

/// Same, with a given 2-dim orthonormal basis; the first third is unused.
K2Result k2_estimate(const UnknownIndexDataset& data, const MatrixXd& basis, const K2Config& cfg);

/// Surface as CSV: w_coord1, w_coord2, sigma2_min.
void write_surface(std::ostream& out, const K2Result& result);

}  // namespace selfselect
