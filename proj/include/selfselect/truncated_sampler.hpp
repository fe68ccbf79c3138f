#pragma once

#include "selfselect/random.hpp"
#include "selfselect/selection_rules.hpp"
#include "selfselect/types.hpp"

#include <cstdint>

namespace selfselect {

/// How a Langevin proposal that leaves the slice is brought back.
/// Project: Euclidean projection onto the region (the plain iteration).
/// Reflect: mirror each violated slice face first, then project; the
/// projection then only acts on the ball. Removes most of the O(sqrt(gamma))
/// boundary bias of Project.
enum class LangevinBoundary { Project, Reflect };

/// Projected Langevin settings. gamma <= 0 selects default_step().
struct LangevinConfig {
    double gamma = 0.0;
    int steps = 1000;
    /// Ball radius R for regions built by the adaptive sampler; <= 0 selects
    /// default_radius().
    double radius = 0.0;
    std::uint64_t seed = 0;
    LangevinBoundary boundary = LangevinBoundary::Project;

    void validate() const;
};

/// gamma = sigma^2 / sqrt(k m): total diffusion time gamma*m grows like
/// sigma^2 sqrt(m/k) while the per-step discretization bias shrinks.
double default_step(double sigma, int k, int steps);

/// ||mu|| + sigma (sqrt(k) + sqrt(2 ln(2/alpha))).
double default_radius(const Eigen::Ref<const VectorXd>& mu, double sigma, int k, double alpha);

/// Runs z <- Pi_K(z - gamma/(2 sigma^2) (z - mu) + sqrt(gamma) xi) for
/// cfg.steps iterations from z0 = Pi_K(0) and returns the last iterate.
VectorXd langevin_sample(const Eigen::Ref<const VectorXd>& mu, double sigma, const ConvexRegion& region,
                         const LangevinConfig& cfg);
VectorXd langevin_sample(const Eigen::Ref<const VectorXd>& mu, double sigma, const ConvexRegion& region,
                         double gamma, int steps, Engine& eng,
                         LangevinBoundary boundary = LangevinBoundary::Project);

struct RejectionDraw {
    VectorXd z;
    int tries = 0;
};

/// Exact draw from N(mu, sigma^2 I) restricted to the region. Throws LowMass
/// after max_tries rejected proposals.
RejectionDraw rejection_sample(const Eigen::Ref<const VectorXd>& mu, double sigma, const ConvexRegion& region,
                               int max_tries, std::uint64_t seed);
RejectionDraw rejection_sample(const Eigen::Ref<const VectorXd>& mu, double sigma, const ConvexRegion& region,
                               int max_tries, Engine& eng);

struct MassEstimate {
    double probability = 0.0;
    double std_error = 0.0;
    Eigen::Index draws = 0;
};

/// Monte Carlo estimate of P_{N(mu, sigma^2 I)}(region).
MassEstimate estimate_region_mass(const Eigen::Ref<const VectorXd>& mu, double sigma, const ConvexRegion& region,
                                  Eigen::Index n_mc, std::uint64_t seed);

/// Exact Gaussian mass of the slice box alone (ball ignored). All supported
/// rules have axis-aligned slices, so this is a product of normal CDFs.
double box_mass(const Eigen::Ref<const VectorXd>& mu, double sigma, const ConvexRegion& region);

enum class SamplerRoute { Trivial, Rejection, Langevin };

struct SlicedDraw {
    VectorXd z;
    SamplerRoute route = SamplerRoute::Trivial;
    double mass = 1.0;
};

/// Draws the competitor outputs given that model `winner` produced `a`:
/// N(mu, sigma^2 I) on C_winner(a) intersected with B(R). Uses rejection when
/// the slice mass is at least rejection_threshold, Langevin otherwise.
class TruncatedGaussianSampler {
public:
    TruncatedGaussianSampler(SelectionRule rule, LangevinConfig cfg, double rejection_threshold = 0.2,
                             int max_rejection_tries = 10000);

    SlicedDraw draw(const Eigen::Ref<const VectorXd>& mu, double sigma, int winner, double a, Engine& eng) const;

    const LangevinConfig& config() const { return cfg_; }
    const SelectionRule& rule() const { return rule_; }

private:
    SelectionRule rule_;
    LangevinConfig cfg_;
    double rejection_threshold_;
    int max_rejection_tries_;
};

}  // namespace selfselect
