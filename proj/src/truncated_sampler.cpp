#include "selfselect/truncated_sampler.hpp"

#include "selfselect/error.hpp"
#include "selfselect/normal_math.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace selfselect {

void LangevinConfig::validate() const {
    if (steps < 1) fail(ErrorCategory::InvalidInput, "langevin: steps must be >= 1");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail(ErrorCategory::InvalidInput, "langevin: bad step size");
    if (!std::isfinite(radius)) fail(ErrorCategory::InvalidInput, "langevin: bad radius");
}

double default_step(double sigma, int k, int steps) {
    return sigma * sigma / std::sqrt(static_cast<double>(std::max(k, 1)) * steps);
}

double default_radius(const Eigen::Ref<const VectorXd>& mu, double sigma, int k, double alpha) {
    alpha = std::clamp(alpha, 1e-300, 1.0);
    return mu.norm() + sigma * (std::sqrt(static_cast<double>(k)) + std::sqrt(2.0 * std::log(2.0 / alpha)));
}

VectorXd langevin_sample(const Eigen::Ref<const VectorXd>& mu, double sigma, const ConvexRegion& region,
                         const LangevinConfig& cfg) {
    cfg.validate();
    Engine eng = make_engine(cfg.seed, "langevin");
    double gamma = cfg.gamma > 0.0 ? cfg.gamma : default_step(sigma, region.dim() + 1, cfg.steps);
    return langevin_sample(mu, sigma, region, gamma, cfg.steps, eng, cfg.boundary);
}

VectorXd langevin_sample(const Eigen::Ref<const VectorXd>& mu, double sigma, const ConvexRegion& region,
                         double gamma, int steps, Engine& eng, LangevinBoundary boundary) {
    const int dim = region.dim();
    if (mu.size() != dim) fail(ErrorCategory::InvalidInput, "langevin: mean has wrong dimension");
    if (!(sigma > 0.0) || !(gamma > 0.0)) fail(ErrorCategory::InvalidInput, "langevin: sigma and gamma must be positive");
    VectorXd z = region.project(VectorXd::Zero(dim));
    if (dim == 0) return z;

    std::normal_distribution<double> normal;
    const double drift = gamma / (2.0 * sigma * sigma);
    const double noise = std::sqrt(gamma);
    const bool reflect = boundary == LangevinBoundary::Reflect;
    const VectorXd& b = region.bounds();
    const double side = region.upper() ? 1.0 : -1.0;
    VectorXd proposal(dim);
    for (int t = 0; t < steps; ++t) {
        for (int i = 0; i < dim; ++i) {
            double p = z[i] - drift * (z[i] - mu[i]) + noise * normal(eng);
            if (reflect && side * (p - b[i]) > 0.0) p = 2.0 * b[i] - p;
            proposal[i] = p;
        }
        region.project_into(proposal, z);
    }
    return z;
}

RejectionDraw rejection_sample(const Eigen::Ref<const VectorXd>& mu, double sigma, const ConvexRegion& region,
                               int max_tries, std::uint64_t seed) {
    Engine eng = make_engine(seed, "rejection");
    return rejection_sample(mu, sigma, region, max_tries, eng);
}

RejectionDraw rejection_sample(const Eigen::Ref<const VectorXd>& mu, double sigma, const ConvexRegion& region,
                               int max_tries, Engine& eng) {
    const int dim = region.dim();
    if (mu.size() != dim) fail(ErrorCategory::InvalidInput, "rejection: mean has wrong dimension");
    if (!region.feasible()) fail(ErrorCategory::InfeasibleRegion, "rejection: empty region");
    std::normal_distribution<double> normal;
    RejectionDraw out;
    out.z.resize(dim);
    while (out.tries < max_tries) {
        ++out.tries;
        for (int i = 0; i < dim; ++i) out.z[i] = mu[i] + sigma * normal(eng);
        if (region.contains(out.z)) return out;
    }
    fail(ErrorCategory::LowMass, "rejection sampling exceeded " + std::to_string(max_tries) +
                                     " tries; region mass too small for rejection");
}

MassEstimate estimate_region_mass(const Eigen::Ref<const VectorXd>& mu, double sigma, const ConvexRegion& region,
                                  Eigen::Index n_mc, std::uint64_t seed) {
    if (n_mc < 1) fail(ErrorCategory::InvalidInput, "mass estimate needs n_mc >= 1");
    const int dim = region.dim();
    Engine eng = make_engine(seed, "mass");
    std::normal_distribution<double> normal;
    VectorXd z(dim);
    Eigen::Index hits = 0;
    for (Eigen::Index s = 0; s < n_mc; ++s) {
        for (int i = 0; i < dim; ++i) z[i] = mu[i] + sigma * normal(eng);
        if (region.contains(z)) ++hits;
    }
    MassEstimate m;
    m.draws = n_mc;
    m.probability = static_cast<double>(hits) / static_cast<double>(n_mc);
    m.std_error = std::sqrt(m.probability * (1.0 - m.probability) / static_cast<double>(n_mc));
    return m;
}

double box_mass(const Eigen::Ref<const VectorXd>& mu, double sigma, const ConvexRegion& region) {
    double log_mass = 0.0;
    const auto& b = region.bounds();
    for (int i = 0; i < region.dim(); ++i) {
        double t = (b[i] - mu[i]) / sigma;
        log_mass += normal::log_cdf(region.upper() ? t : -t);
    }
    return std::exp(log_mass);
}

TruncatedGaussianSampler::TruncatedGaussianSampler(SelectionRule rule, LangevinConfig cfg,
                                                   double rejection_threshold, int max_rejection_tries)
    : rule_(std::move(rule)),
      cfg_(cfg),
      rejection_threshold_(rejection_threshold),
      max_rejection_tries_(max_rejection_tries) {
    cfg_.validate();
}

SlicedDraw TruncatedGaussianSampler::draw(const Eigen::Ref<const VectorXd>& mu, double sigma, int winner, double a,
                                          Engine& eng) const {
    const int k = rule_.k();
    SlicedDraw out;
    if (k == 1) {
        out.z.resize(0);
        return out;
    }
    // Mass of the bare slice decides the route and the default radius.
    ConvexRegion slice(rule_, winner, a, 1.0);
    out.mass = box_mass(mu, sigma, slice);
    double radius = cfg_.radius;
    if (radius <= 0.0) {
        // The ball must reach past the slice corner nearest the origin.
        VectorXd corner = slice.bounds().array().min(0.0);
        if (!slice.upper()) corner = slice.bounds().array().max(0.0);
        radius = std::max(default_radius(mu, sigma, k, out.mass), corner.norm() + sigma);
    }
    ConvexRegion region(rule_, winner, a, radius);

    if (out.mass >= rejection_threshold_) {
        out.route = SamplerRoute::Rejection;
        out.z = rejection_sample(mu, sigma, region, max_rejection_tries_, eng).z;
        return out;
    }
    out.route = SamplerRoute::Langevin;
    double gamma = cfg_.gamma > 0.0 ? cfg_.gamma : default_step(sigma, k, cfg_.steps);
    out.z = langevin_sample(mu, sigma, region, gamma, cfg_.steps, eng, cfg_.boundary);
    return out;
}

}  // namespace selfselect
