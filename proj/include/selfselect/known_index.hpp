#pragma once

#include "selfselect/selection_rules.hpp"
#include "selfselect/truncated_sampler.hpp"
#include "selfselect/types.hpp"

#include <cstdint>
#include <vector>

namespace selfselect {

/// Projected stochastic gradient ascent settings.
struct PSGDConfig {
    Eigen::Index iterations = 1000;
    /// Strong-concavity parameter; <= 0 selects alpha_est / (sigma^2 k).
    double lambda = 0.0;
    /// Per-column projection radius.
    double bound = 2.0;
    LangevinConfig langevin;
    double rejection_threshold = 0.2;
    /// Abort when more than this fraction of gradient draws fail.
    double max_failure_fraction = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One stochastic gradient: column j is the block for w_j.
struct GradientSample {
    MatrixXd g;
    Eigen::Index record = -1;
    SamplerRoute route = SamplerRoute::Trivial;
};

/// Mean log-likelihood of k = 2 max-selected data:
/// log f_sigma(y - w_win^T x) + log Phi((y - w_other^T x) / sigma).
/// Throws Unsupported unless the data has two models.
double objective_k2_closed_form(const WeightMatrix& w, const KnownIndexDataset& data, double sigma);

/// Same, for a single record.
double record_objective_k2(const MatrixXd& w, const Eigen::Ref<const VectorXd>& x, double y, int winner,
                           double sigma);

/// Exact gradient of record_objective_k2; the competitor block uses the
/// inverse Mills ratio in place of the sampled latent.
MatrixXd record_gradient_k2(const MatrixXd& w, const Eigen::Ref<const VectorXd>& x, double y, int winner,
                            double sigma);

/// Exact gradient of objective_k2_closed_form.
MatrixXd objective_k2_gradient(const WeightMatrix& w, const KnownIndexDataset& data, double sigma);

/// Stochastic gradient of the known-index log-likelihood for one record:
/// the winner block uses the observed y, the others a draw of the hidden
/// latents from the truncated Gaussian on the winner's slice.
GradientSample estimate_gradient(const MatrixXd& w, const Eigen::Ref<const VectorXd>& x, double y, int winner,
                                 double sigma, const TruncatedGaussianSampler& sampler, Engine& eng);

/// alpha_est = k * min_j (fraction of records won by j).
double empirical_survival(const KnownIndexDataset& data);

struct PSGDResult {
    WeightMatrix estimate;
    Eigen::Index iterations = 0;
    double lambda = 0.0;
    double alpha_est = 0.0;
    Eigen::Index rejection_draws = 0;
    Eigen::Index langevin_draws = 0;
    Eigen::Index sampler_failures = 0;
    /// Largest column norm over all iterates (never above the bound).
    double max_iterate_norm = 0.0;
};

/// Averaged-iterate projected SGD with step 1/(lambda t), starting at 0 and
/// visiting each record at most once (requires n >= iterations).
PSGDResult psgd_estimate(const KnownIndexDataset& data, const SelectionRule& rule, double sigma,
                         const PSGDConfig& cfg);

struct ConcavityReport {
    /// Largest eigenvalue of the finite-difference Hessian at each point.
    std::vector<double> max_eigenvalue;
    /// Max entry gap between the winner-block Hessian and -(1/sigma^2) mean(x x^T).
    std::vector<double> winner_block_error;
    double worst_eigenvalue = -1e300;
    double worst_block_error = 0.0;
};

/// Central-difference Hessians of objective_k2_closed_form at each W.
ConcavityReport numeric_concavity_check(const std::vector<WeightMatrix>& points, const KnownIndexDataset& data,
                                        double sigma, double step = 1e-3);

}  // namespace selfselect
