#pragma once

#include "selfselect/spectral.hpp"
#include "selfselect/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace selfselect {

/// Paired: compare the moments after shifting by +s v and -s v and keep the
/// smaller. Threshold: the two-threshold test on the +s shifted scale alone.
enum class SignRule { Paired, Threshold };

struct GridConfig {
    /// Even moment order.
    int l = 6;
    /// Half-width of the slab event around each direction.
    double rho = 0.3;
    /// Net resolution on the unit sphere of the subspace.
    double gamma_net = 0.05;
    /// Median-of-means block count.
    int blocks = 32;
    /// Separability margin and weight-norm bound.
    double delta = 0.8;
    double bound = 2.0;
    /// <= 0 selects delta / 2.
    double dedup_radius = 0.0;
    /// <= 0 selects 3 * gamma_net.
    double neighborhood = 0.0;
    SignRule sign_rule = SignRule::Paired;
    std::size_t max_net_size = 1000000;
    std::uint64_t seed = 0;

    void validate() const;
    double dedup() const { return dedup_radius > 0.0 ? dedup_radius : delta / 2.0; }
    double neighborhood_radius() const { return neighborhood > 0.0 ? neighborhood : 3.0 * gamma_net; }
};

/// Unit direction of the net, with its score once evaluated.
struct NetPoint {
    /// Ambient unit vector (d).
    VectorXd v;
    /// Coordinates in the subspace basis (k).
    VectorXd coords;
    double moment = 0.0;
    double scale = 1.0;
    Eigen::Index count = 0;
    bool scored = false;
    bool clipped = false;
};

/// gamma-net over the unit sphere of span(basis), closed under v -> -v.
/// Throws BudgetExceeded when more than cfg.max_net_size points are needed.
std::vector<NetPoint> build_net(const MatrixXd& basis, const GridConfig& cfg);

struct ConditionalMoment {
    double value = 0.0;
    Eigen::Index count = 0;
};

/// Median-of-means estimate of E[(y - shift v^T x)^l | A_v], with
/// A_v = {||(I - v v^T) P_U x|| <= rho}. Throws InsufficientConditioning
/// when fewer than 10 * blocks records fall in A_v.
ConditionalMoment conditional_moment(const UnknownIndexDataset& data, const MatrixXd& basis,
                                     const Eigen::Ref<const VectorXd>& v, std::optional<double> shift,
                                     const GridConfig& cfg);

struct MomentScale {
    double value = 1.0;
    bool clipped = false;
};

/// (M / (l-1)!!)^{1/l}, clipped below at 1. Throws InvalidInput for M <= 0.
MomentScale moment_scale(double moment, int l);

/// Scores every net point in place; points with too few records stay unscored.
void score_net(std::vector<NetPoint>& net, const UnknownIndexDataset& data, const MatrixXd& basis,
               const GridConfig& cfg);

struct CandidateSet {
    /// Indices into the net.
    std::vector<std::size_t> members;
    /// Every scored point is a local maximum (flat score).
    bool degenerate = false;
};

/// Net points whose scale is maximal within the neighborhood radius.
/// Throws NoCandidate if nothing is scored.
CandidateSet extract_candidates(const std::vector<NetPoint>& net, const GridConfig& cfg);

struct SignedCandidate {
    std::size_t net_index = 0;
    VectorXd w;
    /// +1, -1, or 0 when ambiguous (dropped).
    int sign = 0;
    double shift = 0.0;
    /// Scales after shifting by +shift and by -shift (the latter 0 for the threshold rule).
    double plus_scale = 0.0;
    double minus_scale = 0.0;
    Eigen::Index count = 0;
    double scale = 1.0;
    int cluster = -1;
};

/// Turns each candidate direction into a signed weight estimate using a
/// fresh data split.
std::vector<SignedCandidate> disambiguate_signs(const UnknownIndexDataset& data, const MatrixXd& basis,
                                                const std::vector<NetPoint>& net, const CandidateSet& candidates,
                                                const GridConfig& cfg);

struct PruneResult {
    /// One column per cluster representative.
    MatrixXd estimates;
    /// Indices into the input of each representative.
    std::vector<std::size_t> representatives;
    bool overcount = false;
};

/// Greedy clustering of the unambiguous candidates; assigns cluster ids in
/// place. Throws NoCandidate when none is left.
PruneResult prune(std::vector<SignedCandidate>& signed_candidates, int k, double radius);

struct GridResult {
    MatrixXd estimates;
    SpectralResult spectral;
    std::vector<NetPoint> net;
    CandidateSet candidates;
    std::vector<SignedCandidate> signed_candidates;
    PruneResult pruned;
    Eigen::Index clipped_points = 0;
    Eigen::Index unscored_points = 0;
    Eigen::Index ambiguous = 0;
    /// Sizes of the subspace, moment and sign splits.
    Eigen::Index split_sizes[3] = {0, 0, 0};
};

/// Full unknown-index pipeline for k models: data split in thirds for the
/// subspace, the net scores and the sign step. When more than k clusters
/// survive, the k with the largest scale are kept.
GridResult grid_estimate(const UnknownIndexDataset& data, int k, const GridConfig& cfg);

struct ScaleByOrder {
    int l = 0;
    double scale = 1.0;
    double moment = 0.0;
    Eigen::Index count = 0;
};

/// sigma~_v for each moment order, on the whole dataset.
std::vector<ScaleByOrder> identifiability_diagnostic(const UnknownIndexDataset& data, const MatrixXd& basis,
                                                     const Eigen::Ref<const VectorXd>& v,
                                                     const std::vector<int>& orders, const GridConfig& cfg);

/// Plain conditional means E[y_j^l | A_v] of each latent output (columns of
/// latents) over the records in A_v.
VectorXd component_conditional_moments(const UnknownIndexDataset& data, const MatrixXd& latents,
                                       const MatrixXd& basis, const Eigen::Ref<const VectorXd>& v,
                                       const GridConfig& cfg);

/// Fraction of records in A_v.
double event_fraction(const UnknownIndexDataset& data, const MatrixXd& basis, const Eigen::Ref<const VectorXd>& v,
                      double rho);

/// Candidate table as CSV: v1..vd, sigma_tilde, count, sign, cluster.
void write_candidates(std::ostream& out, const GridResult& result);

}  // namespace selfselect
