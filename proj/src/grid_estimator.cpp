#include "selfselect/grid_estimator.hpp"

#include "selfselect/csv_io.hpp"
#include "selfselect/error.hpp"
#include "selfselect/normal_math.hpp"
#include "selfselect/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

namespace selfselect {

namespace {

double ipow(double r, int l) {
    double r2 = r * r, out = 1.0;
    for (int i = 0; i < l / 2; ++i) out *= r2;
    return out;
}

double median(std::vector<double>& v) {
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + h, v.end());
    if (v.size() % 2 == 1) return v[h];
    return 0.5 * (v[h] + *std::max_element(v.begin(), v.begin() + h));
}

// Subspace coordinates z = U^T x of every record.
RowMatrix subspace_coords(const UnknownIndexDataset& data, const MatrixXd& basis) {
    if (basis.rows() != data.dim()) fail(ErrorCategory::InvalidInput, "basis dimension differs from the data");
    return data.x * basis;
}

// Residual of z off the line through c, squared: ||z||^2 - (c.z)^2.
inline bool in_event(const RowMatrix& z, Eigen::Index i, const VectorXd& c, double rho2, double& along) {
    double norm2 = 0.0;
    along = 0.0;
    for (Eigen::Index a = 0; a < z.cols(); ++a) {
        norm2 += z(i, a) * z(i, a);
        along += c[a] * z(i, a);
    }
    return norm2 - along * along <= rho2;
}

ConditionalMoment moment_from_coords(const RowMatrix& z, const VectorXd& y, const VectorXd& c, double shift,
                                     int l, const GridConfig& cfg) {
    const Eigen::Index n = y.size();
    const int q = cfg.blocks;
    const double rho2 = cfg.rho * cfg.rho;
    std::vector<double> block_means;
    block_means.reserve(q);
    ConditionalMoment out;
    for (int b = 0; b < q; ++b) {
        const Eigen::Index lo = b * n / q, hi = (b + 1) * n / q;
        double sum = 0.0;
        Eigen::Index cnt = 0;
        double along;
        for (Eigen::Index i = lo; i < hi; ++i) {
            if (!in_event(z, i, c, rho2, along)) continue;
            sum += ipow(y[i] - shift * along, l);
            ++cnt;
        }
        out.count += cnt;
        if (cnt > 0) block_means.push_back(sum / static_cast<double>(cnt));
    }
    if (out.count < 10 * static_cast<Eigen::Index>(q))
        fail(ErrorCategory::InsufficientConditioning, "only " + std::to_string(out.count) +
                                                          " records in the slab event; need " +
                                                          std::to_string(10 * q));
    out.value = median(block_means);
    return out;
}

VectorXd coords_of(const MatrixXd& basis, const Eigen::Ref<const VectorXd>& v) {
    if (v.size() != basis.rows()) fail(ErrorCategory::InvalidInput, "direction has wrong dimension");
    VectorXd c = basis.transpose() * v;
    double norm = c.norm();
    if (!(norm > 0.0)) fail(ErrorCategory::InvalidInput, "direction is orthogonal to the subspace");
    return c / norm;
}

double shifted_scale(double moment, int l) {
    if (!(moment > 0.0)) return 0.0;
    double s2 = std::pow(moment / normal::double_factorial_odd(l), 2.0 / l) - 1.0;
    return std::sqrt(std::max(s2, 0.0));
}

void add_point(std::vector<NetPoint>& net, const MatrixXd& basis, const VectorXd& c) {
    NetPoint p;
    p.coords = c.normalized();
    p.v = basis * p.coords;
    net.push_back(std::move(p));
}

double log_sphere_area(int k) {
    // area of the unit sphere in R^k
    return std::log(2.0) + 0.5 * k * std::log(std::numbers::pi) - std::lgamma(0.5 * k);
}

double log_ball_volume(int m, double r) {
    return 0.5 * m * std::log(std::numbers::pi) - std::lgamma(0.5 * m + 1.0) + m * std::log(r);
}

}  // namespace

void GridConfig::validate() const {
    if (l < 2 || l % 2 != 0) fail(ErrorCategory::InvalidInput, "grid: moment order must be even and >= 2");
    if (!(rho > 0.0 && rho <= 1.0)) fail(ErrorCategory::InvalidInput, "grid: rho must lie in (0, 1]");
    if (blocks < 3) fail(ErrorCategory::InvalidInput, "grid: need at least 3 median-of-means blocks");
    if (!(gamma_net > 0.0)) fail(ErrorCategory::InvalidInput, "grid: net resolution must be positive");
    if (!(delta > 0.0) || !(bound > 0.0)) fail(ErrorCategory::InvalidInput, "grid: delta and bound must be positive");
}

std::vector<NetPoint> build_net(const MatrixXd& basis, const GridConfig& cfg) {
    cfg.validate();
    const auto k = static_cast<int>(basis.cols());
    if (k < 1) fail(ErrorCategory::InvalidInput, "net needs a subspace of dimension >= 1");
    const double g = cfg.gamma_net;
    auto over_budget = [&](double count) {
        if (count > static_cast<double>(cfg.max_net_size))
            fail(ErrorCategory::BudgetExceeded, "net would need about " + std::to_string(count) +
                                                    " points; cap is " + std::to_string(cfg.max_net_size));
    };
    std::vector<NetPoint> net;
    if (k == 1) {
        add_point(net, basis, VectorXd::Constant(1, 1.0));
        add_point(net, basis, VectorXd::Constant(1, -1.0));
        return net;
    }
    if (k == 2) {
        double want = std::max(4.0, std::ceil(2.0 * std::numbers::pi / g));
        over_budget(want);
        auto n = static_cast<int>(want);
        n += n % 2;
        for (int i = 0; i < n; ++i) {
            double t = 2.0 * std::numbers::pi * i / n;
            add_point(net, basis, Eigen::Vector2d(std::cos(t), std::sin(t)));
        }
        return net;
    }
    if (k == 3) {
        // latitude rings; equal longitude counts on mirrored rings keep -v in the net
        const int rings = std::max(2, static_cast<int>(std::ceil(std::numbers::pi / g)));
        std::vector<int> per_ring(rings);
        double total = 0.0;
        for (int r = 0; r < rings; ++r) {
            double theta = (r + 0.5) * std::numbers::pi / rings;
            int m = std::max(4, static_cast<int>(std::ceil(2.0 * std::numbers::pi * std::sin(theta) / g)));
            per_ring[r] = m + m % 2;
            total += per_ring[r];
        }
        for (int r = 0; r < rings; ++r) per_ring[r] = std::max(per_ring[r], per_ring[rings - 1 - r]);
        over_budget(total);
        for (int r = 0; r < rings; ++r) {
            double theta = (r + 0.5) * std::numbers::pi / rings;
            for (int j = 0; j < per_ring[r]; ++j) {
                double phi = 2.0 * std::numbers::pi * j / per_ring[r];
                add_point(net, basis,
                          Eigen::Vector3d(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                                          std::cos(theta)));
            }
        }
        return net;
    }
    // k >= 4: greedy gamma-separated subset of random directions in a random
    // rotation; a maximal separated set is a cover.
    double packing = std::exp(log_sphere_area(k) - log_ball_volume(k - 1, g / 2.0));
    over_budget(packing);
    const auto draws = static_cast<Eigen::Index>(std::min(20.0 * packing + 1000.0, 2e7));
    Engine eng = make_engine(cfg.seed, "net");
    std::normal_distribution<double> normal;
    std::vector<VectorXd> chosen;
    VectorXd c(k);
    for (Eigen::Index t = 0; t < draws; ++t) {
        for (int a = 0; a < k; ++a) c[a] = normal(eng);
        c.normalize();
        bool covered = false;
        for (const auto& u : chosen)
            if ((u - c).norm() <= g) {
                covered = true;
                break;
            }
        if (covered) continue;
        chosen.push_back(c);
        chosen.push_back(-c);
        if (chosen.size() > cfg.max_net_size) over_budget(static_cast<double>(chosen.size()));
    }
    for (const auto& u : chosen) add_point(net, basis, u);
    return net;
}

MomentScale moment_scale(double moment, int l) {
    if (!(moment > 0.0)) fail(ErrorCategory::InvalidInput, "moment must be positive");
    MomentScale s;
    s.value = std::pow(moment / normal::double_factorial_odd(l), 1.0 / l);
    if (s.value < 1.0) {
        s.value = 1.0;
        s.clipped = true;
    }
    return s;
}

ConditionalMoment conditional_moment(const UnknownIndexDataset& data, const MatrixXd& basis,
                                     const Eigen::Ref<const VectorXd>& v, std::optional<double> shift,
                                     const GridConfig& cfg) {
    cfg.validate();
    RowMatrix z = subspace_coords(data, basis);
    return moment_from_coords(z, data.y, coords_of(basis, v), shift.value_or(0.0), cfg.l, cfg);
}

void score_net(std::vector<NetPoint>& net, const UnknownIndexDataset& data, const MatrixXd& basis,
               const GridConfig& cfg) {
    cfg.validate();
    RowMatrix z = subspace_coords(data, basis);
    for (auto& p : net) {
        try {
            auto m = moment_from_coords(z, data.y, p.coords, 0.0, cfg.l, cfg);
            p.moment = m.value;
            p.count = m.count;
            if (m.value > 0.0) {
                auto s = moment_scale(m.value, cfg.l);
                p.scale = s.value;
                p.clipped = s.clipped;
            } else {
                p.scale = 1.0;
                p.clipped = true;
            }
            p.scored = true;
        } catch (const Error& e) {
            if (e.category() != ErrorCategory::InsufficientConditioning) throw;
            p.scored = false;
        }
    }
}

CandidateSet extract_candidates(const std::vector<NetPoint>& net, const GridConfig& cfg) {
    const double r = cfg.neighborhood_radius();
    CandidateSet out;
    std::size_t scored = 0;
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (!net[i].scored) continue;
        ++scored;
        bool peak = true;
        for (std::size_t u = 0; u < net.size() && peak; ++u) {
            if (u == i || !net[u].scored) continue;
            if ((net[u].coords - net[i].coords).norm() <= r && net[u].scale > net[i].scale) peak = false;
        }
        if (peak) out.members.push_back(i);
    }
    if (scored == 0) fail(ErrorCategory::NoCandidate, "no net point could be scored");
    out.degenerate = scored > 2 && out.members.size() == scored;
    return out;
}

std::vector<SignedCandidate> disambiguate_signs(const UnknownIndexDataset& data, const MatrixXd& basis,
                                                const std::vector<NetPoint>& net, const CandidateSet& candidates,
                                                const GridConfig& cfg) {
    cfg.validate();
    RowMatrix z = subspace_coords(data, basis);
    std::vector<SignedCandidate> out;
    for (std::size_t idx : candidates.members) {
        const NetPoint& p = net.at(idx);
        SignedCandidate c;
        c.net_index = idx;
        c.count = p.count;
        c.scale = p.scale;
        c.shift = std::sqrt(std::max(p.scale * p.scale - 1.0, 0.0));
        try {
            c.plus_scale = shifted_scale(moment_from_coords(z, data.y, p.coords, c.shift, cfg.l, cfg).value, cfg.l);
            if (cfg.sign_rule == SignRule::Paired) {
                c.minus_scale =
                    shifted_scale(moment_from_coords(z, data.y, p.coords, -c.shift, cfg.l, cfg).value, cfg.l);
                c.sign = c.plus_scale <= c.minus_scale ? 1 : -1;
            } else if (c.plus_scale <= 2.0 * c.shift - cfg.delta / 8.0) {
                c.sign = 1;
            } else if (c.plus_scale >= 2.0 * c.shift - cfg.delta / 16.0) {
                c.sign = -1;
            }
        } catch (const Error& e) {
            if (e.category() != ErrorCategory::InsufficientConditioning) throw;
            c.sign = 0;
        }
        c.w = c.sign * c.shift * p.v;
        out.push_back(std::move(c));
    }
    return out;
}

PruneResult prune(std::vector<SignedCandidate>& cands, int k, double radius) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < cands.size(); ++i)
        if (cands[i].sign != 0) order.push_back(i);
    if (order.empty()) fail(ErrorCategory::NoCandidate, "no unambiguous candidate left to cluster");
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cands[a].scale > cands[b].scale; });

    std::vector<std::size_t> seeds;
    for (std::size_t i : order) {
        int cluster = -1;
        for (std::size_t s = 0; s < seeds.size(); ++s)
            if ((cands[i].w - cands[seeds[s]].w).norm() < radius) {
                cluster = static_cast<int>(s);
                break;
            }
        if (cluster < 0) {
            cluster = static_cast<int>(seeds.size());
            seeds.push_back(i);
        }
        cands[i].cluster = cluster;
    }
    PruneResult out;
    out.representatives.assign(seeds.size(), 0);
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        std::size_t best = seeds[s];
        for (std::size_t i : order)
            if (cands[i].cluster == static_cast<int>(s) && cands[i].count > cands[best].count) best = i;
        out.representatives[s] = best;
    }
    const Eigen::Index d = cands[order.front()].w.size();
    out.estimates.resize(d, static_cast<Eigen::Index>(seeds.size()));
    for (std::size_t s = 0; s < seeds.size(); ++s) out.estimates.col(s) = cands[out.representatives[s]].w;
    out.overcount = static_cast<int>(seeds.size()) > k;
    return out;
}

GridResult grid_estimate(const UnknownIndexDataset& data, int k, const GridConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = data.size();
    if (n < 3) fail(ErrorCategory::InvalidInput, "grid estimator needs at least three records");
    GridResult res;
    res.split_sizes[0] = n / 3;
    res.split_sizes[1] = 2 * n / 3 - n / 3;
    res.split_sizes[2] = n - 2 * n / 3;
    auto first = data.slice(0, res.split_sizes[0]);
    auto second = data.slice(n / 3, res.split_sizes[1]);
    auto third = data.slice(2 * n / 3, res.split_sizes[2]);

    res.spectral = spectral_subspace(first, k);
    const MatrixXd& basis = res.spectral.basis;
    res.net = build_net(basis, cfg);
    score_net(res.net, second, basis, cfg);
    for (const auto& p : res.net) {
        if (!p.scored) ++res.unscored_points;
        if (p.scored && p.clipped) ++res.clipped_points;
    }
    res.candidates = extract_candidates(res.net, cfg);
    res.signed_candidates = disambiguate_signs(third, basis, res.net, res.candidates, cfg);
    for (const auto& c : res.signed_candidates)
        if (c.sign == 0) ++res.ambiguous;
    res.pruned = prune(res.signed_candidates, k, cfg.dedup());

    // Keep the k clusters with the strongest scale.
    const auto clusters = static_cast<Eigen::Index>(res.pruned.representatives.size());
    std::vector<double> strength(clusters, 0.0);
    for (const auto& c : res.signed_candidates)
        if (c.cluster >= 0) strength[c.cluster] = std::max(strength[c.cluster], c.scale);
    std::vector<Eigen::Index> rank(clusters);
    for (Eigen::Index i = 0; i < clusters; ++i) rank[i] = i;
    std::stable_sort(rank.begin(), rank.end(), [&](Eigen::Index a, Eigen::Index b) { return strength[a] > strength[b]; });
    const Eigen::Index keep = std::min<Eigen::Index>(clusters, k);
    res.estimates.resize(data.dim(), keep);
    for (Eigen::Index i = 0; i < keep; ++i) res.estimates.col(i) = res.pruned.estimates.col(rank[i]);
    return res;
}

std::vector<ScaleByOrder> identifiability_diagnostic(const UnknownIndexDataset& data, const MatrixXd& basis,
                                                     const Eigen::Ref<const VectorXd>& v,
                                                     const std::vector<int>& orders, const GridConfig& cfg) {
    RowMatrix z = subspace_coords(data, basis);
    VectorXd c = coords_of(basis, v);
    std::vector<ScaleByOrder> out;
    for (int l : orders) {
        GridConfig at = cfg;
        at.l = l;
        at.validate();
        auto m = moment_from_coords(z, data.y, c, 0.0, l, at);
        out.push_back({l, moment_scale(m.value, l).value, m.value, m.count});
    }
    return out;
}

VectorXd component_conditional_moments(const UnknownIndexDataset& data, const MatrixXd& latents,
                                       const MatrixXd& basis, const Eigen::Ref<const VectorXd>& v,
                                       const GridConfig& cfg) {
    if (latents.rows() != data.size()) fail(ErrorCategory::InvalidInput, "latents must have one row per record");
    RowMatrix z = subspace_coords(data, basis);
    VectorXd c = coords_of(basis, v);
    VectorXd sum = VectorXd::Zero(latents.cols());
    Eigen::Index cnt = 0;
    double along;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        if (!in_event(z, i, c, cfg.rho * cfg.rho, along)) continue;
        for (Eigen::Index j = 0; j < latents.cols(); ++j) sum[j] += ipow(latents(i, j), cfg.l);
        ++cnt;
    }
    if (cnt == 0) fail(ErrorCategory::InsufficientConditioning, "no record in the slab event");
    return sum / static_cast<double>(cnt);
}

double event_fraction(const UnknownIndexDataset& data, const MatrixXd& basis, const Eigen::Ref<const VectorXd>& v,
                      double rho) {
    RowMatrix z = subspace_coords(data, basis);
    VectorXd c = coords_of(basis, v);
    Eigen::Index cnt = 0;
    double along;
    for (Eigen::Index i = 0; i < data.size(); ++i)
        if (in_event(z, i, c, rho * rho, along)) ++cnt;
    return static_cast<double>(cnt) / static_cast<double>(data.size());
}

void write_candidates(std::ostream& out, const GridResult& result) {
    const Eigen::Index d = result.spectral.basis.rows();
    for (Eigen::Index a = 0; a < d; ++a) out << 'v' << a + 1 << ',';
    out << "sigma_tilde,count,sign,cluster\n";
    for (const auto& c : result.signed_candidates) {
        const NetPoint& p = result.net.at(c.net_index);
        for (Eigen::Index a = 0; a < d; ++a) out << csv::format_double(p.v[a]) << ',';
        out << csv::format_double(c.scale) << ',' << c.count << ',' << c.sign << ',' << c.cluster << '\n';
    }
}

}  // namespace selfselect
