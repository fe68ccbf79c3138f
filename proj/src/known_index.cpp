#include "selfselect/known_index.hpp"

#include "selfselect/error.hpp"
#include "selfselect/normal_math.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace selfselect {

namespace {

void require_k2(int k) {
    if (k != 2) fail(ErrorCategory::Unsupported, "closed-form objective exists only for k = 2 with the max rule");
}

double mean_objective(const MatrixXd& w, const KnownIndexDataset& data, double sigma) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i)
        total += record_objective_k2(w, data.x.row(i).transpose(), data.y[i], data.winner[i], sigma);
    return total / static_cast<double>(data.size());
}

// Central-difference Hessian of a scalar function of a flat parameter vector.
template <class F>
MatrixXd fd_hessian(F&& f, const VectorXd& p, double h) {
    const Eigen::Index m = p.size();
    MatrixXd hess(m, m);
    VectorXd q = p;
    const double f0 = f(q);
    for (Eigen::Index a = 0; a < m; ++a) {
        q[a] = p[a] + h;
        double fp = f(q);
        q[a] = p[a] - h;
        double fm = f(q);
        q[a] = p[a];
        hess(a, a) = (fp - 2.0 * f0 + fm) / (h * h);
        for (Eigen::Index b = a + 1; b < m; ++b) {
            double s = 0.0;
            for (int sa : {1, -1})
                for (int sb : {1, -1}) {
                    q[a] = p[a] + sa * h;
                    q[b] = p[b] + sb * h;
                    s += sa * sb * f(q);
                }
            q[a] = p[a];
            q[b] = p[b];
            hess(a, b) = hess(b, a) = s / (4.0 * h * h);
        }
    }
    return hess;
}

}  // namespace

void PSGDConfig::validate() const {
    if (iterations < 0) fail(ErrorCategory::InvalidInput, "psgd: iterations must be >= 0");
    if (!(bound > 0.0)) fail(ErrorCategory::InvalidInput, "psgd: projection bound must be positive");
    if (!std::isfinite(lambda)) fail(ErrorCategory::InvalidInput, "psgd: lambda must be finite");
    langevin.validate();
}

double record_objective_k2(const MatrixXd& w, const Eigen::Ref<const VectorXd>& x, double y, int winner,
                           double sigma) {
    require_k2(static_cast<int>(w.cols()));
    const int other = 1 - winner;
    double r = (y - w.col(winner).dot(x)) / sigma;
    double alpha = (y - w.col(other).dot(x)) / sigma;
    return normal::log_pdf(r) - std::log(sigma) + normal::log_cdf(alpha);
}

MatrixXd record_gradient_k2(const MatrixXd& w, const Eigen::Ref<const VectorXd>& x, double y, int winner,
                            double sigma) {
    require_k2(static_cast<int>(w.cols()));
    const int other = 1 - winner;
    MatrixXd g(w.rows(), 2);
    g.col(winner) = (y - w.col(winner).dot(x)) / (sigma * sigma) * x;
    double alpha = (y - w.col(other).dot(x)) / sigma;
    g.col(other) = -normal::inverse_mills(alpha) / sigma * x;
    return g;
}

double objective_k2_closed_form(const WeightMatrix& w, const KnownIndexDataset& data, double sigma) {
    require_k2(data.models);
    if (data.size() == 0) fail(ErrorCategory::InvalidInput, "objective needs at least one record");
    if (w.dim() != data.dim() || w.models() != 2) fail(ErrorCategory::InvalidInput, "weights do not match data");
    return mean_objective(w.columns, data, sigma);
}

MatrixXd objective_k2_gradient(const WeightMatrix& w, const KnownIndexDataset& data, double sigma) {
    require_k2(data.models);
    MatrixXd g = MatrixXd::Zero(w.dim(), 2);
    for (Eigen::Index i = 0; i < data.size(); ++i)
        g += record_gradient_k2(w.columns, data.x.row(i).transpose(), data.y[i], data.winner[i], sigma);
    return g / static_cast<double>(data.size());
}

GradientSample estimate_gradient(const MatrixXd& w, const Eigen::Ref<const VectorXd>& x, double y, int winner,
                                 double sigma, const TruncatedGaussianSampler& sampler, Engine& eng) {
    const auto k = static_cast<int>(w.cols());
    if (sampler.rule().k() != k) fail(ErrorCategory::InvalidInput, "sampler rule k differs from weights");
    GradientSample out;
    out.g.resize(w.rows(), k);
    const double inv_var = 1.0 / (sigma * sigma);
    VectorXd means = w.transpose() * x;
    out.g.col(winner) = (y - means[winner]) * inv_var * x;
    if (k == 1) return out;

    SlicedDraw draw = sampler.draw(drop_index(means, winner), sigma, winner, y, eng);
    out.route = draw.route;
    for (int j = 0, c = 0; j < k; ++j) {
        if (j == winner) continue;
        out.g.col(j) = (draw.z[c++] - means[j]) * inv_var * x;
    }
    return out;
}

double empirical_survival(const KnownIndexDataset& data) {
    std::vector<Eigen::Index> counts(data.models, 0);
    for (int j : data.winner) ++counts[j];
    auto least = *std::min_element(counts.begin(), counts.end());
    return data.models * static_cast<double>(least) / static_cast<double>(data.size());
}

PSGDResult psgd_estimate(const KnownIndexDataset& data, const SelectionRule& rule, double sigma,
                         const PSGDConfig& cfg) {
    cfg.validate();
    if (!(sigma > 0.0)) fail(ErrorCategory::InvalidInput, "psgd: sigma must be positive");
    if (rule.k() != data.models) fail(ErrorCategory::InvalidInput, "psgd: rule k differs from the data");
    if (cfg.iterations > data.size())
        fail(ErrorCategory::InvalidInput, "psgd: need at least as many records as iterations (" +
                                              std::to_string(data.size()) + " < " +
                                              std::to_string(cfg.iterations) + ")");
    const Eigen::Index d = data.dim();
    const int k = data.models;

    PSGDResult res;
    res.estimate = WeightMatrix::zeros(d, k, cfg.bound);
    res.alpha_est = empirical_survival(data);
    res.lambda = cfg.lambda > 0.0 ? cfg.lambda : res.alpha_est / (sigma * sigma * k);
    if (cfg.iterations == 0) return res;
    if (!(res.lambda > 0.0))
        fail(ErrorCategory::InvalidInput, "psgd: some model never wins, so the default lambda is zero");

    std::vector<Eigen::Index> order(data.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Engine shuffle_eng = make_engine(cfg.seed, "psgd-order");
    std::shuffle(order.begin(), order.end(), shuffle_eng);

    TruncatedGaussianSampler sampler(rule, cfg.langevin, cfg.rejection_threshold);
    const auto allowed_failures = static_cast<Eigen::Index>(cfg.max_failure_fraction * cfg.iterations);
    MatrixXd w = MatrixXd::Zero(d, k);
    MatrixXd sum = MatrixXd::Zero(d, k);
    for (Eigen::Index t = 1; t <= cfg.iterations; ++t) {
        const Eigen::Index i = order[t - 1];
        Engine eng = make_engine(cfg.seed, "sampler", static_cast<std::uint64_t>(t));
        try {
            GradientSample g = estimate_gradient(w, data.x.row(i).transpose(), data.y[i], data.winner[i], sigma,
                                                 sampler, eng);
            if (g.route == SamplerRoute::Rejection) ++res.rejection_draws;
            if (g.route == SamplerRoute::Langevin) ++res.langevin_draws;
            w += g.g / (res.lambda * static_cast<double>(t));
            for (int j = 0; j < k; ++j) {
                double norm = w.col(j).norm();
                if (norm > cfg.bound) w.col(j) *= cfg.bound / norm;
            }
        } catch (const Error& e) {
            if (e.category() != ErrorCategory::LowMass && e.category() != ErrorCategory::InfeasibleRegion &&
                e.category() != ErrorCategory::SamplerFailure)
                throw;
            if (++res.sampler_failures > allowed_failures)
                fail(ErrorCategory::SamplerFailure, "psgd: " + std::to_string(res.sampler_failures) +
                                                        " sampler failures in " + std::to_string(t) +
                                                        " steps; last: " + e.what());
        }
        for (int j = 0; j < k; ++j) res.max_iterate_norm = std::max(res.max_iterate_norm, w.col(j).norm());
        sum += w;
    }
    res.iterations = cfg.iterations;
    res.estimate.columns = sum / static_cast<double>(cfg.iterations);
    return res;
}

ConcavityReport numeric_concavity_check(const std::vector<WeightMatrix>& points, const KnownIndexDataset& data,
                                        double sigma, double step) {
    require_k2(data.models);
    const Eigen::Index d = data.dim();
    MatrixXd gram = MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < data.size(); ++i) gram += data.x.row(i).transpose() * data.x.row(i);
    const MatrixXd expected_block = -gram / (sigma * sigma * static_cast<double>(data.size()));

    ConcavityReport rep;
    for (const auto& w : points) {
        if (w.dim() != d || w.models() != 2) fail(ErrorCategory::InvalidInput, "concavity check: bad weights");
        VectorXd p = Eigen::Map<const VectorXd>(w.columns.data(), 2 * d);
        auto full = [&](const VectorXd& q) {
            return mean_objective(Eigen::Map<const MatrixXd>(q.data(), d, 2), data, sigma);
        };
        MatrixXd hess = fd_hessian(full, p, step);
        double top = Eigen::SelfAdjointEigenSolver<MatrixXd>(hess, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();

        // Perturb only the winning column of each record.
        auto winner_only = [&](const VectorXd& delta) {
            double total = 0.0;
            MatrixXd shifted(d, 2);
            for (Eigen::Index i = 0; i < data.size(); ++i) {
                shifted = w.columns;
                shifted.col(data.winner[i]) += delta;
                total += record_objective_k2(shifted, data.x.row(i).transpose(), data.y[i], data.winner[i], sigma);
            }
            return total / static_cast<double>(data.size());
        };
        MatrixXd block = fd_hessian(winner_only, VectorXd::Zero(d), step);
        double gap = (block - expected_block).cwiseAbs().maxCoeff();

        rep.max_eigenvalue.push_back(top);
        rep.winner_block_error.push_back(gap);
        rep.worst_eigenvalue = std::max(rep.worst_eigenvalue, top);
        rep.worst_block_error = std::max(rep.worst_block_error, gap);
    }
    return rep;
}

}  // namespace selfselect
