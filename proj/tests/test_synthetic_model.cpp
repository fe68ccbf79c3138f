#include "doctest.h"

#include "selfselect/error.hpp"
#include "selfselect/synthetic_model.hpp"

#include <cmath>
#include <numbers>

using namespace selfselect;

namespace {

WeightMatrix weights(std::initializer_list<std::initializer_list<double>> cols, double bound) {
    const auto k = static_cast<Eigen::Index>(cols.size());
    const auto d = static_cast<Eigen::Index>(cols.begin()->size());
    MatrixXd w(d, k);
    Eigen::Index j = 0;
    for (auto c : cols) {
        Eigen::Index l = 0;
        for (double v : c) w(l++, j) = v;
        ++j;
    }
    return WeightMatrix(w, bound);
}

double mean(const VectorXd& v) { return v.mean(); }

}  // namespace

TEST_CASE("known-index mean under zero weights is E[max of two normals]") {
    // E[max(Z1, Z2)] = 1/sqrt(pi)
    auto w = WeightMatrix::zeros(1, 2, 1.0);
    auto data = sample_known_index(w, 1.0, SelectionRule::argmax(2), CovariateSpec::gaussian(), 1000000, 11);
    CHECK(std::abs(mean(data.y) - 1.0 / std::sqrt(std::numbers::pi)) < 0.01);
}

TEST_CASE("unknown-index generator basics") {
    auto single = sample_unknown_index(WeightMatrix::zeros(1, 1, 1.0), 1000000, 5);
    CHECK(std::abs(mean(single.y)) < 0.01);
    auto pair = sample_unknown_index(WeightMatrix::zeros(1, 2, 1.0), 1000000, 6);
    CHECK(std::abs(mean(pair.y) - 1.0 / std::sqrt(std::numbers::pi)) < 0.01);
}

TEST_CASE("single model has no selection") {
    auto w = weights({{0.7, -0.2}}, 1.0);
    auto data = sample_known_index(w, 1.0, SelectionRule::argmax(1), CovariateSpec::gaussian(), 2000, 3);
    for (int j : data.winner) REQUIRE(j == 0);
}

TEST_CASE("noiseless limit selects the largest mean") {
    auto w = weights({{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.5}}, 2.0);
    auto rule = SelectionRule::argmax(3);
    auto data = sample_known_index(w, 1e-9, rule, CovariateSpec::gaussian(), 2000, 4);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        VectorXd means = w.columns.transpose() * data.x.row(i).transpose();
        Eigen::Index best;
        means.maxCoeff(&best);
        REQUIRE(data.winner[i] == best);
    }
}

TEST_CASE("regenerated latents reproduce winners and the max") {
    auto w = weights({{1.0, -0.5, 0.3}, {-0.4, 0.8, 0.1}, {0.2, 0.2, -0.9}}, 2.0);
    auto rule = SelectionRule::parse("monotone:bonus", 3);
    const std::uint64_t seed = 77;
    auto known = sample_known_index(w, 0.7, rule, CovariateSpec::gaussian(), 3000, seed);
    for (Eigen::Index i = 0; i < known.size(); ++i) {
        auto rec = regenerate_latents(w, 0.7, CovariateSpec::gaussian(), seed, i);
        REQUIRE(rule.select(rec.latents) == known.winner[i]);
        REQUIRE(rec.latents[known.winner[i]] == known.y[i]);
    }
    auto unknown = sample_unknown_index(w, 3000, seed);
    for (Eigen::Index i = 0; i < unknown.size(); ++i) {
        auto rec = regenerate_latents(w, 1.0, CovariateSpec::gaussian(), seed, i);
        for (Eigen::Index j = 0; j < 3; ++j) REQUIRE(unknown.y[i] >= rec.latents[j]);
    }
}

TEST_CASE("identical seeds give bit-identical datasets") {
    auto w = weights({{1.0, 0.0}, {0.0, 1.0}}, 1.0);
    auto rule = SelectionRule::argmax(2);
    auto a = sample_known_index(w, 1.0, rule, CovariateSpec::gaussian(), 500, 9);
    auto b = sample_known_index(w, 1.0, rule, CovariateSpec::gaussian(), 500, 9);
    auto c = sample_known_index(w, 1.0, rule, CovariateSpec::gaussian(), 500, 10);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.winner == b.winner);
    CHECK(a.y != c.y);
}

TEST_CASE("fixed design reports thickness") {
    RowMatrix x(4, 2);
    x << 2, 0, 0, 2, -2, 0, 0, -2;
    auto w = weights({{1.0, 0.0}, {0.0, 1.0}}, 1.0);
    auto data = sample_known_index(w, 1.0, SelectionRule::argmax(2), CovariateSpec::fixed(x), 0, 1);
    CHECK(data.size() == 4);
    REQUIRE(data.thickness.has_value());
    CHECK(*data.thickness == doctest::Approx(2.0));
    CHECK(data.x == x);
}

TEST_CASE("conditional marginal is biased except for k = 1") {
    // Two-sample comparison of mean residual y - w_j^T x against 0.
    const Eigen::Index n = 100000;
    auto w = weights({{1.0}, {-1.0}}, 1.0);
    auto data = sample_known_index(w, 1.0, SelectionRule::argmax(2), CovariateSpec::gaussian(), n, 21);
    double sum = 0.0, sq = 0.0;
    Eigen::Index cnt = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (data.winner[i] != 0) continue;
        double r = data.y[i] - w.columns(0, 0) * data.x(i, 0);
        sum += r;
        sq += r * r;
        ++cnt;
    }
    double m = sum / cnt, se = std::sqrt((sq / cnt - m * m) / cnt);
    CHECK(m > 10.0 * se);

    auto single = weights({{1.0}}, 1.0);
    auto plain = sample_known_index(single, 1.0, SelectionRule::argmax(1), CovariateSpec::gaussian(), n, 22);
    VectorXd resid = plain.y - plain.x.col(0) * 1.0;
    double m1 = resid.mean();
    double se1 = std::sqrt((resid.squaredNorm() / n - m1 * m1) / n);
    CHECK(std::abs(m1) < 4.0 * se1);
    CHECK(std::abs(resid.squaredNorm() / n - 1.0) < 0.02);
}

TEST_CASE("naive OLS recovers k = 1 and is biased for k = 2") {
    auto single = weights({{0.6, -0.8}}, 1.0);
    auto data1 = sample_known_index(single, 1.0, SelectionRule::argmax(1), CovariateSpec::gaussian(), 100000, 31);
    auto est1 = naive_ols(data1);
    CHECK((est1.columns - single.columns).norm() < 0.05);

    // With x ~ N(1, 1) the selected noise correlates with x; first run gave ~0.37.
    auto pair = weights({{1.0}, {-1.0}}, 1.0);
    auto design = CovariateSpec::fixed(shifted_gaussian_design(100000, 1, 1.0, 32));
    auto data2 = sample_known_index(pair, 1.0, SelectionRule::argmax(2), design, 0, 32);
    auto est2 = naive_ols(data2);
    CHECK((est2.columns - pair.columns).norm() > 0.1);
}

TEST_CASE("naive OLS is consistent for k = 2 with centered covariates") {
    // The selected-noise shift is even in x, so E[x e_j 1{j wins}] = 0.
    auto pair = weights({{1.0}, {-1.0}}, 1.0);
    auto data = sample_known_index(pair, 1.0, SelectionRule::argmax(2), CovariateSpec::gaussian(), 100000, 33);
    CHECK((naive_ols(data).columns - pair.columns).norm() < 0.03);
}

TEST_CASE("naive OLS rejects an empty subsample") {
    auto w = weights({{1.0}, {-1.0}}, 1.0);
    auto data = sample_known_index(w, 1.0, SelectionRule::argmax(2), CovariateSpec::gaussian(), 100, 1);
    for (auto& j : data.winner) j = 0;
    try {
        naive_ols(data);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::SingularDesign);
    }
}

TEST_CASE("separability predicate") {
    auto ortho = weights({{1.0, 0.0}, {0.0, 1.0}}, 1.0);
    CHECK(check_separability(ortho, 0.5, 1.0).pass);

    auto same = weights({{1.0, 0.0}, {1.0, 0.0}}, 1.0);
    auto s = check_separability(same, 0.5, 1.0);
    CHECK_FALSE(s.pass);
    REQUIRE(s.violating_pair.has_value());
    CHECK(s.violating_pair->first == 0);
    CHECK(s.violating_pair->second == 1);

    auto big = weights({{1.1, 0.0}, {0.0, 1.0}}, 1.0);
    auto b = check_separability(big, 0.5, 1.0);
    CHECK_FALSE(b.pass);
    CHECK(b.norm_violation == 0);
}
