#include "doctest.h"

#include "selfselect/error.hpp"
#include "selfselect/grid_estimator.hpp"
#include "selfselect/random.hpp"
#include "selfselect/synthetic_model.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace selfselect;

namespace {

MatrixXd axis_basis(Eigen::Index d, Eigen::Index k) { return MatrixXd::Identity(d, k); }

MatrixXd random_orthonormal(Eigen::Index d, Eigen::Index k, std::uint64_t seed) {
    Engine eng = make_engine(seed, "test-basis");
    std::normal_distribution<double> normal;
    MatrixXd a(d, k);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(eng);
    Eigen::HouseholderQR<MatrixXd> qr(a);
    return qr.householderQ() * MatrixXd::Identity(d, k);
}

// Largest distance from a random unit vector of span(basis) to its nearest net point.
double worst_cover_gap(const std::vector<NetPoint>& net, const MatrixXd& basis, int probes) {
    Engine eng = make_engine(5, "probe");
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (int t = 0; t < probes; ++t) {
        VectorXd c(basis.cols());
        for (Eigen::Index a = 0; a < c.size(); ++a) c[a] = normal(eng);
        VectorXd u = basis * c.normalized();
        double best = 1e9;
        for (const auto& p : net) best = std::min(best, (p.v - u).norm());
        worst = std::max(worst, best);
    }
    return worst;
}

bool closed_under_negation(const std::vector<NetPoint>& net) {
    for (const auto& p : net) {
        bool found = false;
        for (const auto& q : net)
            if ((p.v + q.v).norm() < 1e-12) found = true;
        if (!found) return false;
    }
    return true;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

SignedCandidate candidate(VectorXd w, Eigen::Index count, double scale) {
    SignedCandidate c;
    c.w = std::move(w);
    c.sign = 1;
    c.count = count;
    c.scale = scale;
    return c;
}

}  // namespace

TEST_CASE("grid config validation") {
    GridConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.l = 5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = GridConfig{};
    cfg.rho = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = GridConfig{};
    cfg.blocks = 2;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = GridConfig{};
    CHECK(cfg.dedup() == doctest::Approx(0.4));
    CHECK(cfg.neighborhood_radius() == doctest::Approx(0.15));
}

TEST_CASE("net construction") {
    GridConfig cfg;
    SUBCASE("k = 1 is two antipodal points") {
        MatrixXd u = random_orthonormal(4, 1, 1);
        auto net = build_net(u, cfg);
        REQUIRE(net.size() == 2);
        CHECK((net[0].v - u.col(0)).norm() < 1e-12);
        CHECK((net[1].v + u.col(0)).norm() < 1e-12);
    }
    SUBCASE("k = 2 circle covers") {
        cfg.gamma_net = 0.1;
        MatrixXd u = random_orthonormal(6, 2, 2);
        auto net = build_net(u, cfg);
        CHECK(net.size() == 64);
        for (const auto& p : net) CHECK(std::abs(p.v.norm() - 1.0) < 1e-10);
        CHECK(worst_cover_gap(net, u, 10000) <= 0.1);
        CHECK(closed_under_negation(net));
    }
    SUBCASE("coarse k = 2 net keeps the floor of four points") {
        cfg.gamma_net = 2.1;
        auto net = build_net(axis_basis(3, 2), cfg);
        CHECK(net.size() >= 4);
        CHECK(closed_under_negation(net));
    }
    SUBCASE("k = 3 rings cover") {
        cfg.gamma_net = 0.2;
        MatrixXd u = random_orthonormal(5, 3, 3);
        auto net = build_net(u, cfg);
        CHECK(worst_cover_gap(net, u, 10000) <= 0.2);
        CHECK(closed_under_negation(net));
    }
    SUBCASE("k = 4 greedy cover") {
        cfg.gamma_net = 0.5;
        MatrixXd u = axis_basis(4, 4);
        auto net = build_net(u, cfg);
        CHECK(worst_cover_gap(net, u, 10000) <= 0.5);
        CHECK(closed_under_negation(net));
        auto again = build_net(u, cfg);
        REQUIRE(again.size() == net.size());
        CHECK((again.back().v - net.back().v).norm() == 0.0);
    }
    SUBCASE("fine high-dimensional net exceeds the budget") {
        cfg.gamma_net = 0.01;
        try {
            build_net(axis_basis(6, 5), cfg);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.category() == ErrorCategory::BudgetExceeded);
        }
        cfg.max_net_size = 10;
        cfg.gamma_net = 0.05;
        CHECK_THROWS_AS(build_net(axis_basis(2, 2), cfg), Error);
    }
}

TEST_CASE("conditional moments of Gaussian responses") {
    GridConfig cfg;
    auto noise = sample_unknown_index(WeightMatrix::zeros(3, 1, 2.0), 100000, 11);
    MatrixXd u = axis_basis(3, 1);
    cfg.l = 2;
    auto m2 = conditional_moment(noise, u, u.col(0), std::nullopt, cfg);
    CHECK(m2.count == 100000);
    CHECK(std::abs(m2.value - 1.0) < 0.1);
    cfg.l = 4;
    CHECK(std::abs(conditional_moment(noise, u, u.col(0), std::nullopt, cfg).value - 3.0) < 0.3);

    MatrixXd w = MatrixXd::Constant(1, 1, 2.0);
    auto one = sample_unknown_index(WeightMatrix(w, 2.0), 100000, 12);
    cfg.l = 2;
    CHECK(std::abs(conditional_moment(one, axis_basis(1, 1), VectorXd::Ones(1), std::nullopt, cfg).value - 5.0) <
          0.2);
    // the shift removes the signal entirely
    CHECK(std::abs(conditional_moment(one, axis_basis(1, 1), VectorXd::Ones(1), 2.0, cfg).value - 1.0) < 0.05);
}

TEST_CASE("conditional moment needs enough records in the event") {
    GridConfig cfg;
    auto tiny = sample_unknown_index(WeightMatrix::zeros(2, 1, 2.0), 200, 3);
    try {
        conditional_moment(tiny, axis_basis(2, 1), VectorXd::Unit(2, 0), std::nullopt, cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::InsufficientConditioning);
    }
    CHECK_THROWS_AS(conditional_moment(tiny, axis_basis(2, 1), VectorXd::Unit(2, 1), std::nullopt, cfg), Error);
}

TEST_CASE("moment scale") {
    CHECK(moment_scale(15.0, 6).value == doctest::Approx(1.0));
    CHECK_FALSE(moment_scale(15.0, 6).clipped);
    CHECK(moment_scale(5.0, 2).value == doctest::Approx(std::sqrt(5.0)));
    auto low = moment_scale(7.5, 6);
    CHECK(low.value == 1.0);
    CHECK(low.clipped);
    CHECK_THROWS_AS(moment_scale(0.0, 4), Error);
    CHECK_THROWS_AS(moment_scale(-1.0, 4), Error);
}

TEST_CASE("candidate extraction") {
    GridConfig cfg;
    cfg.gamma_net = 0.1;
    auto net = build_net(axis_basis(2, 2), cfg);
    for (auto& p : net) {
        p.scored = true;
        p.scale = 1.0;
    }
    SUBCASE("single spike") {
        for (std::size_t i = 0; i < net.size(); ++i) net[i].scale = 2.0 - 0.01 * std::min(i, net.size() - i);
        auto s = extract_candidates(net, cfg);
        REQUIRE(s.members.size() == 1);
        CHECK(s.members[0] == 0);
        CHECK_FALSE(s.degenerate);
    }
    SUBCASE("flat score keeps every point") {
        auto s = extract_candidates(net, cfg);
        CHECK(s.members.size() == net.size());
        CHECK(s.degenerate);
    }
    SUBCASE("nothing scored") {
        for (auto& p : net) p.scored = false;
        try {
            extract_candidates(net, cfg);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.category() == ErrorCategory::NoCandidate);
        }
    }
}

TEST_CASE("sign disambiguation for a single model") {
    GridConfig cfg;
    cfg.l = 6;
    MatrixXd u = axis_basis(3, 1);
    std::vector<NetPoint> net(1);
    net[0].v = u.col(0);
    net[0].coords = VectorXd::Ones(1);
    net[0].scale = std::sqrt(5.0);
    net[0].scored = true;
    CandidateSet s;
    s.members = {0};
    for (auto rule : {SignRule::Threshold, SignRule::Paired}) {
        cfg.sign_rule = rule;
        CAPTURE(static_cast<int>(rule));
        MatrixXd w = MatrixXd::Zero(3, 1);
        w(0, 0) = 2.0;
        auto plus = disambiguate_signs(sample_unknown_index(WeightMatrix(w, 2.0), 100000, 21), u, net, s, cfg);
        REQUIRE(plus.size() == 1);
        CHECK(plus[0].sign == 1);
        CHECK(plus[0].plus_scale < 0.3);
        CHECK((plus[0].w - w.col(0)).norm() < 1e-12);

        auto minus = disambiguate_signs(sample_unknown_index(WeightMatrix(-w, 2.0), 100000, 22), u, net, s, cfg);
        CHECK(minus[0].sign == -1);
        CHECK(std::abs(minus[0].plus_scale - 4.0) < 0.3);
        CHECK((minus[0].w + w.col(0)).norm() < 1e-12);
    }
}

TEST_CASE("pruning") {
    VectorXd a = VectorXd::Unit(3, 0) * 1.5;
    VectorXd b = VectorXd::Unit(3, 1) * 1.5;
    SUBCASE("near duplicates merge to the best-supported member") {
        std::vector<SignedCandidate> t = {candidate(a, 100, 1.8), candidate(a + VectorXd::Constant(3, 0.05), 300, 1.7)};
        auto r = prune(t, 2, 0.4);
        REQUIRE(r.representatives.size() == 1);
        CHECK(r.representatives[0] == 1);
        CHECK(t[0].cluster == t[1].cluster);
        CHECK_FALSE(r.overcount);
    }
    SUBCASE("separated weights stay apart") {
        std::vector<SignedCandidate> t = {candidate(a, 100, 1.8), candidate(b, 100, 1.8)};
        auto r = prune(t, 2, 0.4);
        CHECK(r.estimates.cols() == 2);
    }
    SUBCASE("overcount is flagged and ambiguous entries ignored") {
        std::vector<SignedCandidate> t = {candidate(a, 1, 1.8), candidate(b, 1, 1.8), candidate(-a, 1, 1.2)};
        t.push_back(candidate(a, 1000, 3.0));
        t.back().sign = 0;
        auto r = prune(t, 2, 0.4);
        CHECK(r.estimates.cols() == 3);
        CHECK(r.overcount);
        CHECK(t.back().cluster == -1);
    }
    SUBCASE("empty input") {
        std::vector<SignedCandidate> t;
        CHECK_THROWS_AS(prune(t, 1, 0.4), Error);
    }
}

TEST_CASE("event probability matches the chi-squared slab mass") {
    boost::math::chi_squared chi1(1.0), chi2(2.0);
    const double rho = 0.3;
    for (int k : {2, 3}) {
        auto data = sample_unknown_index(random_weights(6, k, 1.5, 2.0, 40 + k), 100000, 41);
        MatrixXd u = random_orthonormal(6, k, 42);
        double mass = boost::math::cdf(k == 2 ? chi1 : chi2, rho * rho);
        for (int j = 0; j < k; ++j) {
            double p = event_fraction(data, u, u.col(j), rho);
            CAPTURE(k);
            CHECK(p >= 0.9 * mass);
            CHECK(std::abs(p - mass) < 0.01);
        }
    }
    CHECK(boost::math::cdf(chi1, 0.09) == doctest::Approx(0.2358).epsilon(1e-3));
}

TEST_CASE("identifiability diagnostic") {
    GridConfig cfg;
    SUBCASE("no signal gives scale one") {
        auto data = sample_unknown_index(WeightMatrix::zeros(2, 1, 1.0), 100000, 50);
        for (const auto& row : identifiability_diagnostic(data, axis_basis(2, 1), VectorXd::Unit(2, 0), {2, 4, 8}, cfg))
            CHECK(std::abs(row.scale - 1.0) < 0.05);
    }
    SUBCASE("single model reaches sqrt(5) at l = 8") {
        MatrixXd w = MatrixXd::Zero(2, 1);
        w(0, 0) = 2.0;
        auto data = sample_unknown_index(WeightMatrix(w, 2.0), 100000, 51);
        auto rows = identifiability_diagnostic(data, axis_basis(2, 1), VectorXd::Unit(2, 0), {8}, cfg);
        CHECK(rows[0].count == 100000);
        CHECK(std::abs(rows[0].scale / std::sqrt(5.0) - 1.0) < 0.1);
    }
    SUBCASE("two models: scale rises toward the target with l") {
        MatrixXd w = MatrixXd::Zero(3, 2);
        w(0, 0) = 2.0;
        w(1, 1) = 2.0;
        std::vector<double> s2, s4, s8;
        for (int seed = 0; seed < 10; ++seed) {
            auto data = sample_unknown_index(WeightMatrix(w, 2.0), 100000, 60 + seed);
            auto rows = identifiability_diagnostic(data, axis_basis(3, 2), VectorXd::Unit(3, 0), {2, 4, 8}, cfg);
            s2.push_back(rows[0].scale);
            s4.push_back(rows[1].scale);
            s8.push_back(rows[2].scale);
        }
        CHECK(median_of(s2) < median_of(s4));
        CHECK(median_of(s4) < median_of(s8));
        CHECK(median_of(s8) < std::sqrt(5.0) * 1.1);
    }
}

TEST_CASE("end-to-end recovery for two models") {
    const Eigen::Index n = 1000000;
    MatrixXd w = random_orthonormal(10, 2, 90);
    w.col(0) *= 1.2;
    w.col(1) *= 1.8;
    const std::uint64_t seed = 91;
    auto data = sample_unknown_index(WeightMatrix(w, 2.0), n, seed);
    GridConfig cfg;
    auto r = grid_estimate(data, 2, cfg);

    CHECK(r.split_sizes[0] + r.split_sizes[1] + r.split_sizes[2] == n);
    CHECK(r.unscored_points == 0);
    CHECK(closed_under_negation(r.net));
    REQUIRE(r.estimates.cols() == 2);
    double straight = std::max((r.estimates.col(0) - w.col(0)).norm(), (r.estimates.col(1) - w.col(1)).norm());
    double swapped = std::max((r.estimates.col(1) - w.col(0)).norm(), (r.estimates.col(0) - w.col(1)).norm());
    CHECK(std::min(straight, swapped) <= 0.35);

    // every w_j has a candidate nearby; the scale is nearly flat around the
    // weaker model at l = 6, so its candidates can spread further (up to ~0.39
    // rad over 10 seeds)
    std::vector<bool> hit(2, false);
    for (std::size_t idx : r.candidates.members) {
        const VectorXd& v = r.net[idx].v;
        double angle = 10.0;
        for (int j = 0; j < 2; ++j) {
            double a = std::acos(std::min(std::abs(v.dot(w.col(j))) / w.col(j).norm(), 1.0));
            if (a <= 0.2) hit[j] = true;
            angle = std::min(angle, a);
        }
        CHECK(angle <= 0.45);
    }
    CHECK(hit[0]);
    CHECK(hit[1]);

    // moment sandwich against regenerated latents on the scoring split
    const Eigen::Index lo = r.split_sizes[0], m = r.split_sizes[1];
    MatrixXd latents(m, 2);
    for (Eigen::Index i = 0; i < m; ++i)
        latents.row(i) = regenerate_latents(WeightMatrix(w, 2.0), 1.0, CovariateSpec::gaussian(), seed, lo + i)
                             .latents.transpose();
    auto scoring = data.slice(lo, m);
    for (std::size_t i = 0; i < r.net.size(); i += 3) {
        const auto& p = r.net[i];
        double psi = component_conditional_moments(scoring, latents, r.spectral.basis, p.v, cfg).maxCoeff();
        CHECK(p.moment >= psi / 8.0);
        CHECK(p.moment <= 2.0 * 2.0 * psi);
    }

    std::ostringstream csv;
    write_candidates(csv, r);
    CHECK(csv.str().rfind("v1,v2,v3,v4,v5,v6,v7,v8,v9,v10,sigma_tilde,count,sign,cluster\n", 0) == 0);
}
