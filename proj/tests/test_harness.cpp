#include "doctest.h"

#include "selfselect/csv_io.hpp"
#include "selfselect/error.hpp"
#include "selfselect/harness.hpp"
#include "selfselect/matching.hpp"
#include "selfselect/random.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

using namespace selfselect;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("selfselect-test-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

ErrorCategory category_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.category();
    }
    FAIL("expected an error");
    return ErrorCategory::InvalidInput;
}

int run_cli(const std::string& args) {
    const char* bin = std::getenv("SELFSELECT_BIN");
    REQUIRE(bin != nullptr);
    int status = std::system((std::string(bin) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("mode names") {
    for (Mode m : {Mode::Generate, Mode::EstimateKnown, Mode::EstimateUnknownGrid, Mode::EstimateUnknownK2,
                   Mode::Benchmark})
        CHECK(parse_mode(mode_name(m)) == m);
    CHECK(category_of([] { parse_mode("estimate"); }) == ErrorCategory::Validation);
}

TEST_CASE("config loading") {
    auto dir = scratch("config");
    SUBCASE("defaults and overrides") {
        auto path = write_file(dir / "a.ini",
                               "[run]\nseed = 12\nout = results\n[model]\nd = 3\nk = 2\nbound = 3\n"
                               "[data]\nn = 500\ninput = data.csv\n[grid]\nsign_rule = threshold\n"
                               "[langevin]\nboundary = reflect\n[psgd]\niterations = 100\n");
        write_file(dir / "data.csv", "x1,x2,x3,y,jstar\n");
        auto cfg = load_config(path, Mode::EstimateKnown);
        CHECK(cfg.seed == 12);
        CHECK(cfg.out == dir / "results");
        CHECK(cfg.model.d == 3);
        CHECK(cfg.data.n == 500);
        CHECK(*cfg.data.input == dir / "data.csv");
        CHECK(cfg.psgd.bound == 3.0);
        CHECK(cfg.grid.bound == 3.0);
        CHECK(cfg.grid.delta == cfg.model.delta);
        CHECK(cfg.grid.sign_rule == SignRule::Threshold);
        CHECK(cfg.psgd.langevin.boundary == LangevinBoundary::Reflect);
        CHECK(*cfg.psgd_iterations == 100);
        CHECK_NOTHROW(cfg.validate());
    }
    SUBCASE("unset iterations mean one pass") {
        auto cfg = load_config(write_file(dir / "b.ini", "[model]\nd = 2\n"), Mode::EstimateKnown);
        CHECK_FALSE(cfg.psgd_iterations.has_value());
    }
    SUBCASE("errors") {
        CHECK(category_of([&] { load_config(dir / "missing.ini", Mode::Generate); }) == ErrorCategory::Io);
        auto typo = write_file(dir / "c.ini", "[model]\ndims = 2\n");
        CHECK(category_of([&] { load_config(typo, Mode::Generate); }) == ErrorCategory::Validation);
        auto section = write_file(dir / "d.ini", "[modle]\nd = 2\n");
        CHECK(category_of([&] { load_config(section, Mode::Generate); }) == ErrorCategory::Validation);
        auto value = write_file(dir / "e.ini", "[data]\nn = many\n");
        CHECK(category_of([&] { load_config(value, Mode::Generate); }) == ErrorCategory::Validation);
        auto negative = write_file(dir / "f.ini", "[run]\nseed = -3\n");
        CHECK(category_of([&] { load_config(negative, Mode::Generate); }) == ErrorCategory::Validation);
        auto rule = write_file(dir / "g.ini", "[model]\nrule = argmedian\n");
        auto cfg = load_config(rule, Mode::Generate);
        CHECK(category_of([&] { cfg.validate(); }) == ErrorCategory::Validation);
        auto input = write_file(dir / "h.ini", "[data]\ninput = nowhere.csv\n");
        auto cfg2 = load_config(input, Mode::EstimateKnown);
        CHECK(category_of([&] { cfg2.validate(); }) == ErrorCategory::Io);
    }
}

TEST_CASE("weights and covariates") {
    ModelSpec m;
    m.d = 2;
    m.k = 2;
    m.weights = "1, 2, 3, 4";
    MatrixXd w = *resolve_weights(m, 0);
    CHECK(w(0, 0) == 1.0);
    CHECK(w(1, 0) == 2.0);
    CHECK(w(0, 1) == 3.0);
    m.weights = "1, 2, 3";
    CHECK(category_of([&] { resolve_weights(m, 0); }) == ErrorCategory::Validation);
    m.weights = "random";
    m.weight_norm = 1.5;
    MatrixXd r = *resolve_weights(m, 4);
    CHECK(r.col(0).norm() == doctest::Approx(1.5));
    CHECK(*resolve_weights(m, 4) == r);
    CHECK(*resolve_weights(m, 5) != r);

    CHECK(make_covariates("gaussian", 10, 2, 1).mode == CovariateMode::StandardGaussian);
    auto shifted = make_covariates("shifted:1.5", 20000, 2, 1);
    CHECK(shifted.design.rows() == 20000);
    CHECK(std::abs(shifted.design.col(1).mean() - 1.5) < 0.05);
    auto intercept = make_covariates("intercept", 100, 3, 1);
    CHECK(intercept.design.col(0).isOnes());
    CHECK(category_of([] { make_covariates("uniform", 10, 2, 1); }) == ErrorCategory::Validation);
}

TEST_CASE("column matching") {
    Engine eng = make_engine(3, "matching");
    std::normal_distribution<double> normal;
    SUBCASE("permuted truth") {
        MatrixXd truth(3, 3);
        for (Eigen::Index i = 0; i < truth.size(); ++i) truth.data()[i] = normal(eng);
        std::vector<int> perm = {2, 0, 1};
        MatrixXd est(3, 3);
        for (int j = 0; j < 3; ++j) est.col(perm[j]) = truth.col(j);
        auto m = match_columns(est, truth);
        CHECK(m.permutation == perm);
        CHECK(m.total == 0.0);
    }
    SUBCASE("single column") {
        MatrixXd a = MatrixXd::Ones(2, 1);
        auto m = match_columns(a * 2.0, a);
        CHECK(m.permutation == std::vector<int>{0});
        CHECK(m.max_error == doctest::Approx(std::sqrt(2.0)));
    }
    SUBCASE("noisy estimate beats every assignment") {
        MatrixXd truth(4, 4), est(4, 4);
        for (Eigen::Index i = 0; i < truth.size(); ++i) truth.data()[i] = normal(eng);
        est = truth.rowwise().reverse();
        for (Eigen::Index i = 0; i < est.size(); ++i) est.data()[i] += 0.1 * normal(eng);
        auto m = match_columns(est, truth);
        std::vector<int> p(4);
        std::iota(p.begin(), p.end(), 0);
        do {
            double total = 0.0;
            for (int j = 0; j < 4; ++j) total += (est.col(p[j]) - truth.col(j)).norm();
            CHECK(m.total <= total + 1e-12);
        } while (std::next_permutation(p.begin(), p.end()));
        CHECK(m.permutation == std::vector<int>{3, 2, 1, 0});
        CHECK(m.total <= 0.1 * std::sqrt(16.0) * 3.0);
    }
    CHECK_THROWS_AS(match_columns(MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 3)), Error);
}

TEST_CASE("generate mode and round trip") {
    auto dir = scratch("generate");
    auto path = write_file(dir / "gen.ini", "[run]\nseed = 7\n[model]\nd = 2\nk = 2\n[data]\nn = 1000\n");
    auto cfg = load_config(path, Mode::Generate);
    cfg.out = dir / "out";
    run_experiment(cfg);
    std::string text = slurp(cfg.out / "dataset.csv");
    CHECK(text.rfind("x1,x2,y,jstar\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1001);

    auto data = csv::read_known(cfg.out / "dataset.csv");
    csv::write_known(dir / "again.csv", data);
    CHECK(slurp(dir / "again.csv") == text);
    CHECK(fs::exists(cfg.out / "weights.csv"));
    CHECK(fs::exists(cfg.out / "report.json"));

    // same seed, same bytes
    cfg.out = dir / "out2";
    run_experiment(cfg);
    CHECK(slurp(cfg.out / "dataset.csv") == text);
    cfg.out = dir / "out3";
    cfg.seed = 8;
    run_experiment(cfg);
    CHECK(slurp(cfg.out / "dataset.csv") != text);

    cfg.data.index = "unknown";
    cfg.out = dir / "out4";
    run_experiment(cfg);
    CHECK(slurp(cfg.out / "dataset.csv").rfind("x1,x2,y\n", 0) == 0);
}

TEST_CASE("known-index estimation reduces to least squares for one model") {
    auto dir = scratch("known");
    auto path = write_file(dir / "k1.ini", "[run]\nseed = 2\n[model]\nd = 3\nk = 1\n[data]\nn = 20000\n");
    auto cfg = load_config(path, Mode::EstimateKnown);
    cfg.out = dir / "out";
    auto report = run_experiment(cfg);
    REQUIRE(report.methods.size() == 2);
    CHECK(report.methods[0].name == "psgd");
    CHECK(report.methods[0].matching->max_error <= 0.05);
    CHECK(std::abs(report.methods[0].matching->max_error - report.methods[1].matching->max_error) < 0.05);

    // determinism of the report
    cfg.out = dir / "again";
    auto second = run_experiment(cfg);
    CHECK(to_json(report, false) == to_json(second, false));

    // estimating from a file without weights has no truth
    cfg.data.input = dir / "data.csv";
    csv::write_known(*cfg.data.input, sample_known_index(WeightMatrix(MatrixXd::Ones(3, 1), 2.0), 1.0,
                                                         SelectionRule::argmax(1), CovariateSpec::gaussian(),
                                                         5000, 1));
    cfg.out = dir / "from-file";
    auto from_file = run_experiment(cfg);
    CHECK_FALSE(from_file.truth.has_value());
    CHECK_FALSE(from_file.methods[0].matching.has_value());
    CHECK((from_file.methods[0].estimate - MatrixXd::Ones(3, 1)).norm() < 0.1);
}

TEST_CASE("benchmark reproduces the selection bias") {
    auto dir = scratch("benchmark");
    auto path = write_file(dir / "fig.ini",
                           "[run]\nseed = 3\n[model]\nd = 1\nk = 2\nweights = 1, -1\n"
                           "[data]\nn = 20000\ncovariates = shifted:1\n[benchmark]\nseeds = 10\n");
    auto cfg = load_config(path, Mode::Benchmark);
    cfg.out = dir / "out";
    auto report = run_experiment(cfg);
    std::string text = slurp(cfg.out / "benchmark.csv");
    CHECK(text.rfind("method,seed,error\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 21);
    double psgd = report.diagnostics["median_error"]["psgd"];
    double naive = report.diagnostics["median_error"]["naive"];
    CHECK(psgd < naive);
}

TEST_CASE("unknown-index modes write their artifacts") {
    auto dir = scratch("unknown");
    auto path = write_file(dir / "u.ini",
                           "[run]\nseed = 4\n[model]\nd = 3\nk = 2\nweights = 1.5, 0, 0, 0, -1.2, 0\ndelta = 0.8\n"
                           "[data]\nn = 300000\n");
    auto cfg = load_config(path, Mode::EstimateUnknownGrid);
    cfg.out = dir / "grid";
    auto grid = run_experiment(cfg);
    CHECK(fs::exists(cfg.out / "candidates.csv"));
    CHECK(grid.methods[0].matching->max_error < 0.5);

    cfg.mode = Mode::EstimateUnknownK2;
    cfg.out = dir / "k2";
    auto k2 = run_experiment(cfg);
    CHECK(fs::exists(cfg.out / "surface.csv"));
    CHECK(k2.methods[0].matching->max_error < 0.25);

    cfg.model.k = 3;
    cfg.model.weights = "random";
    CHECK(category_of([&] { run_experiment(cfg); }) == ErrorCategory::Unsupported);
}

TEST_CASE("command line exit codes") {
    auto dir = scratch("cli");
    auto good = write_file(dir / "gen.ini", "[run]\nseed = 7\n[model]\nd = 2\nk = 2\n[data]\nn = 100\n");
    CHECK(run_cli("generate --config " + good.string() + " --out " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "dataset.csv"));
    CHECK(run_cli("generate --config " + good.string() + " --out " + (dir / "seeded").string() + " --seed 9") == 0);
    CHECK(slurp(dir / "out" / "dataset.csv") != slurp(dir / "seeded" / "dataset.csv"));

    CHECK(run_cli("generate --config " + (dir / "none.ini").string()) == exit_code(ErrorCategory::Io));
    CHECK(run_cli("explode --config " + good.string()) == exit_code(ErrorCategory::Validation));
    CHECK(run_cli("generate") == exit_code(ErrorCategory::Validation));
    auto typo = write_file(dir / "typo.ini", "[model]\nkk = 2\n");
    CHECK(run_cli("generate --config " + typo.string()) == exit_code(ErrorCategory::Validation));
    auto k3 = write_file(dir / "k3.ini", "[model]\nd = 3\nk = 3\n[data]\nn = 100\n");
    CHECK(run_cli("estimate-unknown-k2 --config " + k3.string() + " --out " + (dir / "k3").string()) ==
          exit_code(ErrorCategory::Unsupported));
}
