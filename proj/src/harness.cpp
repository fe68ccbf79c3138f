#include "selfselect/harness.hpp"

#include "selfselect/csv_io.hpp"
#include "selfselect/error.hpp"
#include "selfselect/random.hpp"
#include "selfselect/spectral.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace selfselect {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>> kSchema = {
    {"run", {"seed", "out"}},
    {"model", {"d", "k", "sigma", "bound", "delta", "rule", "weights", "weight_norm"}},
    {"data", {"n", "index", "covariates", "input"}},
    {"psgd", {"iterations", "lambda", "bound", "rejection_threshold", "max_failure_fraction"}},
    {"langevin", {"steps", "gamma", "radius", "boundary"}},
    {"grid", {"l", "rho", "gamma_net", "blocks", "delta", "bound", "dedup_radius", "neighborhood", "sign_rule",
              "max_net_size"}},
    {"k2", {"epsilon", "delta", "bound", "exclusion", "fail_prob", "max_grid"}},
    {"benchmark", {"seeds"}},
};

class IniReader {
public:
    explicit IniReader(pt::ptree tree) : tree_(std::move(tree)) {}

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        auto v = tree_.get_optional<std::string>(pt::ptree::path_type(section + "/" + key, '/'));
        if (!v) return std::nullopt;
        std::string s = *v;
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
        return s;
    }

    bool read(const std::string& section, const std::string& key, double& target) const {
        auto s = raw(section, key);
        if (!s) return false;
        std::size_t used = 0;
        try {
            target = std::stod(*s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s->size()) bad(section, key, *s);
        return true;
    }

    template <class Int>
    bool read_int(const std::string& section, const std::string& key, Int& target) const {
        auto s = raw(section, key);
        if (!s) return false;
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(*s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s->size() || v < 0) bad(section, key, *s);
        target = static_cast<Int>(v);
        return true;
    }

    bool read_u64(const std::string& section, const std::string& key, std::uint64_t& target) const {
        auto s = raw(section, key);
        if (!s) return false;
        std::size_t used = 0;
        try {
            if (!s->empty() && s->front() == '-') throw std::invalid_argument("negative");
            target = std::stoull(*s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s->size()) bad(section, key, *s);
        return true;
    }

    bool read(const std::string& section, const std::string& key, std::string& target) const {
        auto s = raw(section, key);
        if (!s) return false;
        target = *s;
        return true;
    }

    [[noreturn]] static void bad(const std::string& section, const std::string& key, const std::string& value) {
        fail(ErrorCategory::Validation, "config [" + section + "] " + key + ": bad value '" + value + "'");
    }

private:
    pt::ptree tree_;
};

void check_schema(const pt::ptree& tree) {
    for (const auto& [section, body] : tree) {
        auto it = kSchema.find(section);
        if (it == kSchema.end()) {
            if (body.empty())
                fail(ErrorCategory::Validation, "config key '" + section + "' must sit inside a section");
            fail(ErrorCategory::Validation, "config: unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body)
            if (!it->second.count(key))
                fail(ErrorCategory::Validation, "config: unknown key '" + key + "' in [" + section + "]");
    }
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < item.size() && item[used] == ' ') ++used;
        if (used == 0 || used != item.size()) fail(ErrorCategory::Validation, "bad weight value '" + item + "'");
        out.push_back(v);
    }
    return out;
}

ColumnMatching identity_matching(const MatrixXd& estimate, const MatrixXd& truth) {
    ColumnMatching m;
    const auto k = static_cast<int>(truth.cols());
    m.errors.resize(k);
    for (int j = 0; j < k; ++j) {
        m.permutation.push_back(j);
        m.errors[j] = (estimate.col(j) - truth.col(j)).norm();
    }
    m.total = m.errors.sum();
    m.max_error = k > 0 ? m.errors.maxCoeff() : 0.0;
    return m;
}

std::vector<double> to_vector(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void warn_separability(EstimationReport& report, const MatrixXd& truth, const ModelSpec& model) {
    auto check = check_separability(WeightMatrix(truth, model.bound), model.delta, model.bound);
    if (!check.pass) report.warnings.push_back("truth weights violate the separability margin " +
                                               std::to_string(model.delta) + " or bound " +
                                               std::to_string(model.bound));
}

MatrixXd pad_columns(const MatrixXd& w, Eigen::Index k) {
    MatrixXd out = MatrixXd::Zero(w.rows(), k);
    out.leftCols(std::min(k, w.cols())) = w.leftCols(std::min(k, w.cols()));
    return out;
}

KnownIndexDataset generate_known(const ExperimentConfig& cfg, const MatrixXd& w, std::uint64_t seed) {
    auto rule = SelectionRule::parse(cfg.model.rule, cfg.model.k);
    auto cov = make_covariates(cfg.data.covariates, cfg.data.n, cfg.model.d, seed);
    return sample_known_index(WeightMatrix(w, cfg.model.bound), cfg.model.sigma, rule, cov, cfg.data.n,
                              substream_seed(seed, "data"));
}

UnknownIndexDataset generate_unknown(const ExperimentConfig& cfg, const MatrixXd& w, std::uint64_t seed) {
    if (cfg.model.rule != "argmax" || cfg.model.sigma != 1.0 || cfg.data.covariates != "gaussian")
        fail(ErrorCategory::Unsupported,
             "unknown-index data is generated only for the max rule with sigma = 1 and gaussian covariates");
    return sample_unknown_index(WeightMatrix(w, cfg.model.bound), cfg.data.n, substream_seed(seed, "data"));
}

MatrixXd require_weights(const ModelSpec& model, std::uint64_t seed) {
    auto w = resolve_weights(model, seed);
    if (!w) fail(ErrorCategory::Validation, "no weights available to generate data");
    return *w;
}

// Truth is known when the data is generated here or the weights are given explicitly.
std::optional<MatrixXd> truth_for(const ExperimentConfig& cfg) {
    if (cfg.data.input && cfg.model.weights == "random") return std::nullopt;
    return resolve_weights(cfg.model, cfg.seed);
}

KnownIndexDataset load_known(const ExperimentConfig& cfg, const std::optional<MatrixXd>& truth) {
    if (!cfg.data.input) return generate_known(cfg, *truth, cfg.seed);
    KnownIndexDataset data = csv::read_known(*cfg.data.input, cfg.model.sigma);
    if (data.dim() != cfg.model.d)
        fail(ErrorCategory::Validation, "dataset has " + std::to_string(data.dim()) + " covariates, config says " +
                                            std::to_string(cfg.model.d));
    if (data.models > cfg.model.k) fail(ErrorCategory::Validation, "dataset has a winner index above k");
    data.models = cfg.model.k;
    return data;
}

UnknownIndexDataset load_unknown(const ExperimentConfig& cfg, const std::optional<MatrixXd>& truth) {
    if (!cfg.data.input) return generate_unknown(cfg, *truth, cfg.seed);
    UnknownIndexDataset data = csv::read_unknown(*cfg.data.input);
    if (data.dim() != cfg.model.d)
        fail(ErrorCategory::Validation, "dataset has " + std::to_string(data.dim()) + " covariates, config says " +
                                            std::to_string(cfg.model.d));
    return data;
}

struct KnownRun {
    PSGDResult psgd;
    std::optional<WeightMatrix> naive;
    std::string naive_error;
};

KnownRun run_known(const ExperimentConfig& cfg, const KnownIndexDataset& data, std::uint64_t seed) {
    KnownRun r;
    PSGDConfig pc = cfg.psgd;
    pc.iterations = cfg.psgd_iterations.value_or(data.size());
    pc.seed = substream_seed(seed, "psgd");
    r.psgd = psgd_estimate(data, SelectionRule::parse(cfg.model.rule, cfg.model.k), cfg.model.sigma, pc);
    try {
        r.naive = naive_ols(data);
    } catch (const Error& e) {
        if (e.category() != ErrorCategory::SingularDesign) throw;
        r.naive_error = e.what();
    }
    return r;
}

void known_mode(const ExperimentConfig& cfg, EstimationReport& report) {
    auto truth = truth_for(cfg);
    report.truth = truth;
    auto data = load_known(cfg, truth);
    auto r = run_known(cfg, data, cfg.seed);

    MethodResult psgd{"psgd", r.psgd.estimate.columns, std::nullopt};
    if (truth) psgd.matching = identity_matching(psgd.estimate, *truth);
    report.methods.push_back(psgd);
    csv::write_weights(cfg.out / "estimate.csv", psgd.estimate);
    if (r.naive) {
        MethodResult naive{"naive", r.naive->columns, std::nullopt};
        if (truth) naive.matching = identity_matching(naive.estimate, *truth);
        report.methods.push_back(naive);
        csv::write_weights(cfg.out / "naive.csv", naive.estimate);
    } else {
        report.warnings.push_back("naive least squares skipped: " + r.naive_error);
    }

    auto& d = report.diagnostics;
    d["n"] = data.size();
    d["iterations"] = r.psgd.iterations;
    d["lambda"] = r.psgd.lambda;
    d["alpha_est"] = r.psgd.alpha_est;
    d["rejection_draws"] = r.psgd.rejection_draws;
    d["langevin_draws"] = r.psgd.langevin_draws;
    d["sampler_failures"] = r.psgd.sampler_failures;
    d["max_iterate_norm"] = r.psgd.max_iterate_norm;
    if (data.thickness) d["design_thickness"] = *data.thickness;
    if (r.psgd.sampler_failures > 0)
        report.warnings.push_back(std::to_string(r.psgd.sampler_failures) + " sampler draws failed and were skipped");
}

void grid_mode(const ExperimentConfig& cfg, EstimationReport& report) {
    auto truth = truth_for(cfg);
    report.truth = truth;
    if (truth) warn_separability(report, *truth, cfg.model);
    auto data = load_unknown(cfg, truth);
    GridConfig gc = cfg.grid;
    gc.seed = substream_seed(cfg.seed, "net");
    GridResult r = grid_estimate(data, cfg.model.k, gc);

    MatrixXd est = r.estimates;
    if (est.cols() < cfg.model.k) {
        report.warnings.push_back("only " + std::to_string(est.cols()) + " of " + std::to_string(cfg.model.k) +
                                  " weights recovered; missing columns reported as zero");
        est = pad_columns(est, cfg.model.k);
    }
    MethodResult m{"grid", est, std::nullopt};
    if (truth) m.matching = match_columns(est, *truth);
    report.methods.push_back(m);
    csv::write_weights(cfg.out / "estimate.csv", est);
    {
        std::ofstream out(cfg.out / "candidates.csv");
        if (!out) fail(ErrorCategory::Io, "cannot write candidates.csv");
        write_candidates(out, r);
    }
    if (r.pruned.overcount)
        report.warnings.push_back(std::to_string(r.pruned.representatives.size()) +
                                  " clusters survived pruning; kept the strongest " + std::to_string(cfg.model.k));
    if (r.candidates.degenerate) report.warnings.push_back("net score is flat: every point is a local maximum");
    if (r.ambiguous > 0) report.warnings.push_back(std::to_string(r.ambiguous) + " candidates had an ambiguous sign");
    if (r.spectral.degenerate) report.warnings.push_back("spectral gap is zero; subspace is not determined");

    auto& d = report.diagnostics;
    d["n"] = data.size();
    d["eigenvalues"] = to_vector(r.spectral.eigenvalues);
    d["spectral_gap"] = r.spectral.gap;
    d["baseline"] = r.spectral.baseline;
    d["net_size"] = r.net.size();
    d["candidates"] = r.candidates.members.size();
    d["clusters"] = r.pruned.representatives.size();
    d["clipped_points"] = r.clipped_points;
    d["unscored_points"] = r.unscored_points;
    d["ambiguous_signs"] = r.ambiguous;
    d["sign_rule"] = gc.sign_rule == SignRule::Paired ? "paired" : "threshold";
    d["split_sizes"] = {r.split_sizes[0], r.split_sizes[1], r.split_sizes[2]};
}

void k2_mode(const ExperimentConfig& cfg, EstimationReport& report) {
    if (cfg.model.k != 2) fail(ErrorCategory::Unsupported, "the moment-inversion estimator needs k = 2");
    auto truth = truth_for(cfg);
    report.truth = truth;
    if (truth) warn_separability(report, *truth, cfg.model);
    auto data = load_unknown(cfg, truth);
    K2Result r = k2_estimate(data, cfg.k2);

    MethodResult m{"k2", r.estimates, std::nullopt};
    if (truth) m.matching = match_columns(r.estimates, *truth);
    report.methods.push_back(m);
    csv::write_weights(cfg.out / "estimate.csv", r.estimates);
    {
        std::ofstream out(cfg.out / "surface.csv");
        if (!out) fail(ErrorCategory::Io, "cannot write surface.csv");
        write_surface(out, r);
    }
    if (r.first_check.inconsistent || r.second_check.inconsistent)
        report.warnings.push_back("moments at a selected grid point are inconsistent with a max of two Gaussians");
    if (static_cast<double>(data.size()) < r.sample_budget)
        report.warnings.push_back("n is below the Chebyshev sample budget " +
                                  std::to_string(static_cast<long long>(std::ceil(r.sample_budget))));

    auto& d = report.diagnostics;
    d["n"] = data.size();
    d["eigenvalues"] = to_vector(r.spectral.eigenvalues);
    d["spectral_gap"] = r.spectral.gap;
    d["grid_size"] = r.surface.size();
    d["pitch"] = r.pitch;
    d["first_min_variance"] = r.first_value;
    d["second_min_variance"] = r.second_value;
    d["sample_budget"] = r.sample_budget;
    d["split_sizes"] = {r.split_sizes[0], r.split_sizes[1], r.split_sizes[2]};
}

void benchmark_mode(const ExperimentConfig& cfg, EstimationReport& report) {
    std::ofstream csv_out(cfg.out / "benchmark.csv");
    if (!csv_out) fail(ErrorCategory::Io, "cannot write benchmark.csv");
    csv_out << "method,seed,error\n";
    std::vector<double> psgd_errors, naive_errors;
    int wins = 0;
    for (int s = 0; s < cfg.benchmark_seeds; ++s) {
        const std::uint64_t rep = substream_seed(cfg.seed, "benchmark", static_cast<std::uint64_t>(s));
        MatrixXd w = require_weights(cfg.model, rep);
        auto data = generate_known(cfg, w, rep);
        auto r = run_known(cfg, data, rep);
        double pe = identity_matching(r.psgd.estimate.columns, w).max_error;
        psgd_errors.push_back(pe);
        csv_out << "psgd," << s << ',' << csv::format_double(pe) << '\n';
        if (r.naive) {
            double ne = identity_matching(r.naive->columns, w).max_error;
            naive_errors.push_back(ne);
            csv_out << "naive," << s << ',' << csv::format_double(ne) << '\n';
            if (pe < ne) ++wins;
        } else {
            report.warnings.push_back("seed " + std::to_string(s) + ": naive least squares skipped");
        }
    }
    auto median = [](std::vector<double> v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        std::sort(v.begin(), v.end());
        return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    };
    auto& d = report.diagnostics;
    d["seeds"] = cfg.benchmark_seeds;
    d["n"] = cfg.data.n;
    d["median_error"] = {{"psgd", median(psgd_errors)}, {"naive", median(naive_errors)}};
    d["psgd_better_seeds"] = wins;
}

}  // namespace

Mode parse_mode(std::string_view name) {
    if (name == "generate") return Mode::Generate;
    if (name == "estimate-known") return Mode::EstimateKnown;
    if (name == "estimate-unknown-grid") return Mode::EstimateUnknownGrid;
    if (name == "estimate-unknown-k2") return Mode::EstimateUnknownK2;
    if (name == "benchmark") return Mode::Benchmark;
    fail(ErrorCategory::Validation, "unknown mode '" + std::string(name) + "'");
}

std::string_view mode_name(Mode mode) {
    switch (mode) {
        case Mode::Generate: return "generate";
        case Mode::EstimateKnown: return "estimate-known";
        case Mode::EstimateUnknownGrid: return "estimate-unknown-grid";
        case Mode::EstimateUnknownK2: return "estimate-unknown-k2";
        case Mode::Benchmark: return "benchmark";
    }
    return "unknown";
}

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) fail(ErrorCategory::Validation, "config: " + what);
    };
    require(model.d >= 1, "model.d must be >= 1");
    require(model.k >= 1, "model.k must be >= 1");
    require(model.sigma > 0.0, "model.sigma must be positive");
    require(model.bound > 0.0, "model.bound must be positive");
    require(model.delta > 0.0, "model.delta must be positive");
    require(model.weight_norm >= 0.0 && model.weight_norm <= model.bound, "model.weight_norm must lie in [0, bound]");
    require(data.n >= 1, "data.n must be >= 1");
    require(data.index == "known" || data.index == "unknown", "data.index must be known or unknown");
    require(benchmark_seeds >= 1, "benchmark.seeds must be >= 1");
    require(mode != Mode::Benchmark || !data.input, "benchmark mode generates its own data; drop data.input");
    try {
        SelectionRule::parse(model.rule, model.k);
        psgd.validate();
        grid.validate();
        k2.validate();
    } catch (const Error& e) {
        fail(ErrorCategory::Validation, std::string("config: ") + e.what());
    }
    if (data.input && !fs::exists(*data.input))
        fail(ErrorCategory::Io, "input file " + data.input->string() + " does not exist");
}

ExperimentConfig load_config(const fs::path& path, Mode mode) {
    if (!fs::exists(path)) fail(ErrorCategory::Io, "config file " + path.string() + " does not exist");
    pt::ptree tree;
    try {
        pt::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error& e) {
        fail(ErrorCategory::Validation, std::string("config: ") + e.what());
    }
    check_schema(tree);
    IniReader ini(tree);
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    ExperimentConfig cfg;
    cfg.mode = mode;
    ini.read_u64("run", "seed", cfg.seed);
    std::string out;
    if (ini.read("run", "out", out)) cfg.out = resolve(out);

    ModelSpec& m = cfg.model;
    ini.read_int("model", "d", m.d);
    ini.read_int("model", "k", m.k);
    ini.read("model", "sigma", m.sigma);
    ini.read("model", "bound", m.bound);
    ini.read("model", "delta", m.delta);
    ini.read("model", "rule", m.rule);
    ini.read("model", "weights", m.weights);
    if (m.weights.rfind("file:", 0) == 0) m.weights = "file:" + resolve(m.weights.substr(5)).string();
    ini.read("model", "weight_norm", m.weight_norm);

    ini.read_int("data", "n", cfg.data.n);
    ini.read("data", "index", cfg.data.index);
    ini.read("data", "covariates", cfg.data.covariates);
    std::string input;
    if (ini.read("data", "input", input)) cfg.data.input = resolve(input);

    Eigen::Index iterations = 0;
    if (ini.read_int("psgd", "iterations", iterations)) cfg.psgd_iterations = iterations;
    ini.read("psgd", "lambda", cfg.psgd.lambda);
    cfg.psgd.bound = m.bound;
    ini.read("psgd", "bound", cfg.psgd.bound);
    ini.read("psgd", "rejection_threshold", cfg.psgd.rejection_threshold);
    ini.read("psgd", "max_failure_fraction", cfg.psgd.max_failure_fraction);

    LangevinConfig& lc = cfg.psgd.langevin;
    ini.read_int("langevin", "steps", lc.steps);
    ini.read("langevin", "gamma", lc.gamma);
    ini.read("langevin", "radius", lc.radius);
    std::string boundary;
    if (ini.read("langevin", "boundary", boundary)) {
        if (boundary == "project") lc.boundary = LangevinBoundary::Project;
        else if (boundary == "reflect") lc.boundary = LangevinBoundary::Reflect;
        else IniReader::bad("langevin", "boundary", boundary);
    }

    GridConfig& g = cfg.grid;
    g.delta = m.delta;
    g.bound = m.bound;
    ini.read_int("grid", "l", g.l);
    ini.read("grid", "rho", g.rho);
    ini.read("grid", "gamma_net", g.gamma_net);
    ini.read_int("grid", "blocks", g.blocks);
    ini.read("grid", "delta", g.delta);
    ini.read("grid", "bound", g.bound);
    ini.read("grid", "dedup_radius", g.dedup_radius);
    ini.read("grid", "neighborhood", g.neighborhood);
    ini.read_int("grid", "max_net_size", g.max_net_size);
    std::string sign_rule;
    if (ini.read("grid", "sign_rule", sign_rule)) {
        if (sign_rule == "paired") g.sign_rule = SignRule::Paired;
        else if (sign_rule == "threshold") g.sign_rule = SignRule::Threshold;
        else IniReader::bad("grid", "sign_rule", sign_rule);
    }

    K2Config& k2 = cfg.k2;
    k2.delta = m.delta;
    k2.bound = m.bound;
    ini.read("k2", "epsilon", k2.epsilon);
    ini.read("k2", "delta", k2.delta);
    ini.read("k2", "bound", k2.bound);
    ini.read("k2", "exclusion", k2.exclusion);
    ini.read("k2", "fail_prob", k2.fail_prob);
    ini.read_int("k2", "max_grid", k2.max_grid);

    ini.read_int("benchmark", "seeds", cfg.benchmark_seeds);
    return cfg;
}

std::optional<MatrixXd> resolve_weights(const ModelSpec& model, std::uint64_t seed) {
    MatrixXd w;
    if (model.weights == "random") {
        w = random_weights(model.d, model.k, model.weight_norm, model.bound, substream_seed(seed, "weights")).columns;
    } else if (model.weights.rfind("file:", 0) == 0) {
        w = csv::read_weights(model.weights.substr(5));
    } else {
        auto values = parse_list(model.weights);
        if (static_cast<Eigen::Index>(values.size()) != model.d * model.k)
            fail(ErrorCategory::Validation, "model.weights lists " + std::to_string(values.size()) +
                                                " values; need d * k = " + std::to_string(model.d * model.k));
        w = Eigen::Map<MatrixXd>(values.data(), model.d, model.k);
    }
    if (w.rows() != model.d || w.cols() != model.k)
        fail(ErrorCategory::Validation, "weights are " + std::to_string(w.rows()) + " x " + std::to_string(w.cols()) +
                                            ", config says " + std::to_string(model.d) + " x " +
                                            std::to_string(model.k));
    return w;
}

CovariateSpec make_covariates(const std::string& spec, Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    if (spec == "gaussian") return CovariateSpec::gaussian();
    if (spec == "intercept") return CovariateSpec::fixed(intercept_design(n, d, seed));
    if (spec.rfind("shifted:", 0) == 0) {
        auto values = parse_list(spec.substr(8));
        if (values.size() != 1) fail(ErrorCategory::Validation, "covariates shifted:<m> takes one number");
        return CovariateSpec::fixed(shifted_gaussian_design(n, d, values[0], seed));
    }
    fail(ErrorCategory::Validation, "unknown covariates '" + spec + "'");
}

EstimationReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) fail(ErrorCategory::Io, "cannot create output directory " + cfg.out.string() + ": " + ec.message());

    EstimationReport report;
    report.mode = std::string(mode_name(cfg.mode));
    report.seed = cfg.seed;
    switch (cfg.mode) {
        case Mode::Generate: {
            MatrixXd w = require_weights(cfg.model, cfg.seed);
            report.truth = w;
            csv::write_weights(cfg.out / "weights.csv", w);
            report.diagnostics["n"] = cfg.data.n;
            report.diagnostics["index"] = cfg.data.index;
            if (cfg.data.index == "known") {
                auto data = generate_known(cfg, w, cfg.seed);
                csv::write_known(cfg.out / "dataset.csv", data);
                std::vector<Eigen::Index> wins(cfg.model.k, 0);
                for (int j : data.winner) ++wins[j];
                report.diagnostics["win_counts"] = wins;
                if (data.thickness) report.diagnostics["design_thickness"] = *data.thickness;
            } else {
                csv::write_unknown(cfg.out / "dataset.csv", generate_unknown(cfg, w, cfg.seed));
            }
            break;
        }
        case Mode::EstimateKnown: known_mode(cfg, report); break;
        case Mode::EstimateUnknownGrid: grid_mode(cfg, report); break;
        case Mode::EstimateUnknownK2: k2_mode(cfg, report); break;
        case Mode::Benchmark: benchmark_mode(cfg, report); break;
    }
    report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_report(cfg.out / "report.json", report);
    return report;
}

int run(Mode mode, const fs::path& config_path, const std::optional<fs::path>& out_dir,
        std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
    try {
        ExperimentConfig cfg = load_config(config_path, mode);
        if (out_dir) cfg.out = *out_dir;
        if (seed) cfg.seed = *seed;
        EstimationReport report = run_experiment(cfg);
        print_summary(out, report);
        if (mode == Mode::Benchmark) out << "  median error " << report.diagnostics["median_error"].dump() << '\n';
        out << "  artifacts in " << cfg.out.string() << '\n';
        return 0;
    } catch (const Error& e) {
        err << "selfselect: error [" << category_name(e.category()) << "]: " << e.what() << '\n';
        return exit_code(e.category());
    } catch (const std::exception& e) {
        err << "selfselect: error [internal]: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace selfselect
