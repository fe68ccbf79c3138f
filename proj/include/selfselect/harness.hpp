#pragma once

#include "selfselect/grid_estimator.hpp"
#include "selfselect/k2_moment.hpp"
#include "selfselect/known_index.hpp"
#include "selfselect/report.hpp"
#include "selfselect/synthetic_model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace selfselect {

enum class Mode { Generate, EstimateKnown, EstimateUnknownGrid, EstimateUnknownK2, Benchmark };

/// "generate", "estimate-known", "estimate-unknown-grid", "estimate-unknown-k2", "benchmark".
Mode parse_mode(std::string_view name);
std::string_view mode_name(Mode mode);

struct ModelSpec {
    Eigen::Index d = 2;
    int k = 2;
    double sigma = 1.0;
    double bound = 2.0;
    double delta = 0.8;
    std::string rule = "argmax";
    /// "random", "file:<path>", or comma-separated values in column-major order.
    std::string weights = "random";
    double weight_norm = 1.0;
};

struct DataSpec {
    Eigen::Index n = 1000;
    /// Generate mode only: "known" or "unknown".
    std::string index = "known";
    /// "gaussian", "shifted:<m>" or "intercept".
    std::string covariates = "gaussian";
    /// Dataset to read instead of generating one.
    std::optional<std::filesystem::path> input;
};

struct ExperimentConfig {
    Mode mode = Mode::Generate;
    ModelSpec model;
    DataSpec data;
    PSGDConfig psgd;
    /// Unset runs one pass over the data (T = n).
    std::optional<Eigen::Index> psgd_iterations;
    GridConfig grid;
    K2Config k2;
    int benchmark_seeds = 10;
    std::uint64_t seed = 0;
    std::filesystem::path out = "selfselect-out";

    /// Throws Validation on inconsistent settings.
    void validate() const;
};

/// Reads an INI file (sections run, model, data, psgd, langevin, grid, k2,
/// benchmark). Unknown keys and malformed values raise Validation; relative
/// paths are resolved against the file's directory.
ExperimentConfig load_config(const std::filesystem::path& path, Mode mode);

/// Truth weights named by the model spec, if they can be determined.
/// Random weights are drawn from the "weights" substream of the seed.
std::optional<MatrixXd> resolve_weights(const ModelSpec& model, std::uint64_t seed);

/// Covariate source for n records from the "covariates" spec string.
CovariateSpec make_covariates(const std::string& spec, Eigen::Index n, Eigen::Index d, std::uint64_t seed);

/// Runs one experiment and writes its artifacts under cfg.out. Returns the
/// report (also written as report.json).
EstimationReport run_experiment(const ExperimentConfig& cfg);

/// CLI entry: loads the config, applies overrides, runs, prints a summary
/// to out and errors to err. Returns the process exit code.
int run(Mode mode, const std::filesystem::path& config_path, const std::optional<std::filesystem::path>& out_dir,
        std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err);

}  // namespace selfselect
