#include "selfselect/error.hpp"
#include "selfselect/harness.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Estimation under self-selection: data generation, estimators and benchmarks"};
    std::string mode;
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    app.add_option("mode", mode, "generate | estimate-known | estimate-unknown-grid | estimate-unknown-k2 | benchmark")
        ->required();
    app.add_option("--config", config, "INI experiment config")->required();
    auto* out_opt = app.add_option("--out", out, "output directory (overrides [run] out)");
    auto* seed_opt = app.add_option("--seed", seed, "top-level seed (overrides [run] seed)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : selfselect::exit_code(selfselect::ErrorCategory::Validation);
    }

    selfselect::Mode m;
    try {
        m = selfselect::parse_mode(mode);
    } catch (const selfselect::Error& e) {
        std::cerr << "selfselect: error [" << selfselect::category_name(e.category()) << "]: " << e.what() << '\n';
        return selfselect::exit_code(e.category());
    }
    std::optional<std::filesystem::path> out_dir;
    if (*out_opt) out_dir = out;
    std::optional<std::uint64_t> seed_override;
    if (*seed_opt) seed_override = seed;
    return selfselect::run(m, config, out_dir, seed_override, std::cout, std::cerr);
}
