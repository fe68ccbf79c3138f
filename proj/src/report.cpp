#include "selfselect/report.hpp"

#include "selfselect/error.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

namespace selfselect {

nlohmann::ordered_json columns_json(const MatrixXd& w) {
    auto out = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        auto col = nlohmann::ordered_json::array();
        for (Eigen::Index l = 0; l < w.rows(); ++l) col.push_back(w(l, j));
        out.push_back(std::move(col));
    }
    return out;
}

nlohmann::ordered_json to_json(const EstimationReport& report, bool include_wall_time) {
    nlohmann::ordered_json j;
    j["mode"] = report.mode;
    j["seed"] = report.seed;
    if (report.truth) j["truth"] = columns_json(*report.truth);
    auto methods = nlohmann::ordered_json::array();
    for (const auto& m : report.methods) {
        nlohmann::ordered_json e;
        e["method"] = m.name;
        e["estimate"] = columns_json(m.estimate);
        if (m.matching) {
            e["permutation"] = m.matching->permutation;
            e["errors"] = std::vector<double>(m.matching->errors.data(),
                                              m.matching->errors.data() + m.matching->errors.size());
            e["max_error"] = m.matching->max_error;
        }
        methods.push_back(std::move(e));
    }
    j["methods"] = std::move(methods);
    j["diagnostics"] = report.diagnostics;
    j["warnings"] = report.warnings;
    if (include_wall_time) j["wall_time_seconds"] = report.wall_time_seconds;
    return j;
}

void write_report(const std::filesystem::path& path, const EstimationReport& report) {
    std::ofstream out(path);
    if (!out) fail(ErrorCategory::Io, "cannot write " + path.string());
    out << to_json(report).dump(2) << '\n';
    if (!out) fail(ErrorCategory::Io, "write failed for " + path.string());
}

void print_summary(std::ostream& out, const EstimationReport& report) {
    out << "mode " << report.mode << ", seed " << report.seed << '\n';
    for (const auto& m : report.methods) {
        out << "  " << std::left << std::setw(8) << m.name;
        if (m.matching) {
            out << " max error " << std::setprecision(4) << m.matching->max_error << "  per column";
            for (Eigen::Index j = 0; j < m.matching->errors.size(); ++j) out << ' ' << m.matching->errors[j];
        } else {
            out << " (no truth to compare against)";
        }
        out << '\n';
    }
    for (const auto& w : report.warnings) out << "  warning: " << w << '\n';
    out << "  wall time " << std::setprecision(3) << report.wall_time_seconds << " s\n";
}

}  // namespace selfselect
