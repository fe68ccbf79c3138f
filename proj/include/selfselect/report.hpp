#pragma once

#include "selfselect/matching.hpp"
#include "selfselect/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace selfselect {

/// Per-method result within a report: an estimate and, when the truth is
/// known, its matched errors.
struct MethodResult {
    std::string name;
    MatrixXd estimate;
    std::optional<ColumnMatching> matching;
};

struct EstimationReport {
    std::string mode;
    std::uint64_t seed = 0;
    std::optional<MatrixXd> truth;
    std::vector<MethodResult> methods;
    nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();
    std::vector<std::string> warnings;
    double wall_time_seconds = 0.0;
};

/// Weight matrix as a list of columns.
nlohmann::ordered_json columns_json(const MatrixXd& w);

/// Without the wall-time field when include_wall_time is false, so that
/// repeated runs compare equal.
nlohmann::ordered_json to_json(const EstimationReport& report, bool include_wall_time = true);

void write_report(const std::filesystem::path& path, const EstimationReport& report);

/// Short human-readable summary.
void print_summary(std::ostream& out, const EstimationReport& report);

}  // namespace selfselect
