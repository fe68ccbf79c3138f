#pragma once

#include "selfselect/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace selfselect {

/// A strictly increasing scalar map together with its inverse. The inverse
/// may return +-infinity outside the map's range.
struct MonotoneMap {
    std::string name;
    std::function<double(double)> forward;
    std::function<double(double)> inverse;
};

enum class RuleKind { ArgMax, ArgMin, MonotoneArgMax };

/// Self-selection rule S: R^k -> {0..k-1}. Immutable after construction.
class SelectionRule {
public:
    static SelectionRule argmax(int k);
    static SelectionRule argmin(int k);
    /// One map per model; maps.size() fixes k.
    static SelectionRule monotone_argmax(std::vector<MonotoneMap> maps, std::string preset = "custom");

    /// Parses "argmax", "argmin" or "monotone:<preset>" for k models.
    /// Presets: identity, exp, cubic, bonus (t + i/2), scaled ((1 + i/2) t).
    static SelectionRule parse(std::string_view spec, int k);

    RuleKind kind() const { return kind_; }
    int k() const { return k_; }
    std::string spec_string() const;

    /// Winner index (0-based); ties go to the smallest index.
    int select(const Eigen::Ref<const VectorXd>& y) const;

    /// Bounds on the k-1 competitor outputs under which model j with output
    /// a wins. For ArgMax-type rules these are upper bounds, for ArgMin lower
    /// bounds. Competitors are ordered by model index with j removed.
    VectorXd slice_bounds(int j, double a) const;
    bool slice_is_upper() const { return kind_ != RuleKind::ArgMin; }

private:
    SelectionRule(RuleKind kind, int k) : kind_(kind), k_(k) {}

    RuleKind kind_;
    int k_;
    std::string preset_;
    std::shared_ptr<const std::vector<MonotoneMap>> maps_;
};

/// The slice C_j(a) intersected with the centered ball B(R), in R^{k-1}.
/// Membership and projection are taken on the closed slice; the tie
/// boundary has measure zero.
class ConvexRegion {
public:
    ConvexRegion(const SelectionRule& rule, int winner, double threshold, double radius);

    int dim() const { return static_cast<int>(bounds_.size()); }
    int winner() const { return winner_; }
    double threshold() const { return threshold_; }
    double radius() const { return radius_; }
    const VectorXd& bounds() const { return bounds_; }
    bool upper() const { return upper_; }

    /// Region is nonempty iff the box projection of the origin lies in the ball.
    bool feasible() const { return feasible_; }

    /// slack >= 0 loosens every constraint by that amount.
    bool contains(const Eigen::Ref<const VectorXd>& z, double slack = 0.0) const;

    /// Euclidean projection onto the region. Throws InfeasibleRegion.
    VectorXd project(const Eigen::Ref<const VectorXd>& z) const;

    /// Same as project(), writing into out (no allocation when sized).
    void project_into(const Eigen::Ref<const VectorXd>& z, VectorXd& out) const;

    /// Dykstra alternating-projection limits.
    static constexpr int kMaxSweeps = 10000;
    static constexpr double kTolerance = 1e-10;

private:
    void clamp_box(VectorXd& z) const;

    int winner_;
    double threshold_;
    double radius_;
    bool upper_;
    bool feasible_ = false;
    VectorXd bounds_;
};

/// Convenience wrappers matching the operation names used in docs.
inline int select(const SelectionRule& rule, const Eigen::Ref<const VectorXd>& y) {
    return rule.select(y);
}
inline bool slice_contains(const ConvexRegion& region, const Eigen::Ref<const VectorXd>& z) {
    return region.contains(z);
}
inline VectorXd slice_project(const ConvexRegion& region, const Eigen::Ref<const VectorXd>& z) {
    return region.project(z);
}

/// y with coordinate j removed.
VectorXd drop_index(const Eigen::Ref<const VectorXd>& y, int j);

}  // namespace selfselect
