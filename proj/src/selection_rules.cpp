#include "selfselect/selection_rules.hpp"

#include "selfselect/error.hpp"

#include <cmath>
#include <limits>

namespace selfselect {

namespace {

void require_finite(const Eigen::Ref<const VectorXd>& y) {
    if (!y.allFinite()) fail(ErrorCategory::InvalidInput, "select: non-finite response vector");
}

std::vector<MonotoneMap> preset_maps(std::string_view name, int k) {
    std::vector<MonotoneMap> maps;
    maps.reserve(k);
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) {
        const double bonus = 0.5 * i;
        const double scale = 1.0 + 0.5 * i;
        if (name == "identity") {
            maps.push_back({"identity", [](double t) { return t; }, [](double t) { return t; }});
        } else if (name == "exp") {
            maps.push_back({"exp", [](double t) { return std::exp(t); },
                            [](double v) { return v > 0.0 ? std::log(v) : -inf; }});
        } else if (name == "cubic") {
            maps.push_back({"cubic", [](double t) { return t * t * t; },
                            [](double v) { return std::cbrt(v); }});
        } else if (name == "bonus") {
            maps.push_back({"bonus", [bonus](double t) { return t + bonus; },
                            [bonus](double v) { return v - bonus; }});
        } else if (name == "scaled") {
            maps.push_back({"scaled", [scale](double t) { return scale * t; },
                            [scale](double v) { return v / scale; }});
        } else {
            fail(ErrorCategory::InvalidInput, "unknown monotone preset '" + std::string(name) + "'");
        }
    }
    return maps;
}

}  // namespace

bool WeightMatrix::within_bound() const {
    for (Eigen::Index j = 0; j < columns.cols(); ++j) {
        if (columns.col(j).norm() > bound * (1.0 + 1e-12)) return false;
    }
    return true;
}

SelectionRule SelectionRule::argmax(int k) {
    if (k < 1) fail(ErrorCategory::InvalidInput, "selection rule needs k >= 1");
    return SelectionRule(RuleKind::ArgMax, k);
}

SelectionRule SelectionRule::argmin(int k) {
    if (k < 1) fail(ErrorCategory::InvalidInput, "selection rule needs k >= 1");
    return SelectionRule(RuleKind::ArgMin, k);
}

SelectionRule SelectionRule::monotone_argmax(std::vector<MonotoneMap> maps, std::string preset) {
    if (maps.empty()) fail(ErrorCategory::InvalidInput, "selection rule needs k >= 1");
    SelectionRule r(RuleKind::MonotoneArgMax, static_cast<int>(maps.size()));
    r.preset_ = std::move(preset);
    r.maps_ = std::make_shared<const std::vector<MonotoneMap>>(std::move(maps));
    return r;
}

SelectionRule SelectionRule::parse(std::string_view spec, int k) {
    if (spec == "argmax") return argmax(k);
    if (spec == "argmin") return argmin(k);
    constexpr std::string_view prefix = "monotone:";
    if (spec.starts_with(prefix)) {
        auto name = spec.substr(prefix.size());
        return monotone_argmax(preset_maps(name, k), std::string(name));
    }
    fail(ErrorCategory::InvalidInput, "unknown selection rule '" + std::string(spec) + "'");
}

std::string SelectionRule::spec_string() const {
    switch (kind_) {
        case RuleKind::ArgMax: return "argmax";
        case RuleKind::ArgMin: return "argmin";
        case RuleKind::MonotoneArgMax: return "monotone:" + preset_;
    }
    return {};
}

int SelectionRule::select(const Eigen::Ref<const VectorXd>& y) const {
    if (y.size() != k_) fail(ErrorCategory::InvalidInput, "select: response length differs from k");
    require_finite(y);
    int best = 0;
    switch (kind_) {
        case RuleKind::ArgMax:
            for (int i = 1; i < k_; ++i)
                if (y[i] > y[best]) best = i;
            break;
        case RuleKind::ArgMin:
            for (int i = 1; i < k_; ++i)
                if (y[i] < y[best]) best = i;
            break;
        case RuleKind::MonotoneArgMax: {
            const auto& maps = *maps_;
            double top = maps[0].forward(y[0]);
            for (int i = 1; i < k_; ++i) {
                double v = maps[i].forward(y[i]);
                if (v > top) {
                    top = v;
                    best = i;
                }
            }
            break;
        }
    }
    return best;
}

VectorXd SelectionRule::slice_bounds(int j, double a) const {
    if (j < 0 || j >= k_) fail(ErrorCategory::InvalidInput, "slice: winner index out of range");
    VectorXd b(k_ - 1);
    int pos = 0;
    for (int i = 0; i < k_; ++i) {
        if (i == j) continue;
        if (kind_ == RuleKind::MonotoneArgMax) {
            const auto& maps = *maps_;
            b[pos++] = maps[i].inverse(maps[j].forward(a));
        } else {
            b[pos++] = a;
        }
    }
    return b;
}

VectorXd drop_index(const Eigen::Ref<const VectorXd>& y, int j) {
    VectorXd out(y.size() - 1);
    for (Eigen::Index i = 0, p = 0; i < y.size(); ++i)
        if (i != j) out[p++] = y[i];
    return out;
}

ConvexRegion::ConvexRegion(const SelectionRule& rule, int winner, double threshold, double radius)
    : winner_(winner), threshold_(threshold), radius_(radius), upper_(rule.slice_is_upper()) {
    if (!(radius > 0.0)) fail(ErrorCategory::InvalidInput, "region radius must be positive");
    if (std::isnan(threshold)) fail(ErrorCategory::InvalidInput, "region threshold is NaN");
    bounds_ = rule.slice_bounds(winner, threshold);
    VectorXd origin = VectorXd::Zero(dim());
    clamp_box(origin);
    feasible_ = origin.norm() <= radius_;
}

void ConvexRegion::clamp_box(VectorXd& z) const {
    if (upper_)
        z = z.cwiseMin(bounds_);
    else
        z = z.cwiseMax(bounds_);
}

bool ConvexRegion::contains(const Eigen::Ref<const VectorXd>& z, double slack) const {
    if (z.size() != dim()) fail(ErrorCategory::InvalidInput, "slice: point has wrong dimension");
    for (int i = 0; i < dim(); ++i) {
        if (upper_ ? z[i] > bounds_[i] + slack : z[i] < bounds_[i] - slack) return false;
    }
    return z.norm() <= radius_ + slack;
}

VectorXd ConvexRegion::project(const Eigen::Ref<const VectorXd>& z) const {
    VectorXd out;
    project_into(z, out);
    return out;
}

void ConvexRegion::project_into(const Eigen::Ref<const VectorXd>& z, VectorXd& out) const {
    if (z.size() != dim()) fail(ErrorCategory::InvalidInput, "slice: point has wrong dimension");
    if (!feasible_) fail(ErrorCategory::InfeasibleRegion, "slice C_j(a) does not meet the ball B(R)");

    // Either single-set projection landing in the other set is the answer.
    out = z;
    clamp_box(out);
    if (out.norm() <= radius_) return;
    double zn = z.norm();
    if (zn > radius_) {
        out = z * (radius_ / zn);
        if (contains(out)) return;
    }

    // Dykstra: box then ball, with correction terms.
    VectorXd x = z, p = VectorXd::Zero(dim()), q = VectorXd::Zero(dim()), y(dim());
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        y = x + p;
        clamp_box(y);
        p = x + p - y;
        VectorXd xn = y + q;
        double n = xn.norm();
        if (n > radius_) xn *= radius_ / n;
        q = y + q - xn;
        double change = (xn - x).norm();
        x.swap(xn);
        if (change < kTolerance && (x - y).norm() < kTolerance) break;
    }
    // Remove residual box violation left by the tolerance.
    clamp_box(x);
    out = std::move(x);
}

}  // namespace selfselect
