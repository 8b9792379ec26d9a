#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

namespace pmsm {

/// Reference/load signal: a constant or a piecewise-linear curve over time.
struct Profile {
    enum class Kind { Constant, PiecewiseLinear };

    Kind kind = Kind::Constant;
    double value = 0.0;                              ///< Constant only
    std::vector<std::pair<double, double>> points;   ///< (time [s], value), strictly increasing

    static Profile constant(double v) {
        Profile p;
        p.kind = Kind::Constant;
        p.value = v;
        return p;
    }

    static Profile piecewise(std::vector<std::pair<double, double>> pts) {
        Profile p;
        p.kind = Kind::PiecewiseLinear;
        p.points = std::move(pts);
        p.validate();
        return p;
    }

    void validate() const {
        if (kind == Kind::Constant) return;
        if (points.empty()) {
            throw std::invalid_argument("piecewise profile needs at least one breakpoint");
        }
        for (std::size_t i = 1; i < points.size(); ++i) {
            if (!(points[i].first > points[i - 1].first)) {
                throw std::invalid_argument("profile breakpoints must be strictly increasing in time");
            }
        }
    }
};

/// Evaluate at time t: linear interpolation between breakpoints, clamped to
/// the end values outside the covered range.
inline double eval_profile(const Profile& pr, double t) {
    if (pr.kind == Profile::Kind::Constant) return pr.value;
    const auto& pts = pr.points;
    if (t <= pts.front().first) return pts.front().second;
    if (t >= pts.back().first) return pts.back().second;
    std::size_t i = 1;
    while (pts[i].first < t) ++i;
    const auto& [t0, v0] = pts[i - 1];
    const auto& [t1, v1] = pts[i];
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
}

}  // namespace pmsm
