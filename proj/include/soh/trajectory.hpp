#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "soh/errors.hpp"

namespace soh {

// One telemetry sample. Positive current is charge, negative is discharge.
struct TimeSample {
    double t_s = 0.0;
    double current_a = 0.0;
    double voltage_v = 0.0;
    double temperature_c = 0.0;
};

// Strictly increasing, non-negative, finite accumulated-Ah abscissa.
class AhSequence {
public:
    AhSequence() = default;

    explicit AhSequence(std::vector<double> values) : v_(std::move(values)) {
        for (std::size_t i = 0; i < v_.size(); ++i) {
            if (!std::isfinite(v_[i]) || v_[i] < 0.0)
                throw Error("AhSequence: value at index " + std::to_string(i) +
                            " is not finite and non-negative");
            if (i > 0 && !(v_[i] > v_[i - 1]))
                throw Error("AhSequence: not strictly increasing at index " +
                            std::to_string(i));
        }
    }

    std::size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }
    double operator[](std::size_t i) const { return v_[i]; }
    double front() const { return v_.front(); }
    double back() const { return v_.back(); }
    const std::vector<double>& values() const { return v_; }

    auto begin() const { return v_.begin(); }
    auto end() const { return v_.end(); }

    friend bool operator==(const AhSequence& a, const AhSequence& b) {
        return a.v_ == b.v_;
    }

private:
    std::vector<double> v_;
};

// A curve sampled on an AhSequence. Values are Ah for capacity-like curves
// and dimensionless for normalized ones.
struct Trajectory {
    AhSequence ah;
    std::vector<double> values;

    Trajectory() = default;

    Trajectory(AhSequence ah_seq, std::vector<double> vals)
        : ah(std::move(ah_seq)), values(std::move(vals)) {
        if (ah.size() != values.size())
            throw DimensionMismatch("Trajectory: " + std::to_string(ah.size()) +
                                    " abscissae vs " + std::to_string(values.size()) +
                                    " values");
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!std::isfinite(values[i]))
                throw Error("Trajectory: non-finite value at index " + std::to_string(i));
    }

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
};

namespace detail {

inline void require_strictly_increasing_time(std::span<const TimeSample> samples) {
    for (std::size_t i = 0; i + 1 < samples.size(); ++i)
        if (!(samples[i].t_s < samples[i + 1].t_s))
            throw NonMonotonicTime("sample " + std::to_string(i + 1) + " at t=" +
                                   std::to_string(samples[i + 1].t_s) +
                                   " does not advance time");
}

inline double lerp_current(const TimeSample& a, const TimeSample& b, double t) {
    double u = (t - a.t_s) / (b.t_s - a.t_s);
    return a.current_a + (b.current_a - a.current_a) * u;
}

}  // namespace detail

// Trapezoidal integral of the signed current over [t_start, t_end], in Ah.
// Window edges that fall between samples use linearly interpolated current.
inline double integrate_charge(std::span<const TimeSample> samples,
                               double t_start, double t_end) {
    detail::require_strictly_increasing_time(samples);
    if (samples.size() < 2)
        throw EmptyWindow("need at least 2 samples, got " + std::to_string(samples.size()));
    if (!(t_start < t_end))
        throw EmptyWindow("window [" + std::to_string(t_start) + ", " +
                          std::to_string(t_end) + ") is empty");
    if (t_start < samples.front().t_s || t_end > samples.back().t_s)
        throw EmptyWindow("window exceeds the sampled time range");

    std::size_t in_window = 0;
    for (const auto& s : samples)
        if (s.t_s >= t_start && s.t_s <= t_end) ++in_window;
    if (in_window < 2)
        throw EmptyWindow("fewer than 2 samples inside the window");

    double area_As = 0.0;  // ampere-seconds
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const auto& a = samples[i];
        const auto& b = samples[i + 1];
        if (b.t_s <= t_start || a.t_s >= t_end) continue;
        double lo = std::max(a.t_s, t_start);
        double hi = std::min(b.t_s, t_end);
        double ia = (lo == a.t_s) ? a.current_a : detail::lerp_current(a, b, lo);
        double ib = (hi == b.t_s) ? b.current_a : detail::lerp_current(a, b, hi);
        area_As += 0.5 * (ia + ib) * (hi - lo);
    }
    return area_As / 3600.0;
}

// Accumulated throughput: trapezoidal integral of |I| from the first sample
// to t_end, in Ah. Monotone non-decreasing in t_end.
inline double accumulate_ah(std::span<const TimeSample> samples, double t_end) {
    detail::require_strictly_increasing_time(samples);
    if (samples.empty()) throw EmptyWindow("no samples");
    if (t_end < samples.front().t_s || t_end > samples.back().t_s)
        throw EmptyWindow("t_end outside the sampled time range");
    if (t_end == samples.front().t_s) return 0.0;

    double area_As = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const auto& a = samples[i];
        const auto& b = samples[i + 1];
        if (a.t_s >= t_end) break;
        double hi = std::min(b.t_s, t_end);
        double ib = (hi == b.t_s) ? b.current_a : detail::lerp_current(a, b, hi);
        area_As += 0.5 * (std::fabs(a.current_a) + std::fabs(ib)) * (hi - a.t_s);
    }
    return area_As / 3600.0;
}

// Divide a capacity trajectory by the initial capacity q0.
inline Trajectory normalize_capacity(const Trajectory& traj, double q0) {
    if (!(q0 > 0.0) || !std::isfinite(q0))
        throw NonPositiveQ0("q0 = " + std::to_string(q0));
    std::vector<double> out(traj.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = traj.values[i] / q0;
    return Trajectory(traj.ah, std::move(out));
}

// Linear interpolation of the trajectory value at a single abscissa.
// Exact (no arithmetic) when x coincides with a stored grid point.
inline double interp_value(const Trajectory& traj, double x) {
    if (traj.empty()) throw OutOfRangeGrid("empty trajectory");
    const auto& a = traj.ah;
    if (x < a.front() || x > a.back())
        throw OutOfRangeGrid("ah=" + std::to_string(x) + " outside [" +
                             std::to_string(a.front()) + ", " +
                             std::to_string(a.back()) + "]");
    auto it = std::lower_bound(a.begin(), a.end(), x);
    std::size_t i = static_cast<std::size_t>(it - a.begin());
    if (it != a.end() && *it == x) return traj.values[i];
    // x lies strictly between a[i-1] and a[i]
    double x0 = a[i - 1], x1 = a[i];
    double v0 = traj.values[i - 1], v1 = traj.values[i];
    return v0 + (v1 - v0) * ((x - x0) / (x1 - x0));
}

// Resample onto a new grid by linear interpolation. No extrapolation: every
// grid point must lie inside the trajectory's Ah span.
inline Trajectory align_to_grid(const Trajectory& traj, const AhSequence& grid) {
    std::vector<double> out;
    out.reserve(grid.size());
    for (double g : grid) out.push_back(interp_value(traj, g));
    return Trajectory(grid, std::move(out));
}

}  // namespace soh
