#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "soh/errors.hpp"
#include "soh/trajectory.hpp"

namespace soh {

enum class CycleKind { aging, c20_capacity, hppc, ocv };

inline const char* to_string(CycleKind k) {
    switch (k) {
        case CycleKind::aging: return "aging";
        case CycleKind::c20_capacity: return "c20_capacity";
        case CycleKind::hppc: return "hppc";
        case CycleKind::ocv: return "ocv";
    }
    return "?";
}

// One charge/discharge block cut out of a cell's telemetry stream.
// t_ch marks the start of the charge phase, t_dis the start of the discharge
// phase; the signed current integral over [t_ch, t_dis] is the block's charge
// throughput. ah_start/ah_end are the stream-level accumulated |I| throughput
// at the block boundaries.
struct CycleRecord {
    std::string cell_id;
    int cycle_index = 0;  // 1-based within the cell's stream
    CycleKind kind = CycleKind::aging;
    std::vector<TimeSample> samples;
    double t_ch = 0.0;
    double t_dis = 0.0;
    double ah_start = 0.0;
    double ah_end = 0.0;
};

struct SegmentationConfig {
    double rest_current_a = 0.05;  // |I| at or below this counts as rest
    double rest_min_s = 600.0;     // rest dwell that separates cycles
    double nominal_capacity_ah = 33.1;
    double rate_band_lo = 0.75;  // accepted multiples of the C/20 and C/40 rates
    double rate_band_hi = 1.35;
    double hppc_peak_ratio = 4.0;  // peak/mean |I| at or above this tags hppc
};

namespace detail {

inline CycleKind classify_block(const std::vector<TimeSample>& samples,
                                const SegmentationConfig& cfg) {
    double peak = 0.0, sum = 0.0;
    std::size_t n_active = 0;
    for (const auto& s : samples) {
        double a = std::fabs(s.current_a);
        if (a <= cfg.rest_current_a) continue;
        peak = std::max(peak, a);
        sum += a;
        ++n_active;
    }
    if (n_active == 0) return CycleKind::aging;
    double mean = sum / static_cast<double>(n_active);
    if (peak / mean >= cfg.hppc_peak_ratio) return CycleKind::hppc;
    double c_rate = mean / cfg.nominal_capacity_ah;
    if (c_rate >= cfg.rate_band_lo / 20.0 && c_rate <= cfg.rate_band_hi / 20.0)
        return CycleKind::c20_capacity;
    if (c_rate >= cfg.rate_band_lo / 40.0 && c_rate <= cfg.rate_band_hi / 40.0)
        return CycleKind::ocv;
    return CycleKind::aging;
}

// Charge onset: the last rest sample before current first rises above the
// rest threshold. Discharge onset: the last rest sample between the charge
// phase and the first sample below -rest threshold.
inline void place_markers(CycleRecord& rec, double rest_a) {
    const auto& s = rec.samples;
    const std::size_t n = s.size();
    const std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t i_ch = npos, i_dis = npos;
    for (std::size_t i = 0; i < n; ++i)
        if (s[i].current_a > rest_a) { i_ch = i; break; }
    for (std::size_t i = (i_ch == npos ? 0 : i_ch); i < n; ++i)
        if (s[i].current_a < -rest_a) { i_dis = i; break; }

    rec.t_ch = s.front().t_s;
    if (i_ch != npos)
        for (std::size_t i = i_ch; i-- > 0;)
            if (std::fabs(s[i].current_a) <= rest_a) { rec.t_ch = s[i].t_s; break; }

    if (i_dis == npos) {
        rec.t_dis = s.back().t_s;
    } else {
        rec.t_dis = s[i_dis].t_s;
        for (std::size_t i = i_dis; i-- > 0;) {
            if (s[i].t_s <= rec.t_ch) break;
            if (std::fabs(s[i].current_a) <= rest_a) { rec.t_dis = s[i].t_s; break; }
        }
    }
    if (!(rec.t_ch < rec.t_dis)) {
        rec.t_ch = s.front().t_s;
        rec.t_dis = s.back().t_s;
    }
}

}  // namespace detail

// Cut a telemetry stream into cycles at rest periods (dwell >= rest_min_s with
// |I| <= rest_current_a). Each cycle keeps one boundary rest sample on each
// side so its ramps integrate exactly.
inline std::vector<CycleRecord> segment_cycles(std::span<const TimeSample> samples,
                                               const SegmentationConfig& cfg,
                                               const std::string& cell_id = "") {
    detail::require_strictly_increasing_time(samples);
    if (samples.empty()) throw UnsegmentableStream("empty stream");
    const std::size_t n = samples.size();

    // Maximal rest runs that satisfy the dwell requirement.
    struct Run { std::size_t first, last; };
    std::vector<Run> rests;
    for (std::size_t i = 0; i < n;) {
        if (std::fabs(samples[i].current_a) > cfg.rest_current_a) { ++i; continue; }
        std::size_t j = i;
        while (j + 1 < n && std::fabs(samples[j + 1].current_a) <= cfg.rest_current_a) ++j;
        if (samples[j].t_s - samples[i].t_s >= cfg.rest_min_s) rests.push_back({i, j});
        i = j + 1;
    }
    if (rests.empty())
        throw UnsegmentableStream("no rest period of at least " +
                                  std::to_string(cfg.rest_min_s) + " s at |I| <= " +
                                  std::to_string(cfg.rest_current_a) + " A");

    // Accumulated |I| throughput at each sample, for the cycle Ah stamps.
    std::vector<double> prefix_ah(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double a0 = std::fabs(samples[i].current_a);
        double a1 = std::fabs(samples[i + 1].current_a);
        prefix_ah[i + 1] = prefix_ah[i] +
                           0.5 * (a0 + a1) * (samples[i + 1].t_s - samples[i].t_s) / 3600.0;
    }

    // Candidate blocks between consecutive qualifying rests, including the
    // stream head and tail, each bounded by the adjacent rest-run endpoint.
    std::vector<std::pair<std::size_t, std::size_t>> blocks;
    if (rests.front().first > 0) blocks.push_back({0, rests.front().first});
    for (std::size_t r = 0; r + 1 < rests.size(); ++r)
        blocks.push_back({rests[r].last, rests[r + 1].first});
    if (rests.back().last + 1 < n) blocks.push_back({rests.back().last, n - 1});

    std::vector<CycleRecord> out;
    for (auto [b0, b1] : blocks) {
        bool active = false;
        for (std::size_t i = b0; i <= b1; ++i)
            if (std::fabs(samples[i].current_a) > cfg.rest_current_a) { active = true; break; }
        if (!active) continue;

        CycleRecord rec;
        rec.cell_id = cell_id;
        rec.cycle_index = static_cast<int>(out.size()) + 1;
        rec.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(b0),
                           samples.begin() + static_cast<std::ptrdiff_t>(b1) + 1);
        rec.kind = detail::classify_block(rec.samples, cfg);
        rec.ah_start = prefix_ah[b0];
        rec.ah_end = prefix_ah[b1];
        detail::place_markers(rec, cfg.rest_current_a);
        out.push_back(std::move(rec));
    }
    if (out.empty()) throw UnsegmentableStream("stream has rest periods but no activity");
    return out;
}

// Charge throughput of one aging cycle: signed current integral between the
// charge and discharge markers.
inline double cycle_q_age(const CycleRecord& cycle) {
    if (cycle.kind != CycleKind::aging)
        throw WrongCycleType(std::string("expected aging, got ") + to_string(cycle.kind));
    return integrate_charge(cycle.samples, cycle.t_ch, cycle.t_dis);
}

// C/20 charge capacity: same integral over a c20_capacity cycle. This is the
// ground-truth health label.
inline double cycle_q_c20(const CycleRecord& cycle) {
    if (cycle.kind != CycleKind::c20_capacity)
        throw WrongCycleType(std::string("expected c20_capacity, got ") + to_string(cycle.kind));
    return integrate_charge(cycle.samples, cycle.t_ch, cycle.t_dis);
}

// Regression input for one aging cycle: the schema's features for cycle n
// concatenated with the same features for cycle n-1 (zeros when absent).
struct FeatureVector {
    double ah = 0.0;  // cycle-end accumulated throughput
    std::vector<double> entries;
};

// Named per-cycle scalar features. The first name must be q_age so the
// regression target's own throughput anchors the vector.
class FeatureSchema {
public:
    explicit FeatureSchema(std::vector<std::string> names =
                               {"q_age", "mean_v_charge", "mean_t", "duration_s", "ah_end"},
                           double charge_current_min = 0.05)
        : names_(std::move(names)), charge_min_(charge_current_min) {
        if (names_.empty() || names_.front() != "q_age")
            throw Error("FeatureSchema: first feature must be q_age");
        for (const auto& nm : names_)
            if (nm != "q_age" && nm != "mean_v_charge" && nm != "mean_t" &&
                nm != "duration_s" && nm != "ah_end")
            throw Error("FeatureSchema: unknown feature '" + nm + "'");
    }

    const std::vector<std::string>& names() const { return names_; }
    std::size_t size() const { return names_.size(); }

    // Names for the full lag-1 concatenated vector, for file headers.
    std::vector<std::string> concatenated_names() const {
        std::vector<std::string> out = names_;
        for (const auto& nm : names_) out.push_back(nm + "_prev");
        return out;
    }

    std::vector<double> evaluate(const CycleRecord& cycle) const {
        std::vector<double> out;
        out.reserve(names_.size());
        for (const auto& nm : names_) out.push_back(one(nm, cycle));
        return out;
    }

private:
    double one(const std::string& nm, const CycleRecord& c) const {
        if (nm == "q_age") return cycle_q_age(c);
        if (nm == "duration_s") return c.samples.back().t_s - c.samples.front().t_s;
        if (nm == "ah_end") return c.ah_end;
        if (nm == "mean_t") {
            double s = 0.0;
            for (const auto& x : c.samples) s += x.temperature_c;
            return s / static_cast<double>(c.samples.size());
        }
        // mean_v_charge: mean voltage while charging; whole cycle if the
        // cycle never charges.
        double s = 0.0;
        std::size_t k = 0;
        for (const auto& x : c.samples)
            if (x.current_a > charge_min_) { s += x.voltage_v; ++k; }
        if (k > 0) return s / static_cast<double>(k);
        for (const auto& x : c.samples) s += x.voltage_v;
        return s / static_cast<double>(c.samples.size());
    }

    std::vector<std::string> names_;
    double charge_min_;
};

inline FeatureVector build_feature_vector(const CycleRecord& cycle_n,
                                          const CycleRecord* cycle_prev,
                                          const FeatureSchema& schema) {
    if (cycle_n.kind != CycleKind::aging)
        throw WrongCycleType(std::string("feature vectors are built from aging cycles, got ") +
                             to_string(cycle_n.kind));
    if (cycle_n.samples.empty()) throw EmptyWindow("cycle has no samples");

    FeatureVector fv;
    fv.ah = cycle_n.ah_end;
    fv.entries = schema.evaluate(cycle_n);
    if (cycle_prev != nullptr) {
        auto prev = schema.evaluate(*cycle_prev);
        fv.entries.insert(fv.entries.end(), prev.begin(), prev.end());
    } else {
        fv.entries.resize(2 * schema.size(), 0.0);
    }
    for (double v : fv.entries)
        if (!std::isfinite(v)) throw Error("FeatureVector: non-finite entry");
    return fv;
}

}  // namespace soh
