#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "soh/errors.hpp"
#include "soh/trajectory.hpp"

namespace soh {

// Knobs for the synthetic second-life fleet. Defaults give 8 cells in 2
// groups with clearly separated duty depths, mild capacity hump and fade,
// and small observation noise.
struct FleetSpec {
    std::uint64_t seed = 7041;
    int n_cells = 8;
    int n_groups = 2;
    int cycles_per_cell = 240;  // aging cycles; capacity tests are added on top
    double q0_lo = 30.0;        // initial capacity range, Ah
    double q0_hi = 34.0;
    double hump_amplitude = 0.06;   // fractional capacity rise at mid-life
    double fade_rate = 6e-6;        // fractional capacity loss per Ah
    double noise_sigma = 0.01;      // Ah of per-cycle throughput noise
    double group_separation = 1.0;  // Ah between adjacent groups' duty depths

    // Protocol shape.
    int rpt_every = 30;            // aging cycles between capacity tests
    double aging_depth_ah = 15.0;  // base per-cycle charge throughput target
    double aging_current_a = 8.0;
    double nominal_capacity_ah = 33.1;
};

// One generated cell: its raw telemetry stream plus the ground truth the
// stream encodes.
struct SynthCell {
    std::string cell_id;
    int group_label = 1;  // 1-based
    double q0 = 0.0;      // noiseless initial capacity
    double aging_depth = 0.0;  // the cell's duty depth d_i, Ah per cycle
    std::vector<TimeSample> samples;

    // Noiseless capacity at every cycle end (aging and capacity tests).
    std::vector<double> truth_ah;
    std::vector<double> truth_q;

    // What the stream encodes, for round-trip checks.
    std::vector<double> intended_q_age;     // per aging cycle
    std::vector<double> intended_age_ah;    // cycle-end Ah of those cycles
    std::vector<double> intended_q_c20;     // per capacity test
    std::vector<double> intended_c20_ah;
};

struct Fleet {
    FleetSpec spec;
    std::vector<SynthCell> cells;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t cell_seed(std::uint64_t fleet_seed, int cell_index) {
    return splitmix64(fleet_seed ^ (0x9E3779B97F4A7C15ULL *
                                    static_cast<std::uint64_t>(cell_index + 1)));
}

}  // namespace detail

inline void validate(const FleetSpec& s) {
    auto bad = [](const std::string& msg) { throw InvalidSpec(msg); };
    if (s.n_cells < 2) bad("n_cells must be >= 2");
    if (s.n_groups < 1 || s.n_groups > s.n_cells) bad("n_groups must be in [1, n_cells]");
    if ((s.n_cells + s.n_groups - 1) / s.n_groups > 50) bad("too many cells per group");
    if (s.cycles_per_cell < 2) bad("cycles_per_cell must be >= 2");
    if (!(s.q0_lo > 0.0) || !(s.q0_hi >= s.q0_lo)) bad("q0 range must be positive");
    if (!(s.hump_amplitude >= 0.0)) bad("hump_amplitude must be >= 0");
    if (!(s.fade_rate >= 0.0)) bad("fade_rate must be >= 0");
    if (!(s.noise_sigma >= 0.0)) bad("noise_sigma must be >= 0");
    if (!(s.group_separation >= 0.0)) bad("group_separation must be >= 0");
    if (s.rpt_every < 1) bad("rpt_every must be >= 1");
    if (!(s.aging_depth_ah >= 1.0)) bad("aging_depth_ah must be >= 1 Ah");
    if (!(s.nominal_capacity_ah > 0.0)) bad("nominal_capacity_ah must be positive");
    if (!(s.aging_current_a / s.nominal_capacity_ah > 1.35 / 20.0))
        bad("aging current falls inside the capacity-test rate band");
}

// Deterministic fleet generator. Every cycle is piecewise linear in current
// with samples at each breakpoint, so trapezoidal integration recovers the
// intended throughputs exactly.
inline Fleet generate(const FleetSpec& spec) {
    validate(spec);

    constexpr double kRampS = 60.0;
    constexpr double kMidRestS = 300.0;
    constexpr double kInterRestS = 1200.0;
    constexpr double kRestStepS = 600.0;

    const int slots = (spec.n_cells + spec.n_groups - 1) / spec.n_groups;
    // Within-group duty-depth offsets use a geometric pattern so every pair
    // of cells sits at a distinct depth gap: each held-out cell then has a
    // unique nearest neighbor.
    const double wiggle = 0.4 * spec.group_separation;
    std::vector<double> slot_offset(static_cast<std::size_t>(slots), 0.0);
    if (slots > 1 && wiggle > 0.0) {
        double r_last = std::pow(2.0, slots - 1);
        for (int j = 0; j < slots; ++j)
            slot_offset[static_cast<std::size_t>(j)] =
                -0.5 * wiggle + wiggle * (std::pow(2.0, j) - 1.0) / (r_last - 1.0);
    }

    const int n_rpts = 1 + (spec.cycles_per_cell + spec.rpt_every - 1) / spec.rpt_every;

    Fleet fleet;
    fleet.spec = spec;

    for (int i = 0; i < spec.n_cells; ++i) {
        const int g = i % spec.n_groups;          // 0-based group
        const int j = i / spec.n_groups;          // ordinal within group
        std::mt19937_64 rng(detail::cell_seed(spec.seed, i));
        std::uniform_real_distribution<double> uq0(spec.q0_lo, spec.q0_hi);
        std::uniform_real_distribution<double> upert(-1.0, 1.0);

        SynthCell cell;
        cell.cell_id = "cell_" + std::to_string(g + 1) + "." + std::to_string(j + 1);
        cell.group_label = g + 1;
        cell.q0 = uq0(rng);
        double pert_a = upert(rng), pert_f = upert(rng);

        // Group-level degradation character, spread across [-1, 1].
        double zeta = (spec.n_groups == 1)
                          ? 0.0
                          : 2.0 * static_cast<double>(g) /
                                    static_cast<double>(spec.n_groups - 1) - 1.0;
        double a_i = spec.hump_amplitude * (1.0 + 0.35 * zeta) * (1.0 + 0.05 * pert_a);
        double f_i = spec.fade_rate * (1.0 + 0.45 * zeta) * (1.0 + 0.05 * pert_f);

        double d_base = spec.aging_depth_ah +
                        static_cast<double>(g) * (spec.group_separation + wiggle);
        cell.aging_depth = d_base + slot_offset[static_cast<std::size_t>(j)];

        // Hump spans slightly more than the planned total throughput, so the
        // capacity rises and then falls over the cell's life.
        const double span =
            1.05 * (static_cast<double>(spec.cycles_per_cell) * 2.0 * cell.aging_depth +
                    static_cast<double>(n_rpts) * 2.0 * cell.q0);
        auto hump = [span](double ah) {
            double s = std::sin(std::numbers::pi * ah / span);
            return s * s;
        };
        auto q_true = [&](double ah) {
            return cell.q0 * (1.0 + a_i * hump(ah) - f_i * ah);
        };

        const double v_base = 3.45 + 0.02 * (cell.q0 - 32.0);
        std::normal_distribution<double> noise(0.0, 1.0);
        auto draw = [&](double sigma) {
            return spec.noise_sigma > 0.0 ? sigma * noise(rng) : 0.0;
        };

        double t = 0.0, ah = 0.0;
        auto push = [&](double dt, double current, double volt, double temp) {
            t += dt;
            cell.samples.push_back({t, current, volt, temp});
        };

        // Leading rest so the first cycle is bounded on both sides.
        cell.samples.push_back({0.0, 0.0, v_base, 25.0});
        push(kRestStepS, 0.0, v_base, 25.0);
        push(kRestStepS, 0.0, v_base, 25.0);

        auto emit_cycle = [&](bool capacity_test) {
            const double amps =
                capacity_test ? spec.nominal_capacity_ah / 20.0 : spec.aging_current_a;
            double target;
            if (capacity_test) {
                // The test measures the current capacity; its own charge
                // advances the abscissa, hence the fixed point.
                target = q_true(ah);
                for (int it = 0; it < 3; ++it) target = q_true(ah + target);
            } else {
                target = cell.aging_depth;
            }
            target += draw(spec.noise_sigma);
            double floor_ah = amps * kRampS / 3600.0 + 0.01;
            if (target < floor_ah) target = floor_ah;

            const double hold_s = 3600.0 * target / amps - kRampS;
            const double q_now = q_true(ah + target);
            if (!(q_now > 0.05 * cell.q0))
                throw InvalidSpec("capacity driven to zero; reduce fade_rate or cycles");

            const double temp = 25.0 + 10.0 * hump(ah) + draw(10.0 * spec.noise_sigma);
            const double vb = v_base + draw(0.2 * spec.noise_sigma);
            const double v_rise = 0.35 * target / q_now;

            push(kRampS, amps, vb, temp);                    // charge hold start
            push(hold_s, amps, vb + v_rise, temp);           // charge hold end
            push(kRampS, 0.0, vb + v_rise, temp);            // back to rest
            push(kMidRestS, 0.0, vb + v_rise - 0.05, temp);  // mid rest
            push(kRampS, -amps, vb + v_rise - 0.05, temp);   // discharge start
            push(hold_s, -amps, vb - 0.1, temp);             // discharge end
            push(kRampS, 0.0, vb - 0.1, temp);               // cycle end sample

            ah += 2.0 * target;
            cell.truth_ah.push_back(ah);
            cell.truth_q.push_back(q_true(ah));
            if (capacity_test) {
                cell.intended_q_c20.push_back(target);
                cell.intended_c20_ah.push_back(ah);
            } else {
                cell.intended_q_age.push_back(target);
                cell.intended_age_ah.push_back(ah);
            }

            // Inter-cycle rest, long enough to split cycles apart.
            push(kRestStepS, 0.0, vb, temp);
            push(kInterRestS - kRestStepS, 0.0, vb, temp);
        };

        emit_cycle(true);
        int done = 0;
        while (done < spec.cycles_per_cell) {
            int block = std::min(spec.rpt_every, spec.cycles_per_cell - done);
            for (int b = 0; b < block; ++b) emit_cycle(false);
            done += block;
            emit_cycle(true);
        }

        fleet.cells.push_back(std::move(cell));
    }
    return fleet;
}

}  // namespace soh
