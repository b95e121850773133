#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "soh/errors.hpp"
#include "soh/features.hpp"
#include "soh/text.hpp"
#include "soh/trajectory.hpp"

namespace soh {

// One reference cell of the training fleet. q_age lives on the fleet's
// shared reference grid; q_bar keeps the cell's own C/20 abscissa.
struct TrainingCell {
    std::string cell_id;
    Trajectory q_age;
    Trajectory q_bar;  // normalized capacity, Q(ah)/Q(0)
    double q0 = 0.0;
    std::vector<FeatureVector> features;
};

struct TrainingSet {
    std::vector<TrainingCell> cells;
    AhSequence ref_grid;

    std::size_t k() const { return cells.size(); }

    // Resamples every cell's q_age onto a common linspace grid spanning the
    // intersection of the cells' Ah ranges.
    static TrainingSet build(std::vector<TrainingCell> raw, std::size_t grid_points = 0) {
        if (raw.empty()) throw EmptyState("training set needs at least one cell");
        double lo = 0.0, hi = 0.0;
        std::vector<std::size_t> sizes;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const auto& c = raw[i];
            if (!(c.q0 > 0.0)) throw NonPositiveQ0("training cell " + c.cell_id);
            if (c.q_age.size() < 2)
                throw GridMismatch("training cell " + c.cell_id +
                                   " has fewer than 2 aging points");
            sizes.push_back(c.q_age.size());
            lo = (i == 0) ? c.q_age.ah.front() : std::max(lo, c.q_age.ah.front());
            hi = (i == 0) ? c.q_age.ah.back() : std::min(hi, c.q_age.ah.back());
        }
        if (!(lo < hi))
            throw GridMismatch("training cells share no common Ah span");

        if (grid_points == 0) {
            std::sort(sizes.begin(), sizes.end());
            grid_points = sizes[sizes.size() / 2];
        }
        if (grid_points < 2) grid_points = 2;

        std::vector<double> g(grid_points);
        for (std::size_t i = 0; i < grid_points; ++i)
            g[i] = lo + (hi - lo) * static_cast<double>(i) /
                            static_cast<double>(grid_points - 1);
        // lo + (hi - lo) may round past hi; the endpoints must be exact or
        // aligning the cell that defines hi throws OutOfRangeGrid.
        g.front() = lo;
        g.back() = hi;
        AhSequence grid(std::move(g));

        TrainingSet ts;
        ts.ref_grid = grid;
        for (auto& c : raw) {
            c.q_age = align_to_grid(c.q_age, grid);
            ts.cells.push_back(std::move(c));
        }
        return ts;
    }
};

// Prefix distance between two trajectories on a shared grid:
// sqrt(sum of squared value differences over the first n points).
inline double trajectory_distance(const Trajectory& qx, const Trajectory& qy,
                                  std::size_t n) {
    if (n < 1 || n > qx.size() || n > qy.size())
        throw PrefixOutOfRange("n=" + std::to_string(n) + " with sizes " +
                               std::to_string(qx.size()) + " and " +
                               std::to_string(qy.size()));
    for (std::size_t i = 0; i < n; ++i)
        if (qx.ah[i] != qy.ah[i])
            throw GridMismatch("abscissae differ at index " + std::to_string(i));
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = qx.values[i] - qy.values[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

// Streaming classification against the K training cells. Keeps the running
// squared distance per cell so each new point costs O(K); the result is
// identical to recomputing every distance from scratch.
struct ClassificationState {
    AhSequence ref_grid;
    std::vector<double> sq_accum;
    std::vector<int> s_seq;  // 1-based training-cell indices
    std::vector<double> ah_seen;
    std::vector<double> lambda;
    std::vector<double> ah_mass;  // per-cell accumulated Ah weight
    double ah_total = 0.0;

    explicit ClassificationState(const TrainingSet& training)
        : ref_grid(training.ref_grid),
          sq_accum(training.k(), 0.0),
          lambda(training.k(), 1.0 / static_cast<double>(training.k())),
          ah_mass(training.k(), 0.0) {}

    ClassificationState() = default;
};

// Forgetting factors from scratch: each cell's share of the accumulated Ah
// abscissa mass. Uniform before any Ah mass exists.
inline std::vector<double> lambda_weights(const ClassificationState& state,
                                          std::size_t k) {
    if (state.s_seq.empty()) throw EmptyState("no classified points yet");
    if (state.s_seq.size() != state.ah_seen.size())
        throw DimensionMismatch("state has " + std::to_string(state.s_seq.size()) +
                                " indices vs " + std::to_string(state.ah_seen.size()) +
                                " ah points");
    std::vector<double> mass(k, 0.0);
    double total = 0.0;
    for (std::size_t n = 0; n < state.s_seq.size(); ++n) {
        int s = state.s_seq[n];
        if (s < 1 || static_cast<std::size_t>(s) > k)
            throw DimensionMismatch("classification index " + std::to_string(s) +
                                    " outside 1.." + std::to_string(k));
        mass[static_cast<std::size_t>(s) - 1] += state.ah_seen[n];
        total += state.ah_seen[n];
    }
    if (total <= 0.0)
        return std::vector<double>(k, 1.0 / static_cast<double>(k));
    for (double& m : mass) m /= total;
    return mass;
}

// Consume one (ah, q_age) point: update every cell's running squared
// distance, pick the argmin (ties to the lowest index), refresh lambda.
// Returns the new classification index S_n.
inline int classify_step(ClassificationState& state, const TrainingSet& training,
                         double q_age_new, double ah_new) {
    const std::size_t k = training.k();
    if (state.sq_accum.size() != k)
        throw DimensionMismatch("state tracks " + std::to_string(state.sq_accum.size()) +
                                " cells, training set has " + std::to_string(k));
    if (!state.ah_seen.empty() && !(ah_new > state.ah_seen.back()))
        throw GridMismatch("ah=" + text::fmt(ah_new) + " does not advance past " +
                           text::fmt(state.ah_seen.back()));
    if (state.ref_grid.empty() || ah_new < state.ref_grid.front() ||
        ah_new > state.ref_grid.back())
        throw GridMismatch("ah=" + text::fmt(ah_new) + " outside the reference grid");

    int best = 1;
    for (std::size_t j = 0; j < k; ++j) {
        double d = q_age_new - interp_value(training.cells[j].q_age, ah_new);
        state.sq_accum[j] += d * d;
        if (state.sq_accum[j] < state.sq_accum[static_cast<std::size_t>(best) - 1])
            best = static_cast<int>(j) + 1;
    }
    state.s_seq.push_back(best);
    state.ah_seen.push_back(ah_new);
    state.ah_mass[static_cast<std::size_t>(best) - 1] += ah_new;
    state.ah_total += ah_new;
    if (state.ah_total > 0.0) {
        for (std::size_t j = 0; j < k; ++j)
            state.lambda[j] = state.ah_mass[j] / state.ah_total;
    }
    return best;
}

// Adaptive capacity estimate: q0_z times the lambda-weighted mix of the
// training cells' normalized capacities at this throughput.
inline double estimate_ct(const TrainingSet& training,
                          std::span<const double> lambda, double q0_z, double ah) {
    if (lambda.size() != training.k())
        throw DimensionMismatch(std::to_string(lambda.size()) + " weights vs " +
                                std::to_string(training.k()) + " cells");
    double sum = 0.0;
    for (double l : lambda) {
        if (l < 0.0) throw InvalidWeights("negative lambda");
        sum += l;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw InvalidWeights("lambda sums to " + text::fmt(sum));
    if (!(q0_z > 0.0)) throw NonPositiveQ0("q0_z = " + text::fmt(q0_z));

    double acc = 0.0;
    for (std::size_t j = 0; j < training.k(); ++j)
        acc += lambda[j] * interp_value(training.cells[j].q_bar, ah);
    return q0_z * acc;
}

// Flat text snapshot so an online session can resume after a restart.
inline std::string state_to_text(const ClassificationState& st) {
    std::string out;
    out += "kind = classification_state\n";
    out += "k = " + std::to_string(st.sq_accum.size()) + "\n";
    out += "n = " + std::to_string(st.s_seq.size()) + "\n";
    out += "grid_n = " + std::to_string(st.ref_grid.size()) + "\n";
    for (std::size_t i = 0; i < st.ref_grid.size(); ++i)
        out += "grid_" + std::to_string(i) + " = " + text::fmt(st.ref_grid[i]) + "\n";
    for (std::size_t j = 0; j < st.sq_accum.size(); ++j) {
        std::string sj = std::to_string(j);
        out += "sq_" + sj + " = " + text::fmt(st.sq_accum[j]) + "\n";
        out += "lambda_" + sj + " = " + text::fmt(st.lambda[j]) + "\n";
    }
    for (std::size_t i = 0; i < st.s_seq.size(); ++i) {
        std::string si = std::to_string(i);
        out += "s_" + si + " = " + std::to_string(st.s_seq[i]) + "\n";
        out += "ah_" + si + " = " + text::fmt(st.ah_seen[i]) + "\n";
    }
    return out;
}

inline ClassificationState state_from_text(const std::string& body) {
    std::map<std::string, std::string> kv;
    for (const auto& line : text::split(body, '\n')) {
        std::string t = text::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw SchemaError("state file line without '=': " + t);
        kv[text::trim(t.substr(0, eq))] = text::trim(t.substr(eq + 1));
    }
    auto need = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw SchemaError("state file missing key '" + key + "'");
        return it->second;
    };
    auto need_d = [&](const std::string& key) {
        double v;
        if (!text::parse_double(need(key), v))
            throw SchemaError("state file key '" + key + "' is not a number");
        return v;
    };
    auto need_l = [&](const std::string& key) {
        long v;
        if (!text::parse_long(need(key), v) || v < 0)
            throw SchemaError("state file key '" + key + "' is not a count");
        return v;
    };
    if (need("kind") != "classification_state") throw SchemaError("not a state file");

    long k = need_l("k"), n = need_l("n"), gn = need_l("grid_n");
    if (k < 1) throw SchemaError("state file has no cells");

    ClassificationState st;
    std::vector<double> grid;
    for (long i = 0; i < gn; ++i) grid.push_back(need_d("grid_" + std::to_string(i)));
    st.ref_grid = AhSequence(std::move(grid));
    st.ah_mass.assign(static_cast<std::size_t>(k), 0.0);
    for (long j = 0; j < k; ++j) {
        std::string sj = std::to_string(j);
        st.sq_accum.push_back(need_d("sq_" + sj));
        st.lambda.push_back(need_d("lambda_" + sj));
    }
    for (long i = 0; i < n; ++i) {
        std::string si = std::to_string(i);
        long s = need_l("s_" + si);
        if (s < 1 || s > k) throw SchemaError("classification index out of range");
        double ah = need_d("ah_" + si);
        st.s_seq.push_back(static_cast<int>(s));
        st.ah_seen.push_back(ah);
        st.ah_mass[static_cast<std::size_t>(s) - 1] += ah;
        st.ah_total += ah;
    }
    for (std::size_t i = 1; i < st.ah_seen.size(); ++i)
        if (!(st.ah_seen[i] > st.ah_seen[i - 1]))
            throw SchemaError("state file ah sequence not increasing");
    return st;
}

}  // namespace soh
