#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "soh/cluster.hpp"
#include "soh/config.hpp"
#include "soh/elastic_net.hpp"
#include "soh/errors.hpp"
#include "soh/features.hpp"
#include "soh/fusion.hpp"
#include "soh/io.hpp"
#include "soh/metrics.hpp"
#include "soh/trajectory.hpp"

namespace soh {

// Everything the estimators need from one cell's raw stream.
struct CellData {
    std::string cell_id;
    std::vector<CycleRecord> cycles;
    std::vector<std::size_t> aging_cycles;  // indices into cycles
    std::vector<FeatureVector> features;    // one per aging cycle
    Trajectory q_age_traj;                  // (cycle-end ah, q_age)
    Trajectory capacity_traj;               // (cycle-end ah, measured capacity)
    double q0 = 0.0;                        // first measured capacity
};

inline CellData process_cell(const std::string& cell_id,
                             std::span<const TimeSample> samples,
                             const SegmentationConfig& seg,
                             const FeatureSchema& schema) {
    CellData cd;
    cd.cell_id = cell_id;
    cd.cycles = segment_cycles(samples, seg, cell_id);

    std::vector<double> age_ah, age_q, cap_ah, cap_q;
    const CycleRecord* prev_aging = nullptr;
    for (std::size_t i = 0; i < cd.cycles.size(); ++i) {
        const CycleRecord& c = cd.cycles[i];
        if (c.kind == CycleKind::aging) {
            cd.aging_cycles.push_back(i);
            cd.features.push_back(build_feature_vector(c, prev_aging, schema));
            age_ah.push_back(c.ah_end);
            age_q.push_back(cycle_q_age(c));
            prev_aging = &c;
        } else if (c.kind == CycleKind::c20_capacity) {
            cap_ah.push_back(c.ah_end);
            cap_q.push_back(cycle_q_c20(c));
        }
        // hppc / ocv cycles are tagged but feed nothing downstream
    }
    if (cap_q.empty())
        throw EmptyState("cell " + cell_id + " has no capacity-test cycle");
    cd.q0 = cap_q.front();
    if (!(cd.q0 > 0.0)) throw NonPositiveQ0("cell " + cell_id + " measured q0 <= 0");
    cd.q_age_traj = Trajectory(AhSequence(age_ah), age_q);
    cd.capacity_traj = Trajectory(AhSequence(cap_ah), cap_q);
    return cd;
}

inline std::map<std::string, CellData> process_streams(
    const std::map<std::string, std::vector<TimeSample>>& streams,
    const SegmentationConfig& seg, const FeatureSchema& schema) {
    std::map<std::string, CellData> out;
    for (const auto& [id, samples] : streams)
        out.emplace(id, process_cell(id, samples, seg, schema));
    return out;
}

// Interpolation that forgives abscissae a hair outside the span (rounding
// from two independently accumulated Ah integrals), never real gaps.
inline double interp_value_clamped(const Trajectory& traj, double x,
                                   double rel_eps = 1e-9) {
    if (traj.empty()) throw OutOfRangeGrid("empty trajectory");
    double lo = traj.ah.front(), hi = traj.ah.back();
    double eps = rel_eps * std::max(1.0, hi - lo);
    if (x < lo && x >= lo - eps) x = lo;
    if (x > hi && x <= hi + eps) x = hi;
    return interp_value(traj, x);
}

// ---- offline regression training -------------------------------------------

// Lag features can be exactly collinear on a fixed-current fleet (charge per
// cycle determines duration), and the solver's equalization of a duplicated
// pair needs sweeps proportional to 1/(lambda_reg(1-mix)). The small end of
// the default lambda grid then overruns the solver's stock budget, so every
// pipeline fit runs with this raised one.
inline FitOptions pipeline_fit_options() {
    FitOptions opts;
    opts.max_sweeps = 4000000;
    return opts;
}

struct EnrTraining {
    Matrix x;
    std::vector<double> y;   // capacity labels, Ah
    std::vector<double> ah;  // row abscissa (rows sorted ascending)
    std::vector<std::string> names;
};

// Rows: every training cell's aging-cycle feature vector, labeled with the
// cell's measured capacity interpolated at that cycle's Ah, merged across
// cells and sorted by Ah so CV folds stay contiguous in life.
inline EnrTraining build_enr_training(std::span<const CellData* const> cells,
                                      const FeatureSchema& schema) {
    struct Row {
        double ah;
        double y;
        const std::vector<double>* x;
    };
    std::vector<Row> rows;
    for (const CellData* cd : cells) {
        for (std::size_t i = 0; i < cd->features.size(); ++i) {
            const FeatureVector& fv = cd->features[i];
            if (fv.ah < cd->capacity_traj.ah.front() ||
                fv.ah > cd->capacity_traj.ah.back())
                continue;  // no capacity label bracketing this cycle
            rows.push_back({fv.ah, interp_value(cd->capacity_traj, fv.ah), &fv.entries});
        }
    }
    if (rows.size() < 2) throw EmptyState("fewer than 2 labeled training rows");
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.ah < b.ah; });

    EnrTraining tr;
    tr.names = schema.concatenated_names();
    tr.x = Matrix(rows.size(), tr.names.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].x->size() != tr.names.size())
            throw DimensionMismatch("feature vector length drifted across cells");
        for (std::size_t j = 0; j < tr.names.size(); ++j)
            tr.x.at(i, j) = (*rows[i].x)[j];
        tr.y.push_back(rows[i].y);
        tr.ah.push_back(rows[i].ah);
    }
    return tr;
}

inline TrainingSet build_training_set(std::span<const CellData* const> cells,
                                      std::size_t grid_points = 0) {
    std::vector<TrainingCell> raw;
    for (const CellData* cd : cells) {
        TrainingCell tc;
        tc.cell_id = cd->cell_id;
        tc.q_age = cd->q_age_traj;
        tc.q_bar = normalize_capacity(cd->capacity_traj, cd->q0);
        tc.q0 = cd->q0;
        tc.features = cd->features;
        raw.push_back(std::move(tc));
    }
    return TrainingSet::build(std::move(raw), grid_points);
}

// ---- online replay ----------------------------------------------------------

struct ReplayResult {
    std::vector<FusionEstimate> log;
    ClassificationState state;  // final classifier state, snapshot-ready
    std::size_t skipped = 0;    // aging cycles outside the training grid span
};

// Feeds the test cell's aging cycles through a fusion session in order.
// Cycles whose Ah falls outside the training reference grid cannot be
// classified and are skipped (they still advance the feature lag).
inline ReplayResult replay(const CellData& test, const EnrModel& model,
                           const TrainingSet& training, const FusionConfig& fusion,
                           const FeatureSchema& schema,
                           const Trajectory* truth = nullptr) {
    FusionSession session(model, training, fusion, test.q0, schema);
    ReplayResult rr;
    const CycleRecord* prev = nullptr;
    for (std::size_t idx : test.aging_cycles) {
        const CycleRecord& c = test.cycles[idx];
        if (c.ah_end < training.ref_grid.front() || c.ah_end > training.ref_grid.back()) {
            ++rr.skipped;
            prev = &c;
            continue;
        }
        if (prev != nullptr) session.prime_lag(*prev);
        prev = nullptr;
        std::optional<double> q_true;
        if (truth != nullptr && !truth->empty() && c.ah_end >= truth->ah.front() &&
            c.ah_end <= truth->ah.back())
            q_true = interp_value(*truth, c.ah_end);
        session.step(c, q_true);
    }
    rr.log = session.log();
    rr.state = session.state();
    return rr;
}

// ---- scoring ----------------------------------------------------------------

struct RptScores {
    std::vector<double> ah;
    std::vector<double> q_true;  // measured capacity at the test's own RPTs
    std::vector<double> q_hat;
    std::vector<double> q_rg;
};

// Evaluates the session log at the test cell's capacity-test points that the
// log brackets (interpolating the log, never extrapolating it).
inline RptScores score_at_rpts(const CellData& test,
                               std::span<const FusionEstimate> log) {
    if (log.empty()) throw EmptyState("empty estimate log");
    std::vector<double> la, lh, lr;
    for (const auto& e : log) {
        la.push_back(e.ah);
        lh.push_back(e.q_hat);
        lr.push_back(e.q_rg);
    }
    Trajectory hat(AhSequence(la), lh), rg(AhSequence(la), lr);

    RptScores rs;
    for (std::size_t i = 0; i < test.capacity_traj.size(); ++i) {
        double ah = test.capacity_traj.ah[i];
        if (ah < hat.ah.front() || ah > hat.ah.back()) continue;
        rs.ah.push_back(ah);
        rs.q_true.push_back(test.capacity_traj.values[i]);
        rs.q_hat.push_back(interp_value(hat, ah));
        rs.q_rg.push_back(interp_value(rg, ah));
    }
    if (rs.ah.empty())
        throw EmptyState("no capacity test falls inside the estimate log span");
    return rs;
}

inline FusionConfig resolve_fusion_config(const RunConfig& cfg,
                                          std::span<const CellData* const> train_cells) {
    if (cfg.learn_alpha >= 0.0) return FusionConfig::from_alpha(cfg.learn_alpha);
    if (cfg.ah_max > 0.0) return FusionConfig::from_ah_max(cfg.ah_max);
    double span = 0.0;
    for (const CellData* cd : train_cells)
        span = std::max(span, cd->q_age_traj.ah.back());
    if (!(span > 0.0)) throw EmptyState("cannot infer ah_max from empty training data");
    return FusionConfig::from_ah_max(span);
}

// ---- leave-one-out ----------------------------------------------------------

struct LooRow {
    std::string cell_id;
    MetricReport adaptive;
    MetricReport enr_only;
    std::size_t skipped = 0;
};

struct LooResult {
    std::vector<LooRow> rows;
    double mean_rmspe_adaptive = 0.0;
    double mean_rmspe_enr = 0.0;
};

inline LooResult leave_one_out(const std::map<std::string, CellData>& cells,
                               const RunConfig& cfg) {
    if (cells.size() < 3)
        throw DimensionMismatch("leave-one-out needs at least 3 cells, got " +
                                std::to_string(cells.size()));
    FeatureSchema schema(cfg.feature_names);
    LooResult result;
    for (const auto& [test_id, test] : cells) {
        std::vector<const CellData*> train;
        for (const auto& [id, cd] : cells)
            if (id != test_id) train.push_back(&cd);

        EnrTraining tr = build_enr_training(train, schema);
        EnrModel model = fit_cv(tr.x, tr.y, cfg.lambda_grid, cfg.mix_grid, cfg.cv_folds,
                                pipeline_fit_options());
        model.feature_names = tr.names;
        TrainingSet ts = build_training_set(train, cfg.grid_points);
        FusionConfig fusion = resolve_fusion_config(cfg, train);

        ReplayResult rr = replay(test, model, ts, fusion, schema);
        RptScores rs = score_at_rpts(test, rr.log);

        LooRow row;
        row.cell_id = test_id;
        row.adaptive = evaluate(rs.q_true, rs.q_hat);
        row.enr_only = evaluate(rs.q_true, rs.q_rg);
        row.skipped = rr.skipped;
        result.rows.push_back(std::move(row));
    }
    for (const auto& r : result.rows) {
        result.mean_rmspe_adaptive += r.adaptive.rmspe;
        result.mean_rmspe_enr += r.enr_only.rmspe;
    }
    result.mean_rmspe_adaptive /= static_cast<double>(result.rows.size());
    result.mean_rmspe_enr /= static_cast<double>(result.rows.size());
    return result;
}

// ---- alpha sensitivity sweep --------------------------------------------------

struct SweepPoint {
    double alpha = 0.0;
    double rmse_ah = 0.0;
};

// Replays the held-out cell once per alpha against a fixed offline model and
// training set (neither depends on alpha) and reports fused-estimate RMSE at
// the cell's capacity tests.
inline std::vector<SweepPoint> alpha_sweep(const std::map<std::string, CellData>& cells,
                                           const std::string& test_id,
                                           std::span<const double> alphas,
                                           const RunConfig& cfg) {
    if (alphas.empty()) throw EmptyState("alpha list is empty");
    for (double a : alphas)
        if (!(a >= 0.0)) throw Error("alpha_sweep: alphas must be >= 0");
    auto it = cells.find(test_id);
    if (it == cells.end()) throw EmptyState("unknown test cell " + test_id);
    if (cells.size() < 3)
        throw DimensionMismatch("alpha sweep needs at least 3 cells");

    FeatureSchema schema(cfg.feature_names);
    std::vector<const CellData*> train;
    for (const auto& [id, cd] : cells)
        if (id != test_id) train.push_back(&cd);

    EnrTraining tr = build_enr_training(train, schema);
    EnrModel model = fit_cv(tr.x, tr.y, cfg.lambda_grid, cfg.mix_grid, cfg.cv_folds,
                            pipeline_fit_options());
    model.feature_names = tr.names;
    TrainingSet ts = build_training_set(train, cfg.grid_points);

    std::vector<SweepPoint> out;
    for (double a : alphas) {
        ReplayResult rr = replay(it->second, model, ts, FusionConfig::from_alpha(a), schema);
        RptScores rs = score_at_rpts(it->second, rr.log);
        out.push_back({a, rmse(rs.q_hat, rs.q_true)});
    }
    return out;
}

// ---- report emission ----------------------------------------------------------

// Writes the per-cell report triple (trajectories, pointwise errors, S_n
// sequence) plus a summary. Log rows without bracketing truth are left out
// of the error CSV and counted in the summary.
inline void emit_report(const std::filesystem::path& out_dir, const std::string& cell_id,
                        std::span<const FusionEstimate> log, std::size_t k,
                        const Trajectory* truth) {
    if (log.empty()) throw EmptyState("empty estimate log");
    namespace fs = std::filesystem;
    fs::path base = out_dir / cell_id;

    write_text_file(fs::path(base.string() + "_trajectories.csv"),
                    estimate_log_to_csv(log, k));

    std::string sn = "ah,s_n\n";
    for (const auto& e : log)
        sn += text::fmt(e.ah) + "," + std::to_string(e.s_n) + "\n";
    write_text_file(fs::path(base.string() + "_sn.csv"), sn);

    std::string err = "ah,q_true,q_hat,q_rg,err_ah,err_pct\n";
    std::vector<double> yt, yh, yr;
    std::size_t omitted = 0;
    for (const auto& e : log) {
        if (truth == nullptr || truth->empty() || e.ah < truth->ah.front() ||
            e.ah > truth->ah.back()) {
            ++omitted;
            continue;
        }
        double q = interp_value(*truth, e.ah);
        err += text::fmt(e.ah) + "," + text::fmt(q) + "," + text::fmt(e.q_hat) + "," +
               text::fmt(e.q_rg) + "," + text::fmt(e.q_hat - q) + "," +
               text::fmt((e.q_hat - q) / q * 100.0) + "\n";
        yt.push_back(q);
        yh.push_back(e.q_hat);
        yr.push_back(e.q_rg);
    }
    write_text_file(fs::path(base.string() + "_errors.csv"), err);

    std::string sum;
    sum += "cell: " + cell_id + "\n";
    sum += "estimates: " + std::to_string(log.size()) + "\n";
    sum += "without_truth: " + std::to_string(omitted) + "\n";
    if (!yt.empty()) {
        MetricReport fused = evaluate(yt, yh);
        MetricReport rg = evaluate(yt, yr);
        sum += "fused_mape_pct: " + text::fmt_fixed(fused.mape, 4) + "\n";
        sum += "fused_rmse_ah: " + text::fmt_fixed(fused.rmse, 4) + "\n";
        sum += "fused_rmspe_pct: " + text::fmt_fixed(fused.rmspe, 4) + "\n";
        sum += "enr_mape_pct: " + text::fmt_fixed(rg.mape, 4) + "\n";
        sum += "enr_rmse_ah: " + text::fmt_fixed(rg.rmse, 4) + "\n";
        sum += "enr_rmspe_pct: " + text::fmt_fixed(rg.rmspe, 4) + "\n";
    }
    write_text_file(fs::path(base.string() + "_summary.txt"), sum);
}

// Truth trajectory for one cell out of the truth CSV rows.
inline Trajectory truth_trajectory(std::span<const TruthRow> rows,
                                   const std::string& cell_id) {
    std::vector<double> ah, q;
    for (const auto& r : rows)
        if (r.cell_id == cell_id) {
            ah.push_back(r.ah);
            q.push_back(r.q_true);
        }
    if (ah.empty()) throw EmptyState("no truth rows for cell " + cell_id);
    return Trajectory(AhSequence(std::move(ah)), std::move(q));
}

}  // namespace soh
