// Command-line surface: synthetic fleet generation, telemetry ingestion,
// offline training, online replay, leave-one-out evaluation, the alpha
// sensitivity sweep, and report emission.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "soh/soh.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string data_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

soh::RunConfig load_config(const CommonArgs& args) {
    soh::RunConfig cfg;
    if (!args.config_path.empty())
        cfg = soh::parse_config(soh::read_text_file(args.config_path));
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (!args.data_path.empty()) cfg.data_dir = args.data_path;
    if (args.seed_set) cfg.fleet.seed = args.seed;
    return cfg;
}

std::map<std::string, soh::CellData> load_cells(const soh::RunConfig& cfg) {
    if (cfg.data_dir.empty()) throw soh::IoError("no input data path given (--data)");
    auto streams = soh::ingest(cfg.data_dir);
    soh::FeatureSchema schema(cfg.feature_names);
    return soh::process_streams(streams, cfg.seg, schema);
}

void require_out(const soh::RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw soh::IoError("no output directory given (--out)");
}

int cmd_synth(const CommonArgs& args) {
    soh::RunConfig cfg = load_config(args);
    require_out(cfg);
    soh::Fleet fleet = soh::generate(cfg.fleet);
    soh::write_fleet(fleet, cfg.out_dir);
    std::size_t rows = 0;
    for (const auto& c : fleet.cells) rows += c.samples.size();
    std::printf("wrote %zu cells (%zu samples, seed %llu) to %s\n", fleet.cells.size(),
                rows, static_cast<unsigned long long>(fleet.spec.seed),
                cfg.out_dir.c_str());
    return 0;
}

int cmd_ingest(const CommonArgs& args) {
    soh::RunConfig cfg = load_config(args);
    auto cells = load_cells(cfg);
    std::printf("%-12s %8s %7s %7s %5s %10s %12s\n", "cell", "samples", "cycles",
                "aging", "c20", "q0_ah", "span_ah");
    std::string csv = "cell_id,cycle_index,kind,t_start,t_end,ah_start,ah_end,q_ah\n";
    for (const auto& [id, cd] : cells) {
        std::size_t n_samples = 0;
        for (const auto& c : cd.cycles) n_samples += c.samples.size();
        std::printf("%-12s %8zu %7zu %7zu %5zu %10.4f %12.2f\n", id.c_str(), n_samples,
                    cd.cycles.size(), cd.aging_cycles.size(), cd.capacity_traj.size(),
                    cd.q0, cd.q_age_traj.empty() ? 0.0 : cd.q_age_traj.ah.back());
        for (const auto& c : cd.cycles) {
            std::string q;
            if (c.kind == soh::CycleKind::aging) q = soh::text::fmt(soh::cycle_q_age(c));
            else if (c.kind == soh::CycleKind::c20_capacity)
                q = soh::text::fmt(soh::cycle_q_c20(c));
            csv += id + "," + std::to_string(c.cycle_index) + "," + soh::to_string(c.kind) +
                   "," + soh::text::fmt(c.samples.front().t_s) + "," +
                   soh::text::fmt(c.samples.back().t_s) + "," + soh::text::fmt(c.ah_start) +
                   "," + soh::text::fmt(c.ah_end) + "," + q + "\n";
        }
    }
    if (!cfg.out_dir.empty())
        soh::write_text_file(std::filesystem::path(cfg.out_dir) / "cycles.csv", csv);
    return 0;
}

int cmd_fit_offline(const CommonArgs& args) {
    soh::RunConfig cfg = load_config(args);
    require_out(cfg);
    auto cells = load_cells(cfg);
    soh::FeatureSchema schema(cfg.feature_names);
    std::vector<const soh::CellData*> all;
    for (const auto& [id, cd] : cells) all.push_back(&cd);

    soh::EnrTraining tr = soh::build_enr_training(all, schema);
    soh::EnrModel model = soh::fit_cv(tr.x, tr.y, cfg.lambda_grid, cfg.mix_grid,
                                      cfg.cv_folds, soh::pipeline_fit_options());
    model.feature_names = tr.names;

    std::vector<double> pred;
    for (std::size_t i = 0; i < tr.x.rows; ++i) {
        std::vector<double> row(tr.x.cols);
        for (std::size_t j = 0; j < tr.x.cols; ++j) row[j] = tr.x.at(i, j);
        pred.push_back(model.predict(row));
    }
    soh::MetricReport rep = soh::evaluate(tr.y, pred);

    auto path = std::filesystem::path(cfg.out_dir) / "model.txt";
    soh::write_text_file(path, soh::model_to_text(model));
    std::printf("fit %zu rows: lambda_reg=%g mix=%g in-sample rmse=%.4f Ah "
                "rmspe=%.4f %% -> %s\n",
                tr.x.rows, model.lambda_reg, model.mix, rep.rmse, rep.rmspe,
                path.string().c_str());
    return 0;
}

int cmd_run_online(const CommonArgs& args, const std::string& test_cell,
                   const std::string& model_path, const std::string& truth_path) {
    soh::RunConfig cfg = load_config(args);
    require_out(cfg);
    auto cells = load_cells(cfg);
    auto it = cells.find(test_cell);
    if (it == cells.end()) throw soh::EmptyState("unknown test cell " + test_cell);
    if (cells.size() < 2) throw soh::DimensionMismatch("need at least one training cell");

    soh::FeatureSchema schema(cfg.feature_names);
    std::vector<const soh::CellData*> train;
    for (const auto& [id, cd] : cells)
        if (id != test_cell) train.push_back(&cd);

    soh::EnrModel model;
    if (!model_path.empty()) {
        model = soh::model_from_text(soh::read_text_file(model_path));
    } else {
        soh::EnrTraining tr = soh::build_enr_training(train, schema);
        model = soh::fit_cv(tr.x, tr.y, cfg.lambda_grid, cfg.mix_grid, cfg.cv_folds,
                            soh::pipeline_fit_options());
        model.feature_names = tr.names;
    }

    soh::TrainingSet ts = soh::build_training_set(train, cfg.grid_points);
    soh::FusionConfig fusion = soh::resolve_fusion_config(cfg, train);

    soh::Trajectory truth;
    bool have_truth = false;
    if (!truth_path.empty()) {
        auto rows = soh::truth_from_csv(soh::read_text_file(truth_path), truth_path);
        truth = soh::truth_trajectory(rows, test_cell);
        have_truth = true;
    }

    soh::ReplayResult rr = soh::replay(it->second, model, ts, fusion, schema,
                                       have_truth ? &truth : nullptr);
    auto out = std::filesystem::path(cfg.out_dir);
    soh::write_text_file(out / (test_cell + "_estimates.csv"),
                         soh::estimate_log_to_csv(rr.log, ts.k()));
    soh::write_text_file(out / (test_cell + "_state.txt"), soh::state_to_text(rr.state));
    soh::emit_report(out, test_cell, rr.log, ts.k(), have_truth ? &truth : nullptr);

    soh::RptScores rs = soh::score_at_rpts(it->second, rr.log);
    soh::MetricReport rep = soh::evaluate(rs.q_true, rs.q_hat);
    std::printf("replayed %zu cycles (%zu skipped) for %s: rmspe at %zu capacity tests "
                "= %.4f %%\n",
                rr.log.size(), rr.skipped, test_cell.c_str(), rep.m, rep.rmspe);
    return 0;
}

int cmd_leave_one_out(const CommonArgs& args) {
    soh::RunConfig cfg = load_config(args);
    auto cells = load_cells(cfg);
    soh::LooResult res = soh::leave_one_out(cells, cfg);

    std::printf("%-12s %16s %16s %8s\n", "cell", "adaptive_rmspe%", "enr_rmspe%", "skipped");
    std::string csv = "cell_id,rmspe_adaptive,rmspe_enr,mape_adaptive,mape_enr,"
                      "rmse_adaptive,rmse_enr,skipped\n";
    for (const auto& r : res.rows) {
        std::printf("%-12s %16.4f %16.4f %8zu\n", r.cell_id.c_str(), r.adaptive.rmspe,
                    r.enr_only.rmspe, r.skipped);
        csv += r.cell_id + "," + soh::text::fmt(r.adaptive.rmspe) + "," +
               soh::text::fmt(r.enr_only.rmspe) + "," + soh::text::fmt(r.adaptive.mape) +
               "," + soh::text::fmt(r.enr_only.mape) + "," +
               soh::text::fmt(r.adaptive.rmse) + "," + soh::text::fmt(r.enr_only.rmse) +
               "," + std::to_string(r.skipped) + "\n";
    }
    std::printf("%-12s %16.4f %16.4f\n", "mean", res.mean_rmspe_adaptive,
                res.mean_rmspe_enr);
    if (!cfg.out_dir.empty()) {
        soh::write_text_file(std::filesystem::path(cfg.out_dir) / "leave_one_out.csv", csv);
        std::string sum = "mean_rmspe_adaptive_pct: " +
                          soh::text::fmt_fixed(res.mean_rmspe_adaptive, 4) + "\n" +
                          "mean_rmspe_enr_pct: " +
                          soh::text::fmt_fixed(res.mean_rmspe_enr, 4) + "\n";
        soh::write_text_file(std::filesystem::path(cfg.out_dir) / "leave_one_out_summary.txt",
                             sum);
    }
    return 0;
}

int cmd_alpha_sweep(const CommonArgs& args, const std::string& test_cell,
                    const std::string& alpha_list) {
    soh::RunConfig cfg = load_config(args);
    auto cells = load_cells(cfg);
    std::vector<double> alphas;
    for (const auto& tok : soh::text::split(alpha_list, ',')) {
        double a;
        if (!soh::text::parse_double(tok, a))
            throw soh::SchemaError("bad alpha '" + soh::text::trim(tok) + "'");
        alphas.push_back(a);
    }
    auto points = soh::alpha_sweep(cells, test_cell, alphas, cfg);

    std::printf("%14s %12s\n", "alpha_per_ah", "rmse_ah");
    std::string csv = "alpha,rmse_ah\n";
    for (const auto& p : points) {
        std::printf("%14g %12.6f\n", p.alpha, p.rmse_ah);
        csv += soh::text::fmt(p.alpha) + "," + soh::text::fmt(p.rmse_ah) + "\n";
    }
    if (!cfg.out_dir.empty())
        soh::write_text_file(std::filesystem::path(cfg.out_dir) / "alpha_sweep.csv", csv);
    return 0;
}

int cmd_report(const CommonArgs& args, const std::string& log_path,
               const std::string& truth_path, const std::string& cell_id) {
    soh::RunConfig cfg = load_config(args);
    require_out(cfg);
    auto log = soh::estimate_log_from_csv(soh::read_text_file(log_path), log_path);
    std::size_t k = log.front().lambda.size();

    soh::Trajectory truth;
    bool have_truth = false;
    if (!truth_path.empty()) {
        if (cell_id.empty())
            throw soh::SchemaError("--truth requires --cell to select the truth rows");
        auto rows = soh::truth_from_csv(soh::read_text_file(truth_path), truth_path);
        truth = soh::truth_trajectory(rows, cell_id);
        have_truth = true;
    }
    std::string name = cell_id.empty() ? "session" : cell_id;
    soh::emit_report(cfg.out_dir, name, log, k, have_truth ? &truth : nullptr);
    std::printf("report for %s (%zu estimates) -> %s\n", name.c_str(), log.size(),
                cfg.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Second-life battery state-of-health estimation toolkit"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string test_cell, model_path, truth_path, alpha_list, log_path, cell_id;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "key = value config file");
        sub->add_option("--out", common.out_dir, "output directory");
        sub->add_option("--seed", common.seed, "fleet seed (synth)")
            ->each([&](const std::string&) { common.seed_set = true; });
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic fleet");
    add_common(synth);

    CLI::App* ingest = app.add_subcommand("ingest", "validate and summarize telemetry");
    add_common(ingest);
    ingest->add_option("--data", common.data_path, "telemetry CSV file or directory");

    CLI::App* fit = app.add_subcommand("fit-offline", "train the regression model");
    add_common(fit);
    fit->add_option("--data", common.data_path, "telemetry CSV file or directory");

    CLI::App* run = app.add_subcommand("run-online", "replay one cell online");
    add_common(run);
    run->add_option("--data", common.data_path, "telemetry CSV file or directory");
    run->add_option("--test-cell", test_cell, "cell id to replay")->required();
    run->add_option("--model", model_path, "pre-trained model file");
    run->add_option("--truth", truth_path, "ground-truth CSV");

    CLI::App* loo = app.add_subcommand("leave-one-out", "evaluate all cells");
    add_common(loo);
    loo->add_option("--data", common.data_path, "telemetry CSV file or directory");

    CLI::App* sweep = app.add_subcommand("alpha-sweep", "learning-rate sensitivity");
    add_common(sweep);
    sweep->add_option("--data", common.data_path, "telemetry CSV file or directory");
    sweep->add_option("--test-cell", test_cell, "cell id to replay")->required();
    sweep->add_option("--alphas", alpha_list, "comma-separated alpha values")->required();

    CLI::App* report = app.add_subcommand("report", "emit report files from a log");
    add_common(report);
    report->add_option("--log", log_path, "estimate log CSV")->required();
    report->add_option("--truth", truth_path, "ground-truth CSV");
    report->add_option("--cell", cell_id, "cell id for truth lookup");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(common);
        if (ingest->parsed()) return cmd_ingest(common);
        if (fit->parsed()) return cmd_fit_offline(common);
        if (run->parsed()) return cmd_run_online(common, test_cell, model_path, truth_path);
        if (loo->parsed()) return cmd_leave_one_out(common);
        if (sweep->parsed()) return cmd_alpha_sweep(common, test_cell, alpha_list);
        if (report->parsed()) return cmd_report(common, log_path, truth_path, cell_id);
    } catch (const soh::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
