#pragma once

#include <string>
#include <type_traits>
#include <vector>

#include "soh/errors.hpp"
#include "soh/features.hpp"
#include "soh/synth.hpp"
#include "soh/text.hpp"

namespace soh {

// Everything a run needs beyond the dataset itself. Loaded from a plain
// "key = value" file ('#' starts a comment); command-line flags may override
// individual fields afterwards.
struct RunConfig {
    std::string data_dir;
    std::string out_dir;

    std::vector<double> lambda_grid = {1e-4, 1e-3, 1e-2, 1e-1};
    std::vector<double> mix_grid = {0.1, 0.5, 0.9};
    std::size_t cv_folds = 5;

    // learn_alpha wins when both are set; ah_max feeds the recommended
    // default 1/(20*ah_max); with neither, the data span stands in for ah_max.
    double learn_alpha = -1.0;  // < 0 means unset
    double ah_max = -1.0;       // < 0 means unset

    SegmentationConfig seg;
    std::vector<std::string> feature_names = FeatureSchema{}.names();
    std::size_t grid_points = 0;  // 0: median aging-cycle count

    FleetSpec fleet;  // used by the synth subcommand only

    void validate() const {
        if (lambda_grid.empty() || mix_grid.empty())
            throw SchemaError("config: hyperparameter grids must be nonempty");
        if (cv_folds < 2) throw SchemaError("config: cv_folds must be >= 2");
    }
};

namespace detail {

inline std::vector<double> parse_double_list(const std::string& value,
                                             const std::string& key) {
    std::vector<double> out;
    for (const auto& tok : text::split(value, ',')) {
        double v;
        if (!text::parse_double(tok, v))
            throw SchemaError("config key '" + key + "': bad number '" +
                              text::trim(tok) + "'");
        out.push_back(v);
    }
    if (out.empty()) throw SchemaError("config key '" + key + "': empty list");
    return out;
}

}  // namespace detail

inline void apply_config_line(RunConfig& cfg, const std::string& key,
                              const std::string& value) {
    auto num = [&](double& slot) {
        if (!text::parse_double(value, slot))
            throw SchemaError("config key '" + key + "': bad number '" + value + "'");
    };
    auto count = [&](auto& slot) {
        long v;
        if (!text::parse_long(value, v) || v < 0)
            throw SchemaError("config key '" + key + "': bad count '" + value + "'");
        slot = static_cast<std::remove_reference_t<decltype(slot)>>(v);
    };

    if (key == "data_dir") cfg.data_dir = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "lambda_grid") cfg.lambda_grid = detail::parse_double_list(value, key);
    else if (key == "mix_grid") cfg.mix_grid = detail::parse_double_list(value, key);
    else if (key == "cv_folds") count(cfg.cv_folds);
    else if (key == "learn_alpha") num(cfg.learn_alpha);
    else if (key == "ah_max") num(cfg.ah_max);
    else if (key == "grid_points") count(cfg.grid_points);
    else if (key == "rest_current_a") num(cfg.seg.rest_current_a);
    else if (key == "rest_min_s") num(cfg.seg.rest_min_s);
    else if (key == "nominal_capacity_ah") {
        num(cfg.seg.nominal_capacity_ah);
        cfg.fleet.nominal_capacity_ah = cfg.seg.nominal_capacity_ah;
    } else if (key == "rate_band_lo") num(cfg.seg.rate_band_lo);
    else if (key == "rate_band_hi") num(cfg.seg.rate_band_hi);
    else if (key == "hppc_peak_ratio") num(cfg.seg.hppc_peak_ratio);
    else if (key == "features") {
        std::vector<std::string> names;
        for (const auto& tok : text::split(value, ',')) names.push_back(text::trim(tok));
        cfg.feature_names = names;
        FeatureSchema check(names);  // validates names and ordering
    } else if (key == "fleet_cells") count(cfg.fleet.n_cells);
    else if (key == "fleet_groups") count(cfg.fleet.n_groups);
    else if (key == "fleet_cycles") count(cfg.fleet.cycles_per_cell);
    else if (key == "fleet_q0_lo") num(cfg.fleet.q0_lo);
    else if (key == "fleet_q0_hi") num(cfg.fleet.q0_hi);
    else if (key == "fleet_hump_amplitude") num(cfg.fleet.hump_amplitude);
    else if (key == "fleet_fade_rate") num(cfg.fleet.fade_rate);
    else if (key == "fleet_noise_sigma") num(cfg.fleet.noise_sigma);
    else if (key == "fleet_group_separation") num(cfg.fleet.group_separation);
    else if (key == "fleet_rpt_every") count(cfg.fleet.rpt_every);
    else if (key == "fleet_aging_depth_ah") num(cfg.fleet.aging_depth_ah);
    else if (key == "fleet_aging_current_a") num(cfg.fleet.aging_current_a);
    else throw SchemaError("config: unknown key '" + key + "'");
}

inline RunConfig parse_config(const std::string& body) {
    RunConfig cfg;
    auto lines = text::split(body, '\n');
    for (std::size_t li = 0; li < lines.size(); ++li) {
        std::string t = text::trim(lines[li]);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw SchemaError("config line " + std::to_string(li + 1) +
                              ": expected 'key = value'");
        std::string key = text::trim(t.substr(0, eq));
        std::string value = text::trim(t.substr(eq + 1));
        if (key.empty()) throw SchemaError("config line " + std::to_string(li + 1) +
                                           ": empty key");
        apply_config_line(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

}  // namespace soh
