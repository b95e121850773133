#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "soh/cluster.hpp"
#include "soh/elastic_net.hpp"
#include "soh/errors.hpp"
#include "soh/features.hpp"

namespace soh {

struct FusionConfig {
    double learn_alpha = 0.0;  // 1/Ah
    double ah_max = 0.0;       // expected total throughput

    static FusionConfig from_alpha(double alpha) {
        if (!(alpha >= 0.0)) throw Error("FusionConfig: learn_alpha must be >= 0");
        FusionConfig c;
        c.learn_alpha = alpha;
        c.ah_max = alpha > 0.0 ? 1.0 / (20.0 * alpha) : 0.0;
        return c;
    }

    // Recommended default: a ramp that reaches the 0.5 cap after one
    // twentieth of the expected total throughput.
    static FusionConfig from_ah_max(double ah_max) {
        if (!(ah_max > 0.0)) throw Error("FusionConfig: ah_max must be > 0");
        FusionConfig c;
        c.ah_max = ah_max;
        c.learn_alpha = 1.0 / (20.0 * ah_max);
        return c;
    }
};

// w2 ramps linearly in accumulated throughput and saturates at an equal
// split; w1 takes the rest.
inline std::pair<double, double> fusion_weights(const FusionConfig& cfg, double ah) {
    if (!(ah >= 0.0)) throw Error("fusion_weights: ah must be >= 0");
    double w2 = std::min(cfg.learn_alpha * ah, 0.5);
    if (w2 < 0.0) w2 = 0.0;
    return {1.0 - w2, w2};
}

inline double fuse(double q_rg, double q_ct, double w1, double w2) {
    if (!(w1 >= 0.0) || !(w2 >= 0.0) || std::fabs(w1 + w2 - 1.0) > 1e-9)
        throw InvalidWeights("w1=" + text::fmt(w1) + " w2=" + text::fmt(w2));
    return w1 * q_rg + w2 * q_ct;
}

// One online estimate, also a row of the session's estimate log.
struct FusionEstimate {
    double ah = 0.0;
    double q_rg = 0.0;
    double q_ct = 0.0;
    double w1 = 1.0;
    double w2 = 0.0;
    double q_hat = 0.0;
    int s_n = 0;
    std::vector<double> lambda;
    // Theorem-2 slack when truth is known: the weighted error bound minus the
    // realized error. NaN without truth; never negative when the bound holds.
    double bibo_margin = std::numeric_limits<double>::quiet_NaN();
};

// Online per-cell estimation loop: each aging cycle advances the classifier,
// refreshes the forgetting factors, and fuses the offline regression estimate
// with the clustering estimate under the ramped weights.
class FusionSession {
public:
    FusionSession(EnrModel model, const TrainingSet& training, FusionConfig config,
                  double q0_z, FeatureSchema schema = FeatureSchema{})
        : model_(std::move(model)),
          training_(training),
          state_(training),
          config_(config),
          q0_z_(q0_z),
          schema_(std::move(schema)) {
        if (!(q0_z_ > 0.0)) throw NonPositiveQ0("q0_z = " + text::fmt(q0_z_));
    }

    const ClassificationState& state() const { return state_; }
    ClassificationState& mutable_state() { return state_; }
    const std::vector<FusionEstimate>& log() const { return log_; }
    double q0_z() const { return q0_z_; }

    // Records a cycle as the feature-lag predecessor without estimating from
    // it, so a cycle that cannot be classified still feeds the next cycle's
    // lagged features.
    void prime_lag(const CycleRecord& cycle) {
        if (cycle.kind != CycleKind::aging)
            throw WrongCycleType(std::string("lag cycles must be aging, got ") +
                                 to_string(cycle.kind));
        prev_cycle_storage_ = cycle;
        prev_aging_ = &prev_cycle_storage_;
    }

    // q_true, when supplied, is the cell's actual capacity at this cycle's
    // Ah and only feeds the bibo_margin diagnostic.
    FusionEstimate step(const CycleRecord& cycle,
                        std::optional<double> q_true = std::nullopt) {
        if (cycle.kind != CycleKind::aging)
            throw WrongCycleType(std::string("fusion steps on aging cycles, got ") +
                                 to_string(cycle.kind));
        double ah = cycle.ah_end;
        if (!log_.empty() && !(ah > log_.back().ah))
            throw StaleCycle("cycle at ah=" + text::fmt(ah) +
                             " does not advance past " + text::fmt(log_.back().ah));

        FeatureVector fv = build_feature_vector(cycle, prev_aging_, schema_);
        double q_age = fv.entries.front();

        FusionEstimate est;
        est.ah = ah;
        est.s_n = classify_step(state_, training_, q_age, ah);
        est.lambda = lambda_weights(state_, training_.k());
        est.q_ct = estimate_ct(training_, est.lambda, q0_z_, ah);
        est.q_rg = model_.predict(fv.entries);
        auto [w1, w2] = fusion_weights(config_, ah);
        est.w1 = w1;
        est.w2 = w2;
        est.q_hat = fuse(est.q_rg, est.q_ct, w1, w2);
        if (q_true.has_value()) {
            double bound = w1 * std::fabs(est.q_rg - *q_true) +
                           w2 * std::fabs(est.q_ct - *q_true);
            est.bibo_margin = bound - std::fabs(est.q_hat - *q_true);
        }

        prev_cycle_storage_ = cycle;
        prev_aging_ = &prev_cycle_storage_;
        log_.push_back(est);
        return est;
    }

private:
    EnrModel model_;
    const TrainingSet& training_;
    ClassificationState state_;
    FusionConfig config_;
    double q0_z_;
    FeatureSchema schema_;
    CycleRecord prev_cycle_storage_;
    const CycleRecord* prev_aging_ = nullptr;
    std::vector<FusionEstimate> log_;
};

}  // namespace soh
