#pragma once

#include <cmath>
#include <span>
#include <string>

#include "soh/errors.hpp"

namespace soh {

namespace detail {

inline void check_metric_inputs(std::span<const double> pred,
                                std::span<const double> truth,
                                bool positive_truth) {
    if (pred.size() != truth.size())
        throw LengthMismatch(std::to_string(pred.size()) + " predictions vs " +
                             std::to_string(truth.size()) + " truth values");
    if (pred.empty()) throw LengthMismatch("empty series");
    if (positive_truth)
        for (double y : truth)
            if (!(y > 0.0))
                throw NonPositiveTruth("truth value " + std::to_string(y) +
                                       " is not positive");
}

}  // namespace detail

// Mean absolute percentage error, in percent.
inline double mape(std::span<const double> pred, std::span<const double> truth) {
    detail::check_metric_inputs(pred, truth, true);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        acc += std::fabs(pred[i] - truth[i]) / truth[i];
    return acc / static_cast<double>(pred.size()) * 100.0;
}

// Root mean square error, in the units of the inputs.
inline double rmse(std::span<const double> pred, std::span<const double> truth) {
    detail::check_metric_inputs(pred, truth, false);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double d = pred[i] - truth[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(pred.size()));
}

// Root mean square percentage error, in percent.
inline double rmspe(std::span<const double> pred, std::span<const double> truth) {
    detail::check_metric_inputs(pred, truth, true);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double r = (pred[i] - truth[i]) / truth[i];
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(pred.size())) * 100.0;
}

struct MetricReport {
    double mape = 0.0;   // percent
    double rmse = 0.0;   // Ah
    double rmspe = 0.0;  // percent
    std::size_t m = 0;
};

inline MetricReport evaluate(std::span<const double> y_true,
                             std::span<const double> y_hat) {
    MetricReport r;
    r.mape = mape(y_hat, y_true);
    r.rmse = rmse(y_hat, y_true);
    r.rmspe = rmspe(y_hat, y_true);
    r.m = y_true.size();
    return r;
}

}  // namespace soh
