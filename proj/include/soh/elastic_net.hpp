#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "soh/errors.hpp"
#include "soh/metrics.hpp"
#include "soh/text.hpp"

namespace soh {

// Dense row-major matrix, just large enough for the regression plumbing.
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

// Elastic-net model. beta applies to standardized features; predict() folds
// the scaler back in, so callers always pass raw feature values.
struct EnrModel {
    std::vector<double> beta;
    double beta0 = 0.0;
    double lambda_reg = 0.0;
    double mix = 0.0;
    std::vector<double> scaler_mean;
    std::vector<double> scaler_std;
    std::vector<std::string> feature_names;  // optional, empty when unnamed

    double predict(std::span<const double> x) const {
        if (x.size() != beta.size())
            throw DimensionMismatch("predict: " + std::to_string(x.size()) +
                                    " features vs model with " +
                                    std::to_string(beta.size()));
        double y = beta0;
        for (std::size_t j = 0; j < beta.size(); ++j)
            y += beta[j] * (x[j] - scaler_mean[j]) / scaler_std[j];
        if (!std::isfinite(y)) throw Error("predict: non-finite result");
        return y;
    }
};

struct FitOptions {
    double tol = 1e-8;             // max coefficient change per sweep
    std::size_t max_sweeps = 100000;
    std::vector<double>* objective_trace = nullptr;  // per-sweep objective, for tests
    // Starting coefficients on the standardized scale, e.g. the solution of a
    // neighboring lambda. Exactly collinear feature pairs equalize at a rate
    // proportional to the l2 penalty, so a cold start can dominate the sweep
    // count; a warm start along a lambda path removes that cost.
    const std::vector<double>* warm_start = nullptr;
};

namespace detail {

inline double soft_threshold(double z, double g) {
    if (z > g) return z - g;
    if (z < -g) return z + g;
    return 0.0;
}

}  // namespace detail

// Minimize (1/2n)*||Y - X*beta - beta0*1||^2
//        + lambda_reg*((1-mix)/2*||beta||_2^2 + mix*||beta||_1)
// by cyclic coordinate descent with soft-thresholding on standardized columns.
inline EnrModel fit(const Matrix& X, std::span<const double> Y,
                    double lambda_reg, double mix, const FitOptions& opts = {}) {
    const std::size_t n = X.rows, m = X.cols;
    if (Y.size() != n)
        throw DimensionMismatch("fit: " + std::to_string(n) + " rows vs " +
                                std::to_string(Y.size()) + " targets");
    if (n < 2 || m < 1)
        throw DimensionMismatch("fit: need n >= 2 and m >= 1, got n=" +
                                std::to_string(n) + " m=" + std::to_string(m));
    if (!(lambda_reg >= 0.0) || !(mix >= 0.0 && mix <= 1.0))
        throw Error("fit: lambda_reg must be >= 0 and mix in [0,1]");
    for (double v : X.a)
        if (!std::isfinite(v)) throw Error("fit: non-finite feature");
    for (double v : Y)
        if (!std::isfinite(v)) throw Error("fit: non-finite target");

    EnrModel model;
    model.lambda_reg = lambda_reg;
    model.mix = mix;
    model.scaler_mean.assign(m, 0.0);
    model.scaler_std.assign(m, 1.0);
    model.beta.assign(m, 0.0);

    // Column standardization with the population standard deviation.
    // Constant columns keep std = 1 and their coefficient pinned at 0.
    std::vector<bool> constant(m, false);
    for (std::size_t j = 0; j < m; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += X.at(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = X.at(i, j) - mean;
            var += d * d;
        }
        double sd = std::sqrt(var / static_cast<double>(n));
        model.scaler_mean[j] = mean;
        if (sd < 1e-12) {
            constant[j] = true;
        } else {
            model.scaler_std[j] = sd;
        }
    }

    Matrix Xs(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            Xs.at(i, j) = constant[j]
                              ? 0.0
                              : (X.at(i, j) - model.scaler_mean[j]) / model.scaler_std[j];

    double y_mean = 0.0;
    for (double v : Y) y_mean += v;
    y_mean /= static_cast<double>(n);
    model.beta0 = y_mean;

    const double inv_n = 1.0 / static_cast<double>(n);

    // Covariance form of the coordinate updates: with c_j = (1/n)Xs_j'Yc and
    // G = (1/n)Xs'Xs, the per-coordinate gradient (1/n)Xs_j'r equals
    // c_j - (G beta)_j, so a sweep costs O(m^2) instead of O(n m). Duplicated
    // columns force sweep counts proportional to 1/(lambda_reg(1-mix)), which
    // makes cheap sweeps matter.
    std::vector<double> c(m, 0.0), gram(m * m, 0.0), gb(m, 0.0);
    double y2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double yc = Y[i] - y_mean;
        y2 += yc * yc;
        for (std::size_t j = 0; j < m; ++j) c[j] += Xs.at(i, j) * yc;
    }
    for (double& v : c) v *= inv_n;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a; b < m; ++b) {
            double g = 0.0;
            for (std::size_t i = 0; i < n; ++i) g += Xs.at(i, a) * Xs.at(i, b);
            g *= inv_n;
            gram[a * m + b] = g;
            gram[b * m + a] = g;
        }

    if (opts.warm_start) {
        if (opts.warm_start->size() != m)
            throw DimensionMismatch("fit: warm start has " +
                                    std::to_string(opts.warm_start->size()) +
                                    " coefficients for " + std::to_string(m) +
                                    " features");
        for (std::size_t j = 0; j < m; ++j)
            if (!constant[j]) model.beta[j] = (*opts.warm_start)[j];
        for (std::size_t k = 0; k < m; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += gram[k * m + j] * model.beta[j];
            gb[k] = acc;
        }
    }

    const double l1 = lambda_reg * mix;
    const double l2 = lambda_reg * (1.0 - mix);

    auto objective = [&]() {
        // (1/2n)||Yc - Xs beta||^2 expanded through the Gram matrix.
        double bc = 0.0, bgb = 0.0, pen1 = 0.0, pen2 = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            bc += model.beta[j] * c[j];
            bgb += model.beta[j] * gb[j];
            pen1 += std::fabs(model.beta[j]);
            pen2 += model.beta[j] * model.beta[j];
        }
        return 0.5 * inv_n * y2 - bc + 0.5 * bgb + l2 * 0.5 * pen2 + l1 * pen1;
    };

    double prev_obj = objective();
    if (opts.objective_trace) {
        opts.objective_trace->clear();
        opts.objective_trace->push_back(prev_obj);
    }

    for (std::size_t sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (constant[j]) continue;
            double z = model.beta[j] + c[j] - gb[j];
            double b_new = detail::soft_threshold(z, l1) / (1.0 + l2);
            double delta = b_new - model.beta[j];
            if (delta != 0.0) {
                const double* row = &gram[j * m];
                for (std::size_t k = 0; k < m; ++k) gb[k] += delta * row[k];
                model.beta[j] = b_new;
                max_delta = std::max(max_delta, std::fabs(delta));
            }
        }
        double obj = objective();
        if (obj > prev_obj + 1e-10 * (1.0 + std::fabs(prev_obj)))
            throw Error("fit: objective increased from " + text::fmt(prev_obj) +
                        " to " + text::fmt(obj));
        prev_obj = obj;
        if (opts.objective_trace) opts.objective_trace->push_back(obj);
        if (max_delta < opts.tol) return model;
    }
    throw DidNotConverge("coordinate descent did not reach tol=" + text::fmt(opts.tol) +
                         " within " + std::to_string(opts.max_sweeps) + " sweeps");
}

// Grid search over (lambda_reg, mix) by k-fold cross-validation with
// contiguous folds (the rows are a time series; shuffling would leak),
// then a refit on all rows.
inline EnrModel fit_cv(const Matrix& X, std::span<const double> Y,
                       std::span<const double> lambda_grid,
                       std::span<const double> mix_grid,
                       std::size_t folds, const FitOptions& opts = {}) {
    const std::size_t n = X.rows;
    if (lambda_grid.empty() || mix_grid.empty())
        throw Error("fit_cv: empty hyperparameter grid");
    if (folds < 2 || folds > n)
        throw DimensionMismatch("fit_cv: folds=" + std::to_string(folds) +
                                " outside [2, n=" + std::to_string(n) + "]");

    const std::size_t nl = lambda_grid.size(), nm = mix_grid.size();
    std::vector<double> score(nl * nm, 0.0);

    // Visit lambdas largest-first inside each fold so every fit warm-starts
    // from its neighbor's solution.
    std::vector<std::size_t> order(nl);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return lambda_grid[a] > lambda_grid[b];
    });

    for (std::size_t f = 0; f < folds; ++f) {
        std::size_t lo = f * n / folds, hi = (f + 1) * n / folds;
        Matrix Xt(n - (hi - lo), X.cols);
        std::vector<double> Yt;
        Yt.reserve(Xt.rows);
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i >= lo && i < hi) continue;
            for (std::size_t j = 0; j < X.cols; ++j) Xt.at(k, j) = X.at(i, j);
            Yt.push_back(Y[i]);
            ++k;
        }
        for (std::size_t mi = 0; mi < nm; ++mi) {
            std::vector<double> carry;
            FitOptions path = opts;
            for (std::size_t li : order) {
                path.warm_start = carry.empty() ? nullptr : &carry;
                EnrModel mdl = fit(Xt, Yt, lambda_grid[li], mix_grid[mi], path);
                carry = mdl.beta;
                std::vector<double> Yv, Pv, row(X.cols);
                for (std::size_t i = lo; i < hi; ++i) {
                    for (std::size_t j = 0; j < X.cols; ++j) row[j] = X.at(i, j);
                    Pv.push_back(mdl.predict(row));
                    Yv.push_back(Y[i]);
                }
                score[li * nm + mi] += rmse(Pv, Yv);
            }
        }
    }

    // Winner scan in the caller's grid order (lambda outer, mix inner);
    // strict < keeps the first entry on ties.
    double best_rmse = 0.0, best_mix = 0.0;
    std::size_t best_li = 0;
    bool have_best = false;
    for (std::size_t li = 0; li < nl; ++li) {
        for (std::size_t mi = 0; mi < nm; ++mi) {
            double mean_rmse = score[li * nm + mi] / static_cast<double>(folds);
            if (!have_best || mean_rmse < best_rmse) {
                have_best = true;
                best_rmse = mean_rmse;
                best_mix = mix_grid[mi];
                best_li = li;
            }
        }
    }

    // Refit on all rows along the same descending path, stopping at the winner.
    std::vector<double> carry;
    FitOptions path = opts;
    EnrModel out;
    for (std::size_t li : order) {
        path.warm_start = carry.empty() ? nullptr : &carry;
        out = fit(X, Y, lambda_grid[li], best_mix, path);
        if (li == best_li) break;
        carry = out.beta;
    }
    return out;
}

// Flat key-value text round-trip for the CLI's fit-offline / run-online split.
inline std::string model_to_text(const EnrModel& m) {
    std::string out;
    out += "kind = enr_model\n";
    out += "n_features = " + std::to_string(m.beta.size()) + "\n";
    out += "beta0 = " + text::fmt(m.beta0) + "\n";
    out += "lambda_reg = " + text::fmt(m.lambda_reg) + "\n";
    out += "mix = " + text::fmt(m.mix) + "\n";
    for (std::size_t j = 0; j < m.beta.size(); ++j) {
        std::string sj = std::to_string(j);
        if (!m.feature_names.empty())
            out += "name_" + sj + " = " + m.feature_names[j] + "\n";
        out += "beta_" + sj + " = " + text::fmt(m.beta[j]) + "\n";
        out += "mean_" + sj + " = " + text::fmt(m.scaler_mean[j]) + "\n";
        out += "std_" + sj + " = " + text::fmt(m.scaler_std[j]) + "\n";
    }
    return out;
}

inline EnrModel model_from_text(const std::string& body) {
    std::map<std::string, std::string> kv;
    for (const auto& line : text::split(body, '\n')) {
        std::string t = text::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw SchemaError("model file line without '=': " + t);
        kv[text::trim(t.substr(0, eq))] = text::trim(t.substr(eq + 1));
    }
    auto need = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw SchemaError("model file missing key '" + key + "'");
        return it->second;
    };
    auto need_d = [&](const std::string& key) {
        double v;
        if (!text::parse_double(need(key), v))
            throw SchemaError("model file key '" + key + "' is not a number");
        return v;
    };
    if (need("kind") != "enr_model") throw SchemaError("not an enr_model file");

    long nf = 0;
    if (!text::parse_long(need("n_features"), nf) || nf < 1)
        throw SchemaError("bad n_features");
    EnrModel m;
    m.beta0 = need_d("beta0");
    m.lambda_reg = need_d("lambda_reg");
    m.mix = need_d("mix");
    bool named = kv.count("name_0") > 0;
    for (long j = 0; j < nf; ++j) {
        std::string sj = std::to_string(j);
        if (named) m.feature_names.push_back(need("name_" + sj));
        m.beta.push_back(need_d("beta_" + sj));
        m.scaler_mean.push_back(need_d("mean_" + sj));
        m.scaler_std.push_back(need_d("std_" + sj));
        if (!(m.scaler_std.back() > 0.0)) throw SchemaError("scaler std must be positive");
    }
    return m;
}

}  // namespace soh
