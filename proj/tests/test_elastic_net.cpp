#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "soh/elastic_net.hpp"

using namespace soh;
using Catch::Approx;

namespace {

// Dense solve with partial pivoting, kept independent of the library path so
// the closed-form fixtures are a genuine cross-check.
std::vector<double> solve_linear(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(A[r][c]) > std::fabs(A[p][c])) p = r;
        std::swap(A[c], A[p]);
        std::swap(b[c], b[p]);
        for (std::size_t r = c + 1; r < n; ++r) {
            double f = A[r][c] / A[c][c];
            for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
        x[i] = s / A[i][i];
    }
    return x;
}

struct Problem {
    Matrix X;
    std::vector<double> Y;
};

Problem random_problem(unsigned seed, std::size_t n, std::size_t m, double noise) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Problem p;
    p.X = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) p.X.at(i, j) = g(rng) * (1.0 + double(j));
        if (m >= 3) p.X.at(i, 2) = 0.5 * p.X.at(i, 0) + 0.3 * g(rng);  // correlation
    }
    for (std::size_t i = 0; i < n; ++i) {
        double y = 2.0;
        for (std::size_t j = 0; j < m; ++j)
            y += (j % 2 == 0 ? 1.5 : -0.7) / (1.0 + double(j)) * p.X.at(i, j);
        p.Y.push_back(y + noise * g(rng));
    }
    return p;
}

// Standardized design and residual recomputed from the returned model, for
// stationarity checks.
struct Standardized {
    Matrix Xs;
    std::vector<double> r;
};

Standardized standardize(const Matrix& X, std::span<const double> Y, const EnrModel& m) {
    Standardized s;
    s.Xs = Matrix(X.rows, X.cols);
    for (std::size_t i = 0; i < X.rows; ++i)
        for (std::size_t j = 0; j < X.cols; ++j)
            s.Xs.at(i, j) = (X.at(i, j) - m.scaler_mean[j]) / m.scaler_std[j];
    for (std::size_t i = 0; i < X.rows; ++i) {
        double yhat = m.beta0;
        for (std::size_t j = 0; j < X.cols; ++j) yhat += m.beta[j] * s.Xs.at(i, j);
        s.r.push_back(Y[i] - yhat);
    }
    return s;
}

}  // namespace

TEST_CASE("zero penalty reproduces ordinary least squares") {
    auto p = random_problem(31u, 10, 3, 0.05);
    EnrModel m = fit(p.X, p.Y, 0.0, 0.5);

    // Normal equations on the augmented design [1 X] in raw feature space.
    const std::size_t d = 4;
    std::vector<std::vector<double>> G(d, std::vector<double>(d, 0.0));
    std::vector<double> rhs(d, 0.0);
    for (std::size_t i = 0; i < p.X.rows; ++i) {
        std::vector<double> row = {1.0, p.X.at(i, 0), p.X.at(i, 1), p.X.at(i, 2)};
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) G[a][b] += row[a] * row[b];
            rhs[a] += row[a] * p.Y[i];
        }
    }
    auto coef = solve_linear(G, rhs);

    for (std::size_t i = 0; i < p.X.rows; ++i) {
        double ols = coef[0] + coef[1] * p.X.at(i, 0) + coef[2] * p.X.at(i, 1) +
                     coef[3] * p.X.at(i, 2);
        std::vector<double> row = {p.X.at(i, 0), p.X.at(i, 1), p.X.at(i, 2)};
        REQUIRE(m.predict(row) == Approx(ols).margin(1e-6));
    }
}

TEST_CASE("pure ridge matches the closed form on standardized data") {
    for (unsigned seed : {41u, 42u, 43u}) {
        auto p = random_problem(seed, 24, 3, 0.1);
        double lambda = 0.7;
        EnrModel m = fit(p.X, p.Y, lambda, 0.0);

        auto s = standardize(p.X, p.Y, m);
        const std::size_t nf = 3, n = p.X.rows;
        // (Xs'Xs/n + lambda I) beta = Xs'Yc/n with Yc = Y - mean(Y).
        double ymean = 0.0;
        for (double v : p.Y) ymean += v;
        ymean /= double(n);
        std::vector<std::vector<double>> A(nf, std::vector<double>(nf, 0.0));
        std::vector<double> b(nf, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < nf; ++a) {
                for (std::size_t c = 0; c < nf; ++c)
                    A[a][c] += s.Xs.at(i, a) * s.Xs.at(i, c) / double(n);
                b[a] += s.Xs.at(i, a) * (p.Y[i] - ymean) / double(n);
            }
        for (std::size_t a = 0; a < nf; ++a) A[a][a] += lambda;
        auto beta_star = solve_linear(A, b);

        for (std::size_t j = 0; j < nf; ++j)
            REQUIRE(m.beta[j] == Approx(beta_star[j]).margin(1e-6));
        REQUIRE(m.beta0 == Approx(ymean).margin(1e-12));
    }
}

TEST_CASE("overwhelming l1 penalty zeroes every coefficient") {
    auto p = random_problem(51u, 16, 4, 0.1);
    EnrModel m = fit(p.X, p.Y, 1e6, 1.0);
    for (double b : m.beta) REQUIRE(b == 0.0);
    double ymean = 0.0;
    for (double v : p.Y) ymean += v;
    REQUIRE(m.beta0 == Approx(ymean / double(p.Y.size())).margin(1e-12));
}

TEST_CASE("solutions satisfy the subgradient stationarity conditions") {
    auto grids = std::vector<std::pair<double, double>>{
        {0.05, 1.0}, {0.05, 0.5}, {0.3, 0.9}, {1.0, 0.2}};
    for (auto [lambda, mix] : grids) {
        auto p = random_problem(61u, 30, 4, 0.2);
        EnrModel m = fit(p.X, p.Y, lambda, mix);
        auto s = standardize(p.X, p.Y, m);
        double n = double(p.X.rows);
        double l1 = lambda * mix, l2 = lambda * (1.0 - mix);
        for (std::size_t j = 0; j < m.beta.size(); ++j) {
            double g = 0.0;
            for (std::size_t i = 0; i < p.X.rows; ++i) g += s.Xs.at(i, j) * s.r[i] / n;
            if (m.beta[j] != 0.0) {
                double want = l1 * (m.beta[j] > 0 ? 1.0 : -1.0) + l2 * m.beta[j];
                REQUIRE(g == Approx(want).margin(1e-6));
            } else {
                REQUIRE(std::fabs(g) <= l1 + 1e-6);
            }
        }
    }
}

TEST_CASE("objective decreases monotonically sweep over sweep") {
    auto p = random_problem(71u, 40, 5, 0.3);
    std::vector<double> trace;
    FitOptions opts;
    opts.objective_trace = &trace;
    fit(p.X, p.Y, 0.2, 0.6, opts);
    REQUIRE(trace.size() >= 2);
    for (std::size_t i = 1; i < trace.size(); ++i)
        REQUIRE(trace[i] <= trace[i - 1] + 1e-12 * (1.0 + std::fabs(trace[i - 1])));
    REQUIRE(trace.back() < trace.front());
}

TEST_CASE("fit is deterministic") {
    auto p = random_problem(81u, 20, 3, 0.1);
    EnrModel a = fit(p.X, p.Y, 0.1, 0.5);
    EnrModel b = fit(p.X, p.Y, 0.1, 0.5);
    REQUIRE(a.beta == b.beta);
    REQUIRE(a.beta0 == b.beta0);
}

TEST_CASE("constant columns are ignored without disturbing the fit") {
    auto p = random_problem(91u, 18, 2, 0.05);
    Matrix Xc(p.X.rows, 3);
    for (std::size_t i = 0; i < p.X.rows; ++i) {
        Xc.at(i, 0) = p.X.at(i, 0);
        Xc.at(i, 1) = 5.0;  // constant
        Xc.at(i, 2) = p.X.at(i, 1);
    }
    EnrModel with = fit(Xc, p.Y, 0.1, 0.5);
    EnrModel without = fit(p.X, p.Y, 0.1, 0.5);
    REQUIRE(with.beta[1] == 0.0);
    for (std::size_t i = 0; i < p.X.rows; ++i) {
        std::vector<double> r3 = {Xc.at(i, 0), 7.7, Xc.at(i, 2)};  // value irrelevant
        std::vector<double> r2 = {p.X.at(i, 0), p.X.at(i, 1)};
        REQUIRE(with.predict(r3) == Approx(without.predict(r2)).margin(1e-9));
    }
}

TEST_CASE("predict returns the intercept at the training mean") {
    auto p = random_problem(101u, 15, 3, 0.1);
    EnrModel m = fit(p.X, p.Y, 0.05, 0.5);
    REQUIRE(m.predict(m.scaler_mean) == m.beta0);
    std::vector<double> wrong(2, 0.0);
    REQUIRE_THROWS_AS(m.predict(wrong), DimensionMismatch);
}

TEST_CASE("cross-validation with one grid point equals a direct fit") {
    auto p = random_problem(111u, 25, 3, 0.2);
    std::vector<double> lg = {0.1}, mg = {0.5};
    EnrModel cv = fit_cv(p.X, p.Y, lg, mg, 5);
    EnrModel direct = fit(p.X, p.Y, 0.1, 0.5);
    REQUIRE(cv.beta == direct.beta);
    REQUIRE(cv.beta0 == direct.beta0);
    REQUIRE(cv.lambda_reg == 0.1);
    REQUIRE(cv.mix == 0.5);
}

TEST_CASE("cross-validation prefers the penalty that generalizes") {
    auto p = random_problem(121u, 30, 3, 0.0);  // noiseless linear target
    std::vector<double> lg = {1e-9, 1e3}, mg = {0.5};
    EnrModel m = fit_cv(p.X, p.Y, lg, mg, 5);
    REQUIRE(m.lambda_reg == 1e-9);
    std::vector<double> pred, truth;
    for (std::size_t i = 0; i < p.X.rows; ++i) {
        std::vector<double> row = {p.X.at(i, 0), p.X.at(i, 1), p.X.at(i, 2)};
        pred.push_back(m.predict(row));
        truth.push_back(p.Y[i]);
    }
    REQUIRE(rmse(pred, truth) < 1e-3);
}

TEST_CASE("input validation") {
    auto p = random_problem(131u, 10, 2, 0.1);
    std::vector<double> lg = {0.1}, mg = {0.5};
    REQUIRE_THROWS_AS(fit(p.X, p.Y, -0.1, 0.5), Error);
    REQUIRE_THROWS_AS(fit(p.X, p.Y, 0.1, 1.5), Error);
    std::vector<double> shortY(p.Y.begin(), p.Y.end() - 1);
    REQUIRE_THROWS_AS(fit(p.X, shortY, 0.1, 0.5), DimensionMismatch);
    REQUIRE_THROWS_AS(fit_cv(p.X, p.Y, lg, mg, 1), DimensionMismatch);
    REQUIRE_THROWS_AS(fit_cv(p.X, p.Y, lg, mg, 11), DimensionMismatch);
    REQUIRE_THROWS_AS(fit_cv(p.X, p.Y, {}, mg, 5), Error);

    Matrix bad = p.X;
    bad.at(0, 0) = std::nan("");
    REQUIRE_THROWS_AS(fit(bad, p.Y, 0.1, 0.5), Error);

    FitOptions one_sweep;
    one_sweep.max_sweeps = 1;
    REQUIRE_THROWS_AS(fit(p.X, p.Y, 0.0, 0.5, one_sweep), DidNotConverge);
}

TEST_CASE("model text round-trip is exact") {
    auto p = random_problem(141u, 12, 3, 0.1);
    EnrModel m = fit(p.X, p.Y, 0.37, 0.85);
    m.feature_names = {"q_age", "mean_t", "ah_end"};
    EnrModel back = model_from_text(model_to_text(m));
    REQUIRE(back.beta == m.beta);
    REQUIRE(back.beta0 == m.beta0);
    REQUIRE(back.lambda_reg == m.lambda_reg);
    REQUIRE(back.mix == m.mix);
    REQUIRE(back.scaler_mean == m.scaler_mean);
    REQUIRE(back.scaler_std == m.scaler_std);
    REQUIRE(back.feature_names == m.feature_names);

    REQUIRE_THROWS_AS(model_from_text("kind = something_else\n"), SchemaError);
    REQUIRE_THROWS_AS(model_from_text("kind = enr_model\nn_features = 2\nbeta0 = 0\n"),
                      SchemaError);
    std::string mangled = model_to_text(m);
    mangled.replace(mangled.find("std_0 = "), std::string("std_0 = ").size() + 1,
                    "std_0 = -");
    REQUIRE_THROWS_AS(model_from_text(mangled), SchemaError);
}
