#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "soh/metrics.hpp"

using namespace soh;
using Catch::Approx;

TEST_CASE("metrics on a perfect prediction are zero") {
    std::vector<double> y = {30.0, 31.5, 33.1};
    REQUIRE(mape(y, y) == 0.0);
    REQUIRE(rmse(y, y) == 0.0);
    REQUIRE(rmspe(y, y) == 0.0);
}

TEST_CASE("single-point fixture: 110 predicted against 100") {
    std::vector<double> pred = {110.0}, truth = {100.0};
    REQUIRE(mape(pred, truth) == Approx(10.0).margin(1e-12));
    REQUIRE(rmse(pred, truth) == Approx(10.0).margin(1e-12));
    REQUIRE(rmspe(pred, truth) == Approx(10.0).margin(1e-12));
}

TEST_CASE("two-point fixture with asymmetric errors") {
    std::vector<double> truth = {10.0, 20.0}, pred = {11.0, 18.0};
    // Relative errors are 10% and 10%; absolute errors 1 and 2.
    REQUIRE(mape(pred, truth) == Approx(10.0).margin(1e-12));
    REQUIRE(rmse(pred, truth) == Approx(std::sqrt(2.5)).margin(1e-12));
    REQUIRE(rmspe(pred, truth) == Approx(10.0).margin(1e-12));
}

TEST_CASE("constant relative error makes MAPE and RMSPE agree") {
    std::vector<double> truth = {12.0, 25.0, 33.1, 7.5};
    std::vector<double> pred(truth);
    for (double& v : pred) v *= 1.05;
    REQUIRE(mape(pred, truth) == Approx(5.0).margin(1e-12));
    REQUIRE(rmspe(pred, truth) == Approx(5.0).margin(1e-12));
    REQUIRE(mape(pred, truth) == Approx(rmspe(pred, truth)).epsilon(1e-12));
}

TEST_CASE("metrics are invariant under pairwise permutation") {
    std::mt19937 rng(21u);
    std::uniform_real_distribution<double> yv(1.0, 50.0), ev(-2.0, 2.0);
    std::vector<double> truth, pred;
    for (int i = 0; i < 40; ++i) {
        truth.push_back(yv(rng));
        pred.push_back(truth.back() + ev(rng));
    }
    std::vector<std::size_t> order(truth.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> truth2, pred2;
    for (std::size_t i : order) {
        truth2.push_back(truth[i]);
        pred2.push_back(pred[i]);
    }
    REQUIRE(mape(pred2, truth2) == Approx(mape(pred, truth)).epsilon(1e-12));
    REQUIRE(rmse(pred2, truth2) == Approx(rmse(pred, truth)).epsilon(1e-12));
    REQUIRE(rmspe(pred2, truth2) == Approx(rmspe(pred, truth)).epsilon(1e-12));
}

TEST_CASE("scaling both series scales RMSE and leaves percent metrics fixed") {
    std::vector<double> truth = {10.0, 20.0, 30.0}, pred = {11.0, 19.0, 30.5};
    std::vector<double> truth3, pred3;
    for (double v : truth) truth3.push_back(3.0 * v);
    for (double v : pred) pred3.push_back(3.0 * v);
    REQUIRE(rmse(pred3, truth3) == Approx(3.0 * rmse(pred, truth)).epsilon(1e-12));
    REQUIRE(mape(pred3, truth3) == Approx(mape(pred, truth)).epsilon(1e-12));
    REQUIRE(rmspe(pred3, truth3) == Approx(rmspe(pred, truth)).epsilon(1e-12));
}

TEST_CASE("RMSE tolerates non-positive truth, percent metrics refuse it") {
    std::vector<double> truth = {0.0, -1.0}, pred = {1.0, 1.0};
    REQUIRE(rmse(pred, truth) == Approx(std::sqrt(2.5)).margin(1e-12));
    REQUIRE_THROWS_AS(mape(pred, truth), NonPositiveTruth);
    REQUIRE_THROWS_AS(rmspe(pred, truth), NonPositiveTruth);
}

TEST_CASE("length guards") {
    std::vector<double> a = {1.0, 2.0}, b = {1.0};
    REQUIRE_THROWS_AS(mape(a, b), LengthMismatch);
    REQUIRE_THROWS_AS(rmse(a, b), LengthMismatch);
    REQUIRE_THROWS_AS(rmspe(b, a), LengthMismatch);
    std::vector<double> empty;
    REQUIRE_THROWS_AS(rmse(empty, empty), LengthMismatch);
}

TEST_CASE("evaluate bundles all three metrics with the count") {
    std::vector<double> truth = {10.0, 20.0}, pred = {11.0, 18.0};
    MetricReport r = evaluate(truth, pred);
    REQUIRE(r.m == 2);
    REQUIRE(r.mape == Approx(10.0).margin(1e-12));
    REQUIRE(r.rmse == Approx(std::sqrt(2.5)).margin(1e-12));
    REQUIRE(r.rmspe == Approx(10.0).margin(1e-12));
}
