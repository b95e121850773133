#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "soh/cluster.hpp"

using namespace soh;
using Catch::Approx;

namespace {

TrainingCell const_cell(const std::string& id, std::vector<double> grid,
                        double q_age_level, double q_bar_level, double q0) {
    TrainingCell c;
    c.cell_id = id;
    std::vector<double> qa(grid.size(), q_age_level), qb(grid.size(), q_bar_level);
    c.q_age = Trajectory(AhSequence(grid), std::move(qa));
    c.q_bar = Trajectory(AhSequence(std::move(grid)), std::move(qb));
    c.q0 = q0;
    return c;
}

TrainingSet two_level_set() {
    std::vector<TrainingCell> cells;
    cells.push_back(const_cell("low", {1.0, 2.0, 3.0}, 1.0, 1.0, 30.0));
    cells.push_back(const_cell("high", {1.0, 2.0, 3.0}, 2.0, 1.08, 30.0));
    return TrainingSet::build(std::move(cells), 3);
}

}  // namespace

TEST_CASE("trajectory_distance fixtures") {
    Trajectory qx(AhSequence({1.0, 2.0}), {1.0, 2.0});
    Trajectory qy(AhSequence({1.0, 2.0}), {1.3, 2.4});
    REQUIRE(trajectory_distance(qx, qy, 2) == Approx(0.5).margin(1e-15));
    REQUIRE(trajectory_distance(qx, qy, 1) == Approx(0.3).margin(1e-15));
    REQUIRE(trajectory_distance(qx, qx, 2) == 0.0);
    REQUIRE(trajectory_distance(qy, qx, 2) == trajectory_distance(qx, qy, 2));

    REQUIRE_THROWS_AS(trajectory_distance(qx, qy, 0), PrefixOutOfRange);
    REQUIRE_THROWS_AS(trajectory_distance(qx, qy, 3), PrefixOutOfRange);
    Trajectory shifted(AhSequence({1.0, 2.5}), {1.3, 2.4});
    REQUIRE_THROWS_AS(trajectory_distance(qx, shifted, 2), GridMismatch);
}

TEST_CASE("training set construction resamples onto the common span") {
    std::vector<TrainingCell> cells;
    cells.push_back(const_cell("a", {0.0, 10.0, 20.0}, 1.0, 1.0, 33.0));
    cells.push_back(const_cell("b", {5.0, 15.0, 25.0}, 2.0, 1.0, 33.0));
    auto ts = TrainingSet::build(std::move(cells), 5);
    REQUIRE(ts.k() == 2);
    REQUIRE(ts.ref_grid.size() == 5);
    REQUIRE(ts.ref_grid.front() == 5.0);   // intersection of [0,20] and [5,25]
    REQUIRE(ts.ref_grid.back() == 20.0);
    for (const auto& c : ts.cells) REQUIRE(c.q_age.ah == ts.ref_grid);

    REQUIRE_THROWS_AS(TrainingSet::build({}), EmptyState);
    std::vector<TrainingCell> bad_q0;
    bad_q0.push_back(const_cell("z", {0.0, 1.0}, 1.0, 1.0, 0.0));
    REQUIRE_THROWS_AS(TrainingSet::build(std::move(bad_q0)), NonPositiveQ0);
    std::vector<TrainingCell> disjoint;
    disjoint.push_back(const_cell("a", {0.0, 1.0}, 1.0, 1.0, 33.0));
    disjoint.push_back(const_cell("b", {2.0, 3.0}, 1.0, 1.0, 33.0));
    REQUIRE_THROWS_AS(TrainingSet::build(std::move(disjoint)), GridMismatch);
}

TEST_CASE("streaming classification follows the accumulated distances") {
    auto ts = two_level_set();
    ClassificationState st(ts);
    // Distances to the constant-1 and constant-2 references:
    //   after 1.9: 0.81 vs 0.01 -> cell 2
    //   after 1.2: 0.85 vs 0.65 -> cell 2
    //   after 1.2: 0.89 vs 1.29 -> cell 1
    REQUIRE(classify_step(st, ts, 1.9, 1.0) == 2);
    REQUIRE(classify_step(st, ts, 1.2, 2.0) == 2);
    REQUIRE(classify_step(st, ts, 1.2, 3.0) == 1);
    REQUIRE(st.s_seq == std::vector<int>{2, 2, 1});
    REQUIRE(st.sq_accum[0] == Approx(0.89).margin(1e-15));
    REQUIRE(st.sq_accum[1] == Approx(1.29).margin(1e-15));
}

TEST_CASE("ties go to the lowest cell index and K=1 is constant") {
    std::vector<TrainingCell> twins;
    twins.push_back(const_cell("a", {0.0, 1.0, 2.0}, 1.5, 1.0, 33.0));
    twins.push_back(const_cell("b", {0.0, 1.0, 2.0}, 1.5, 1.0, 33.0));
    auto ts = TrainingSet::build(std::move(twins), 3);
    ClassificationState st(ts);
    REQUIRE(classify_step(st, ts, 1.0, 0.5) == 1);
    REQUIRE(classify_step(st, ts, 2.0, 1.5) == 1);

    std::vector<TrainingCell> solo;
    solo.push_back(const_cell("only", {0.0, 1.0, 2.0}, 1.5, 1.0, 33.0));
    auto one = TrainingSet::build(std::move(solo), 3);
    ClassificationState s1(one);
    REQUIRE(classify_step(s1, one, 99.0, 1.0) == 1);
    REQUIRE(lambda_weights(s1, 1) == std::vector<double>{1.0});
}

TEST_CASE("a cell identical to one trainer is classified as that trainer") {
    std::vector<TrainingCell> cells;
    cells.push_back(const_cell("a", {1.0, 2.0, 3.0}, 1.0, 1.0, 30.0));
    cells.push_back(const_cell("b", {1.0, 2.0, 3.0}, 2.0, 1.0, 30.0));
    cells.push_back(const_cell("c", {1.0, 2.0, 3.0}, 3.0, 1.0, 30.0));
    auto ts = TrainingSet::build(std::move(cells), 3);
    ClassificationState st(ts);
    for (double ah : {1.0, 2.0, 3.0})
        REQUIRE(classify_step(st, ts, 2.0, ah) == 2);
    auto lw = lambda_weights(st, 3);
    REQUIRE(lw == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("lambda weights are Ah-mass shares") {
    auto ts = two_level_set();
    ClassificationState st(ts);
    // Force S = [1, 1, 2] by steering the test values.
    REQUIRE(classify_step(st, ts, 1.1, 1.0) == 1);
    REQUIRE(classify_step(st, ts, 1.1, 2.0) == 1);
    REQUIRE(classify_step(st, ts, 3.5, 3.0) == 2);  // (2.5)^2 flips the argmin
    auto lw = lambda_weights(st, 2);
    REQUIRE(lw[0] == Approx(0.5).margin(1e-15));  // (1+2)/(1+2+3)
    REQUIRE(lw[1] == Approx(0.5).margin(1e-15));
    REQUIRE(st.lambda == lw);

    REQUIRE_THROWS_AS(lambda_weights(ClassificationState{}, 2), EmptyState);
}

TEST_CASE("incremental state equals a from-scratch recomputation") {
    std::mt19937 rng(17u);
    std::uniform_real_distribution<double> qv(0.5, 3.5);
    std::vector<TrainingCell> cells;
    for (int j = 0; j < 4; ++j) {
        std::vector<double> grid, q;
        for (int i = 0; i <= 10; ++i) {
            grid.push_back(double(i));
            q.push_back(qv(rng));
        }
        cells.push_back(const_cell("c" + std::to_string(j), grid, 0.0, 1.0, 30.0));
        cells.back().q_age = Trajectory(AhSequence(std::move(grid)), std::move(q));
    }
    auto ts = TrainingSet::build(std::move(cells), 11);

    ClassificationState st(ts);
    std::vector<double> test_q, test_ah;
    std::uniform_real_distribution<double> step(0.3, 1.2);
    double ah = 0.2;
    while (ah <= 10.0) {
        test_ah.push_back(ah);
        test_q.push_back(qv(rng));
        ah += step(rng);
    }

    for (std::size_t n = 0; n < test_ah.size(); ++n) {
        int got = classify_step(st, ts, test_q[n], test_ah[n]);

        // Brute force: accumulate every squared distance from the beginning,
        // in the same order, then take the argmin with ties to the lowest.
        int want = 1;
        double best = 0.0;
        for (std::size_t j = 0; j < ts.k(); ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i <= n; ++i) {
                double d = test_q[i] - interp_value(ts.cells[j].q_age, test_ah[i]);
                acc += d * d;
            }
            REQUIRE(acc == st.sq_accum[j]);  // bitwise: same accumulation order
            if (j == 0 || acc < best) {
                best = acc;
                want = static_cast<int>(j) + 1;
            }
        }
        REQUIRE(got == want);
        REQUIRE(st.lambda == lambda_weights(st, ts.k()));  // bitwise agreement
    }
}

TEST_CASE("classification rejects non-advancing or out-of-grid points") {
    auto ts = two_level_set();
    ClassificationState st(ts);
    classify_step(st, ts, 1.0, 2.0);
    REQUIRE_THROWS_AS(classify_step(st, ts, 1.0, 2.0), GridMismatch);
    REQUIRE_THROWS_AS(classify_step(st, ts, 1.0, 1.5), GridMismatch);
    REQUIRE_THROWS_AS(classify_step(st, ts, 1.0, 3.5), GridMismatch);

    ClassificationState wrong(ts);
    wrong.sq_accum.push_back(0.0);
    REQUIRE_THROWS_AS(classify_step(wrong, ts, 1.0, 1.0), DimensionMismatch);
}

TEST_CASE("capacity estimate blends normalized references") {
    auto ts = two_level_set();
    std::vector<double> even = {0.25, 0.75};
    // 30 * (0.25 * 1.0 + 0.75 * 1.08) = 31.8
    REQUIRE(estimate_ct(ts, even, 30.0, 2.0) == Approx(31.8).margin(1e-12));

    std::vector<double> one_hot = {0.0, 1.0};
    REQUIRE(estimate_ct(ts, one_hot, 30.0, 2.0) == Approx(30.0 * 1.08).margin(1e-12));

    std::vector<double> uniform = {0.5, 0.5};
    std::vector<TrainingCell> flat;
    flat.push_back(const_cell("a", {1.0, 2.0, 3.0}, 1.0, 1.0, 28.0));
    flat.push_back(const_cell("b", {1.0, 2.0, 3.0}, 2.0, 1.0, 28.0));
    auto fts = TrainingSet::build(std::move(flat), 3);
    REQUIRE(estimate_ct(fts, uniform, 29.5, 2.0) == Approx(29.5).margin(1e-12));

    REQUIRE_THROWS_AS(estimate_ct(ts, std::vector<double>{1.0}, 30.0, 2.0),
                      DimensionMismatch);
    REQUIRE_THROWS_AS(estimate_ct(ts, std::vector<double>{-0.1, 1.1}, 30.0, 2.0),
                      InvalidWeights);
    REQUIRE_THROWS_AS(estimate_ct(ts, std::vector<double>{0.4, 0.4}, 30.0, 2.0),
                      InvalidWeights);
    REQUIRE_THROWS_AS(estimate_ct(ts, even, 0.0, 2.0), NonPositiveQ0);
    REQUIRE_THROWS_AS(estimate_ct(ts, even, 30.0, 99.0), OutOfRangeGrid);
}

TEST_CASE("state snapshot round-trips and resumes identically") {
    auto ts = two_level_set();
    ClassificationState live(ts);
    classify_step(live, ts, 1.9, 1.0);
    classify_step(live, ts, 1.2, 2.0);

    ClassificationState back = state_from_text(state_to_text(live));
    REQUIRE(back.sq_accum == live.sq_accum);
    REQUIRE(back.s_seq == live.s_seq);
    REQUIRE(back.ah_seen == live.ah_seen);
    REQUIRE(back.lambda == live.lambda);
    REQUIRE(back.ah_mass == live.ah_mass);
    REQUIRE(back.ref_grid == live.ref_grid);

    int a = classify_step(live, ts, 1.2, 3.0);
    int b = classify_step(back, ts, 1.2, 3.0);
    REQUIRE(a == b);
    REQUIRE(back.sq_accum == live.sq_accum);
    REQUIRE(back.lambda == live.lambda);

    REQUIRE_THROWS_AS(state_from_text("kind = enr_model\n"), SchemaError);
    REQUIRE_THROWS_AS(state_from_text("kind = classification_state\nk = 0\nn = 0\ngrid_n = 0\n"),
                      SchemaError);
    std::string txt = state_to_text(live);
    txt += "s_99 = 1\n";  // stray key is ignored, but a broken count is not
    REQUIRE_NOTHROW(state_from_text(txt));
}
