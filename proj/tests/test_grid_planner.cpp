#include <algorithm>
#include <cmath>
#include <limits>

#include "btoep/errors.hpp"
#include "btoep/grid_planner.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace btoep;

namespace {

double brute_force_best_cost(std::size_t workers, double log_ratio) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 1; r <= workers; ++r) {
        if (workers % r != 0) continue;
        best = std::min(best, modified_cost(static_cast<double>(r), workers, log_ratio));
    }
    return best;
}

const StepCost& find_row(const std::vector<StepCost>& table, const std::string& phase,
                         const std::string& step) {
    for (const StepCost& row : table)
        if (row.phase == phase && row.step == step) return row;
    throw std::runtime_error("missing table row " + phase + "/" + step);
}

}  // namespace

TEST_CASE("communication cost vanishes on a single worker") {
    CHECK(comm_cost({1, 1}, {.num_sources = 100, .num_sensors = 10, .num_steps = 50}, {}) == 0.0);
}

TEST_CASE("communication cost with one row keeps only the column term") {
    const CostParams params{.latency = 1e-6, .bandwidth = 1e10};
    const ProblemDims dims{.num_sources = 1000, .num_sensors = 20, .num_steps = 100};
    const std::size_t workers = 16;
    const double expected =
        (1e-6 + 8.0 * 100 * 20 / 1e10) * std::log(static_cast<double>(workers));
    CHECK(comm_cost({1, workers}, dims, params) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("communication cost matches an independent evaluation") {
    const CostParams params{.latency = 1e-6, .bandwidth = 1e10};
    const ProblemDims dims{.num_sources = 20000, .num_sensors = 10, .num_steps = 2000};
    // (1e-6 + 8*2000*20000/(1e10*4))*ln 2 + (1e-6 + 8*2000*10/(1e10*2))*ln 4
    CHECK(comm_cost({2, 4}, dims, params) ==
          doctest::Approx(0.005558347240910201).epsilon(1e-14));
}

TEST_CASE("communication cost is symmetric under the simultaneous swap") {
    Rng rng(73);
    const CostParams params{.latency = 2e-6, .bandwidth = 5e9};
    for (int trial = 0; trial < 20; ++trial) {
        const ProblemDims dims{.num_sources = 1 + rng.integer(5000),
                               .num_sensors = 1 + rng.integer(5000),
                               .num_steps = 1 + rng.integer(4000)};
        const ProblemDims swapped{.num_sources = dims.num_sensors,
                                  .num_sensors = dims.num_sources,
                                  .num_steps = dims.num_steps};
        const GridShape grid{1 + rng.integer(32), 1 + rng.integer(32)};
        const GridShape transposed{grid.cols, grid.rows};
        CHECK(comm_cost(grid, dims, params) ==
              doctest::Approx(comm_cost(transposed, swapped, params)).epsilon(1e-12));
    }
}

TEST_CASE("modified cost at the boundary rows") {
    CHECK(modified_cost(1.0, 80, -2.0) ==
          doctest::Approx(0.01 * std::log(80.0)).epsilon(1e-14));
    CHECK(modified_cost(80.0, 80, -2.0) == doctest::Approx(std::log(80.0)).epsilon(1e-14));
    CHECK_THROWS_AS(modified_cost(0.5, 4, 0.0), Error);
    CHECK_THROWS_AS(modified_cost(5.0, 4, 0.0), Error);
}

TEST_CASE("modified cost on the 80-worker integer grid dips at a small row count") {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_rows = 0;
    for (std::size_t r = 1; r <= 80; ++r) {
        if (80 % r != 0) continue;
        const double cost = modified_cost(static_cast<double>(r), 80, -2.0);
        if (cost < best) {
            best = cost;
            best_rows = r;
        }
    }
    CHECK(best_rows == 2);  // small, strictly above one
    CHECK(best < modified_cost(1.0, 80, -2.0));
}

TEST_CASE("grid selection covers the reference configurations") {
    CHECK(select_grid(48, -3.0, 1) == GridShape{1, 48});
    CHECK(select_grid(48, -3.0, 3) == GridShape{1, 48});
    CHECK(select_grid(80, -2.0, 4) == GridShape{4, 20});
    CHECK(select_grid(80, -3.0, 4) == GridShape{1, 80});
    CHECK(select_grid(80, -4.0, 4) == GridShape{1, 80});
    CHECK(select_grid(1, 0.0, 1) == GridShape{1, 1});
}

TEST_CASE("grid selection with one gpu per node matches brute force") {
    for (std::size_t p : {2, 3, 4, 6, 8, 12, 16, 24, 36, 48, 60, 64, 80, 96, 128}) {
        for (int l = -6; l <= 0; ++l) {
            const GridShape chosen = select_grid(p, static_cast<double>(l), 1);
            const double cost =
                modified_cost(static_cast<double>(chosen.rows), p, static_cast<double>(l));
            CHECK(cost <= brute_force_best_cost(p, static_cast<double>(l)) * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("weak scaling shape rule") {
    const WeakScalingChoice balanced = weak_scaling_shape(1.0, 8);
    CHECK(balanced.indifferent);
    CHECK(weak_scaling_shape(2.0, 6).shape == GridShape{6, 1});
    CHECK(!weak_scaling_shape(2.0, 6).indifferent);
    CHECK(weak_scaling_shape(0.1, 6).shape == GridShape{1, 6});
}

TEST_CASE("step cost table follows the per-step model") {
    const CostParams params{.latency = 1e-6, .bandwidth = 1e10};

    SUBCASE("single step apply row") {
        const ProblemDims dims{.num_sources = 7, .num_sensors = 4, .num_steps = 1};
        const auto table = step_cost_table(dims, {1, 1}, params);
        CHECK(find_row(table, "forward", "apply_matrix").ops == 2.0 * 4 * 7);
    }

    SUBCASE("square problems have identical forward and adjoint tables") {
        const ProblemDims dims{.num_sources = 12, .num_sensors = 12, .num_steps = 64};
        const auto table = step_cost_table(dims, {2, 2}, params);
        for (const StepCost& row : table) {
            if (row.phase != "forward") continue;
            const StepCost& mirror = find_row(table, "adjoint", row.step);
            CHECK(row.ops == mirror.ops);
            CHECK(row.bytes == mirror.bytes);
            CHECK(row.seconds == mirror.seconds);
        }
    }

    SUBCASE("matrix apply dominates the other compute steps at scale") {
        const ProblemDims dims{.num_sources = 20000, .num_sensors = 10, .num_steps = 2000};
        const auto table = step_cost_table(dims, {1, 1}, params);
        const StepCost& apply = find_row(table, "forward", "apply_matrix");
        for (const StepCost& row : table) {
            if (row.phase != "forward" || row.step == "apply_matrix") continue;
            if (row.step == "broadcast_vector" || row.step == "reduce_vector") continue;
            CHECK(apply.seconds > row.seconds);
            CHECK(apply.bytes > row.bytes);
        }
    }

    SUBCASE("direct time-dimension cost exceeds the transform cost as steps grow") {
        for (std::size_t steps : {8, 16, 64, 256, 1024}) {
            const ProblemDims dims{.num_sources = 6, .num_sensors = 3, .num_steps = steps};
            const auto table = step_cost_table(dims, {1, 1}, params);
            const double fft_apply = find_row(table, "forward", "apply_matrix").ops;
            const double naive_apply = find_row(table, "naive", "apply_matrix").ops;
            const double bound = static_cast<double>(steps) /
                                 (2.0 * std::log2(2.0 * static_cast<double>(steps)));
            CHECK(naive_apply / fft_apply >= bound);
        }
    }
}

TEST_CASE("whole-inversion cost estimate reproduces the reference arithmetic") {
    const CostEstimate est = conventional_cost_estimate(1e9, 1e4, 100.0, 0.1);
    CHECK(est.per_solve_flops == doctest::Approx(9.72e15).epsilon(1e-12));
    CHECK(est.effective_rank == doctest::Approx(1e5).epsilon(1e-12));
    CHECK(est.conventional_total_flops == doctest::Approx(1.944e21).epsilon(1e-12));
    CHECK(est.fft_total_flops == doctest::Approx(2.572e18).epsilon(1e-3));
    CHECK(est.ratio > 750.0);
}

TEST_CASE("cost-estimate ratio grows with the number of steps") {
    double previous = 0.0;
    for (double steps : {1e3, 3e3, 1e4, 3e4, 1e5}) {
        const double ratio = conventional_cost_estimate(1e9, steps, 100.0, 0.1).ratio;
        CHECK(ratio > previous);
        previous = ratio;
    }
}

TEST_CASE("apply arithmetic intensity") {
    CHECK(apply_arithmetic_intensity(1.0, 1.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(apply_arithmetic_intensity(100.0, 800.0) ==
          doctest::Approx(0.49443757725587145).epsilon(1e-12));
    CHECK(std::abs(apply_arithmetic_intensity(1e8, 1e8) - 0.5) < 1e-7);
    CHECK(apply_arithmetic_intensity(100.0, 800.0) < 0.5);
}

TEST_CASE("grid shape parsing") {
    CHECK(GridShape::parse("2x3") == GridShape{2, 3});
    CHECK(GridShape::parse("10X1") == GridShape{10, 1});
    CHECK_THROWS_AS(GridShape::parse("abc"), Error);
    CHECK_THROWS_AS(GridShape::parse("0x4"), Error);
}
