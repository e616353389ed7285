#include <cmath>

#include "btoep/distributed.hpp"
#include "btoep/errors.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace btoep;
using namespace btoep::testing;

TEST_CASE("partitioning covers the outer indices exactly") {
    Rng rng(81);
    SUBCASE("single worker holds the whole operator") {
        CompactP2O op = random_operator(rng, 3, 4, 5);
        Partition partition = partition_operator(op, {1, 1});
        REQUIRE(partition.shards.size() == 1);
        CHECK(partition.shards[0].compact.blocks == op.blocks);
    }
    SUBCASE("even split of four sensors over two rows") {
        CompactP2O op = random_operator(rng, 4, 4, 3);
        Partition partition = partition_operator(op, {2, 1});
        CHECK(partition.shard(0, 0).sensor_begin == 0);
        CHECK(partition.shard(0, 0).sensor_end == 2);
        CHECK(partition.shard(1, 0).sensor_begin == 2);
        CHECK(partition.shard(1, 0).sensor_end == 4);
    }
    SUBCASE("ragged split carries the remainder in the trailing shard") {
        CompactP2O op = random_operator(rng, 5, 4, 3);
        Partition partition = partition_operator(op, {2, 1});
        CHECK(partition.shard(0, 0).local_sensors() == 3);
        CHECK(partition.shard(1, 0).local_sensors() == 2);
    }
    SUBCASE("shards reassemble the global spectral operator bit-exactly") {
        CompactP2O op = random_operator(rng, 5, 7, 8);
        SpectralP2O global = setup(op);
        Partition partition = partition_operator(op, {2, 3});
        for (const WorkerShard& shard : partition.shards) {
            for (std::size_t f = 0; f < global.num_freq(); ++f)
                for (std::size_t i = 0; i < shard.local_sensors(); ++i)
                    for (std::size_t j = 0; j < shard.local_sources(); ++j)
                        CHECK(shard.spectral.freq_entry(f, i, j) ==
                              global.freq_entry(f, shard.sensor_begin + i,
                                                shard.source_begin + j));
        }
    }
    SUBCASE("grids with more rows than sensors are rejected") {
        CompactP2O op = random_operator(rng, 2, 3, 4);
        CHECK_THROWS_AS(partition_operator(op, {3, 1}), GridError);
        CHECK_THROWS_AS(partition_operator(op, {1, 4}), GridError);
    }
}

TEST_CASE("scatter and gather are inverse permutations") {
    Rng rng(83);
    CompactP2O op = random_operator(rng, 5, 7, 6);
    Partition partition = partition_operator(op, {2, 3});

    SpaceTimeVector m = random_vector(rng, 7, 6, Ordering::SOTI);
    const auto param_slices = scatter_param(m, partition);
    REQUIRE(param_slices.size() == 3);
    CHECK(param_slices[0].spatial_dim == 3);
    CHECK(param_slices[2].spatial_dim == 1);
    CHECK(gather_param(param_slices, partition).values == m.values);

    SpaceTimeVector d = random_vector(rng, 5, 6, Ordering::SOTI);
    const auto data_slices = scatter_data(d, partition);
    REQUIRE(data_slices.size() == 2);
    CHECK(data_slices[0].spatial_dim == 3);
    CHECK(data_slices[1].spatial_dim == 2);
    CHECK(gather_data(data_slices, partition).values == d.values);

    SpaceTimeVector tosi = random_vector(rng, 7, 6, Ordering::TOSI);
    CHECK_THROWS_AS(scatter_param(tosi, partition), OrderingError);
}

TEST_CASE("single-worker distribution reproduces the serial result bit-exactly") {
    Rng rng(85);
    CompactP2O op = random_operator(rng, 3, 8, 16);
    SpectralP2O spectral = setup(op);
    Partition partition = partition_operator(op, {1, 1});
    SpaceTimeVector m = random_vector(rng, 8, 16, Ordering::SOTI);
    CHECK(distributed_forward(partition, m).values == apply_forward(spectral, m).values);
    SpaceTimeVector d = random_vector(rng, 3, 16, Ordering::SOTI);
    CHECK(distributed_adjoint(partition, d).values == apply_adjoint(spectral, d).values);
}

TEST_CASE("distributed matvecs equal the serial ones on every tested grid") {
    Rng rng(87);
    CompactP2O op = random_operator(rng, 5, 7, 32);
    SpectralP2O spectral = setup(op);
    SpaceTimeVector m = random_vector(rng, 7, 32, Ordering::SOTI);
    SpaceTimeVector d = random_vector(rng, 5, 32, Ordering::SOTI);
    const SpaceTimeVector serial_fwd = apply_forward(spectral, m);
    const SpaceTimeVector serial_adj = apply_adjoint(spectral, d);

    for (const GridShape grid : {GridShape{1, 1}, GridShape{1, 4}, GridShape{2, 2},
                                 GridShape{4, 1}, GridShape{2, 3}, GridShape{5, 7}}) {
        CAPTURE(grid.rows);
        CAPTURE(grid.cols);
        Partition partition = partition_operator(op, grid);
        CHECK(rel_max_diff(distributed_forward(partition, m).values, serial_fwd.values) < 1e-12);
        CHECK(rel_max_diff(distributed_adjoint(partition, d).values, serial_adj.values) < 1e-12);
    }
}

TEST_CASE("all backends agree under distribution") {
    Rng rng(89);
    CompactP2O op = random_operator(rng, 4, 6, 12);
    Partition partition = partition_operator(op, {2, 2}, {.keep_channel_layout = true});
    SpaceTimeVector m = random_vector(rng, 6, 12, Ordering::SOTI);

    const SpaceTimeVector fft = distributed_forward(partition, m, {.backend = Backend::Fft});
    const SpaceTimeVector ewp = distributed_forward(partition, m, {.backend = Backend::Ewp});
    const SpaceTimeVector naive = distributed_forward(partition, m, {.backend = Backend::Naive});
    CHECK(rel_max_diff(fft.values, naive.values) < 1e-12);
    CHECK(rel_max_diff(ewp.values, naive.values) < 1e-12);
}

TEST_CASE("parallel execution is bit-identical to serial execution") {
    Rng rng(91);
    CompactP2O op = random_operator(rng, 6, 9, 24);
    Partition partition = partition_operator(op, {3, 3});
    SpaceTimeVector m = random_vector(rng, 9, 24, Ordering::SOTI);
    SpaceTimeVector d = random_vector(rng, 6, 24, Ordering::SOTI);

    const auto serial = distributed_forward(partition, m, {.policy = ExecutionPolicy::Serial});
    const auto parallel = distributed_forward(partition, m, {.policy = ExecutionPolicy::Parallel});
    CHECK(serial.values == parallel.values);

    const auto serial_adj = distributed_adjoint(partition, d, {.policy = ExecutionPolicy::Serial});
    const auto parallel_adj =
        distributed_adjoint(partition, d, {.policy = ExecutionPolicy::Parallel});
    CHECK(serial_adj.values == parallel_adj.values);

    // And repeated runs do not drift.
    CHECK(distributed_forward(partition, m).values == serial.values);
}

TEST_CASE("communication log matches the analytic byte counts") {
    Rng rng(93);
    const std::size_t steps = 16;

    SUBCASE("single worker moves nothing") {
        CompactP2O op = random_operator(rng, 3, 4, steps);
        Partition partition = partition_operator(op, {1, 1});
        CommLog log;
        distributed_forward(partition, random_vector(rng, 4, steps, Ordering::SOTI), {}, &log);
        CHECK(log.total_bytes() == 0);
        CHECK(log.total_messages() == 0);
    }

    SUBCASE("one-row grid: forward reduce moves 8*steps*local_sensors per link") {
        CompactP2O op = random_operator(rng, 3, 8, steps);
        Partition partition = partition_operator(op, {1, 4});
        CommLog log;
        distributed_forward(partition, random_vector(rng, 8, steps, Ordering::SOTI), {}, &log);
        std::uint64_t reduce_bytes = 0;
        std::size_t reduce_messages = 0;
        for (const CommEvent& event : log.events) {
            if (event.phase != "reduce") continue;
            CHECK(event.link_bytes == 8 * steps * 3);
            reduce_bytes += event.total_bytes;
            reduce_messages += event.messages;
        }
        CHECK(reduce_messages == 3);
        CHECK(reduce_bytes == 3 * 8 * steps * 3);
        // Broadcasts within a single row are one-participant no-ops.
        for (const CommEvent& event : log.events)
            if (event.phase == "broadcast") CHECK(event.total_bytes == 0);
    }

    SUBCASE("2x2 grid totals equal the hand-computed sums") {
        CompactP2O op = random_operator(rng, 4, 6, steps);
        Partition partition = partition_operator(op, {2, 2});
        CommLog log;
        distributed_forward(partition, random_vector(rng, 6, steps, Ordering::SOTI), {}, &log);
        // Two column broadcasts of 3-source slices to one extra row each, then
        // two row reduces of 2-sensor slices over one link each.
        const std::uint64_t expected_broadcast = 2 * 1 * 8 * steps * 3;
        const std::uint64_t expected_reduce = 2 * 1 * 8 * steps * 2;
        CHECK(log.total_bytes() == expected_broadcast + expected_reduce);

        const CostParams params{.latency = 1e-6, .bandwidth = 1e10};
        const auto report = comm_report(log, params);
        REQUIRE(report.size() == 2);
        double modeled = 0.0;
        for (const PhaseReport& phase : report) modeled += phase.modeled_seconds;
        // Four collectives of depth one.
        const double expected_modeled =
            2.0 * (1e-6 + 8.0 * steps * 3 / 1e10) + 2.0 * (1e-6 + 8.0 * steps * 2 / 1e10);
        CHECK(modeled == doctest::Approx(expected_modeled).epsilon(1e-12));
    }

    SUBCASE("adjoint swaps the broadcast and reduce payload roles") {
        CompactP2O op = random_operator(rng, 4, 6, steps);
        Partition partition = partition_operator(op, {2, 2});
        CommLog log;
        distributed_adjoint(partition, random_vector(rng, 4, steps, Ordering::SOTI), {}, &log);
        for (const CommEvent& event : log.events) {
            if (event.phase == "broadcast") CHECK(event.link_bytes == 8 * steps * 2);
            if (event.phase == "reduce") CHECK(event.link_bytes == 8 * steps * 3);
        }
    }
}

TEST_CASE("trailing empty shards idle without corrupting the result") {
    Rng rng(95);
    // ceil(5/4) = 2 leaves the last row without sensors.
    CompactP2O op = random_operator(rng, 5, 7, 8);
    SpectralP2O spectral = setup(op);
    Partition partition = partition_operator(op, {4, 1});
    CHECK(partition.shard(3, 0).empty());
    SpaceTimeVector m = random_vector(rng, 7, 8, Ordering::SOTI);
    CHECK(rel_max_diff(distributed_forward(partition, m).values,
                       apply_forward(spectral, m).values) < 1e-12);
}
