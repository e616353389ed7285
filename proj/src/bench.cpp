#include "btoep/bench.hpp"

#include <chrono>
#include <cstdio>

#include "btoep/rng.hpp"

namespace btoep {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchConfig& config, const CostParams& params) {
    std::vector<BenchRow> rows;
    Rng rng(config.seed);

    for (std::size_t sources : config.sources_list) {
        for (std::size_t sensors : config.sensors_list) {
            for (std::size_t steps : config.steps_list) {
                CompactP2O op = CompactP2O::zeros(sensors, sources, steps);
                for (double& v : op.blocks) v = rng.uniform(-1.0, 1.0);
                SpaceTimeVector m = SpaceTimeVector::zeros(sources, steps, Ordering::SOTI);
                for (double& v : m.values) v = rng.uniform(-1.0, 1.0);
                SpaceTimeVector d = SpaceTimeVector::zeros(sensors, steps, Ordering::SOTI);
                for (double& v : d.values) v = rng.uniform(-1.0, 1.0);

                for (const GridShape& grid : config.grids) {
                    for (Backend backend : config.backends) {
                        SetupOptions setup_options{.keep_channel_layout =
                                                       backend == Backend::Ewp};
                        const auto setup_start = Clock::now();
                        Partition partition = partition_operator(op, grid, setup_options);
                        const double setup_seconds = seconds_since(setup_start);

                        const int directions = config.include_adjoint ? 2 : 1;
                        for (int dir = 0; dir < directions; ++dir) {
                            const bool adjoint = dir == 1;
                            for (std::size_t trial = 0; trial < config.trials; ++trial) {
                                PipelineCounters counters;
                                counters.time_stages = true;
                                CommLog log;
                                EngineOptions engine{.backend = backend};

                                // On a single worker, run the local pipeline
                                // directly so the wall time is fully covered
                                // by the stage timers.
                                const bool serial = grid.workers() == 1;
                                const SpectralP2O& whole = partition.shards.front().spectral;
                                const auto start = Clock::now();
                                if (serial) {
                                    switch (backend) {
                                        case Backend::Fft:
                                            adjoint ? apply_adjoint(whole, d, &counters)
                                                    : apply_forward(whole, m, &counters);
                                            break;
                                        case Backend::Ewp:
                                            adjoint ? apply_adjoint_ewp(whole, d, &counters)
                                                    : apply_forward_ewp(whole, m, &counters);
                                            break;
                                        case Backend::Naive:
                                            adjoint
                                                ? distributed_adjoint(partition, d, engine,
                                                                      &log, &counters)
                                                : distributed_forward(partition, m, engine,
                                                                      &log, &counters);
                                            break;
                                    }
                                } else if (adjoint) {
                                    distributed_adjoint(partition, d, engine, &log, &counters);
                                } else {
                                    distributed_forward(partition, m, engine, &log, &counters);
                                }
                                const double total = seconds_since(start);

                                BenchRow row;
                                row.backend = to_string(backend);
                                row.adjoint = adjoint;
                                row.num_sources = sources;
                                row.num_sensors = sensors;
                                row.num_steps = steps;
                                row.grid = grid.to_string();
                                row.trial = trial;
                                row.setup_seconds = setup_seconds;
                                row.pad_seconds = counters.pad.seconds;
                                row.fft_seconds = counters.forward_fft.seconds;
                                row.reorder_in_seconds = counters.reorder_in.seconds;
                                row.apply_seconds = counters.apply.seconds;
                                row.reorder_out_seconds = counters.reorder_out.seconds;
                                row.ifft_seconds = counters.inverse_fft.seconds;
                                row.unpad_seconds = counters.unpad.seconds;
                                row.total_seconds = total;
                                for (const PhaseReport& phase : comm_report(log, params))
                                    row.comm_modeled_seconds += phase.modeled_seconds;
                                row.comm_bytes = log.total_bytes();
                                row.apply_ops = counters.apply.ops;
                                row.apply_bytes = counters.apply.bytes;
                                row.total_ops = counters.total_ops();
                                row.apply_intensity = counters.apply_intensity();
                                rows.push_back(std::move(row));
                            }
                        }
                    }
                }
            }
        }
    }
    return rows;
}

std::string bench_csv_header() {
    return "backend,adjoint,num_sources,num_sensors,num_steps,grid,trial,"
           "setup_seconds,pad_seconds,fft_seconds,reorder_in_seconds,apply_seconds,"
           "reorder_out_seconds,ifft_seconds,unpad_seconds,total_seconds,"
           "comm_modeled_seconds,comm_bytes,apply_ops,apply_bytes,total_ops,apply_intensity";
}

void write_csv_row(std::ostream& out, const BenchRow& row) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%s,%d,%zu,%zu,%zu,%s,%zu,%.9e,%.9e,%.9e,%.9e,%.9e,%.9e,%.9e,%.9e,%.9e,"
                  "%.9e,%llu,%.9e,%.9e,%.9e,%.9e",
                  row.backend.c_str(), row.adjoint ? 1 : 0, row.num_sources, row.num_sensors,
                  row.num_steps, row.grid.c_str(), row.trial, row.setup_seconds, row.pad_seconds,
                  row.fft_seconds, row.reorder_in_seconds, row.apply_seconds,
                  row.reorder_out_seconds, row.ifft_seconds, row.unpad_seconds, row.total_seconds,
                  row.comm_modeled_seconds,
                  static_cast<unsigned long long>(row.comm_bytes), row.apply_ops, row.apply_bytes,
                  row.total_ops, row.apply_intensity);
    out << buf << "\n";
}

}  // namespace btoep
