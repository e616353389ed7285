#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "btoep/block_operator.hpp"
#include "btoep/grid_planner.hpp"
#include "btoep/space_time.hpp"

namespace btoep {

enum class Backend { Fft, Ewp, Naive };

Backend parse_backend(const std::string& name);  // "fft" | "ewp" | "naive"
std::string to_string(Backend backend);

// Logical workers run either one after another or on real threads; both
// produce bit-identical results because every worker writes only its own
// slot and reductions follow a fixed tree.
enum class ExecutionPolicy { Serial, Parallel };

// One worker's share of the operator: a contiguous rectangle of the outer
// (sensor x source) indices. Trailing shards may be smaller or empty when the
// dimensions do not divide evenly.
struct WorkerShard {
    std::size_t grid_row = 0;
    std::size_t grid_col = 0;
    std::size_t sensor_begin = 0;
    std::size_t sensor_end = 0;
    std::size_t source_begin = 0;
    std::size_t source_end = 0;
    CompactP2O compact;    // local first block column (empty shards hold none)
    SpectralP2O spectral;  // local setup output

    std::size_t local_sensors() const { return sensor_end - sensor_begin; }
    std::size_t local_sources() const { return source_end - source_begin; }
    bool empty() const { return local_sensors() == 0 || local_sources() == 0; }
};

struct Partition {
    GridShape grid;
    std::size_t num_sensors = 0;
    std::size_t num_sources = 0;
    std::size_t num_steps = 0;
    std::vector<WorkerShard> shards;  // row-major over the grid

    const WorkerShard& shard(std::size_t row, std::size_t col) const {
        return shards[row * grid.cols + col];
    }
};

// Cut the operator along the outer indices with the ceiling partition and run
// the local setup on every non-empty shard. Rejects grids with more rows than
// sensors or more columns than sources.
Partition partition_operator(const CompactP2O& op, const GridShape& grid,
                             const SetupOptions& options = {});

// Partition an operator that is already in frequency form: each shard takes
// the rows and columns of every frequency block it owns. Such a partition
// cannot serve the naive backend (no time-domain blocks on board).
Partition partition_operator(const SpectralP2O& op, const GridShape& grid,
                             const SetupOptions& options = {});

// Contiguous SOTI slices by source (parameter, row-0 workers) or by sensor
// (data, column-0 workers).
std::vector<SpaceTimeVector> scatter_param(const SpaceTimeVector& m, const Partition& partition);
std::vector<SpaceTimeVector> scatter_data(const SpaceTimeVector& d, const Partition& partition);
SpaceTimeVector gather_param(const std::vector<SpaceTimeVector>& slices,
                             const Partition& partition);
SpaceTimeVector gather_data(const std::vector<SpaceTimeVector>& slices,
                            const Partition& partition);

// One collective (a column broadcast or a row reduce). All links of a
// collective carry the same payload.
struct CommEvent {
    std::string phase;  // "broadcast" | "reduce"
    std::size_t participants = 0;
    std::size_t messages = 0;       // participants - 1 tree links
    std::uint64_t link_bytes = 0;   // payload per link
    std::uint64_t total_bytes = 0;  // messages * link_bytes
    std::size_t tree_depth = 0;     // ceil(log2(participants))
};

struct CommLog {
    std::string mode = "tree";
    std::vector<CommEvent> events;

    std::uint64_t total_bytes() const;
    std::size_t total_messages() const;
};

struct PhaseReport {
    std::string phase;
    std::size_t messages = 0;
    std::uint64_t bytes = 0;
    double modeled_seconds = 0.0;
};

// Aggregate the log per phase; modeled time is depth * (latency + link/beta)
// summed over collectives.
std::vector<PhaseReport> comm_report(const CommLog& log, const CostParams& params);

struct EngineOptions {
    Backend backend = Backend::Fft;
    ExecutionPolicy policy = ExecutionPolicy::Serial;
};

// Broadcast the parameter slices down each column, apply every shard locally,
// and sum-reduce partial data slices across each row. Equals the single-worker
// forward apply.
SpaceTimeVector distributed_forward(const Partition& partition, const SpaceTimeVector& m,
                                    const EngineOptions& options = {}, CommLog* log = nullptr,
                                    PipelineCounters* counters = nullptr);

// Mirror pattern: broadcast data slices along rows, local adjoint, reduce
// down columns.
SpaceTimeVector distributed_adjoint(const Partition& partition, const SpaceTimeVector& d,
                                    const EngineOptions& options = {}, CommLog* log = nullptr,
                                    PipelineCounters* counters = nullptr);

}  // namespace btoep
