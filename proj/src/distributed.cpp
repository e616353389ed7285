#include "btoep/distributed.hpp"

#include <algorithm>
#include <future>

#include "btoep/errors.hpp"

namespace btoep {
namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::size_t tree_depth(std::size_t participants) {
    std::size_t depth = 0;
    std::size_t reach = 1;
    while (reach < participants) {
        reach *= 2;
        ++depth;
    }
    return depth;
}

void record_collective(CommLog* log, const char* phase, std::size_t participants,
                       std::uint64_t link_bytes) {
    if (!log) return;
    CommEvent event;
    event.phase = phase;
    event.participants = participants;
    event.messages = participants == 0 ? 0 : participants - 1;
    event.link_bytes = link_bytes;
    event.total_bytes = static_cast<std::uint64_t>(event.messages) * link_bytes;
    event.tree_depth = tree_depth(participants);
    log->events.push_back(std::move(event));
}

// In-place fixed-tree sum of equally shaped partials:
// ((v0+v1)+(v2+v3))+... independent of evaluation order elsewhere.
void tree_reduce(std::vector<SpaceTimeVector>& partials) {
    const std::size_t count = partials.size();
    for (std::size_t step = 1; step < count; step *= 2) {
        for (std::size_t i = 0; i + step < count; i += 2 * step) {
            auto& dst = partials[i].values;
            const auto& src = partials[i + step].values;
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
    }
}

void require_time_domain(const WorkerShard& shard) {
    if (shard.compact.blocks.empty())
        throw Error("naive backend needs the time-domain operator; this partition was built "
                    "from a frequency-domain file");
}

SpaceTimeVector local_forward(const WorkerShard& shard, const SpaceTimeVector& slice,
                              std::size_t num_steps, Backend backend,
                              PipelineCounters* counters) {
    if (shard.empty())
        return SpaceTimeVector::zeros(shard.local_sensors(), num_steps, Ordering::SOTI);
    if (backend == Backend::Naive) require_time_domain(shard);
    switch (backend) {
        case Backend::Fft:
            return apply_forward(shard.spectral, slice, counters);
        case Backend::Ewp:
            return apply_forward_ewp(shard.spectral, slice, counters);
        case Backend::Naive:
            return tosi_to_soti(
                naive_apply_forward(shard.compact, soti_to_tosi(slice), counters));
    }
    throw Error("unknown backend");
}

SpaceTimeVector local_adjoint(const WorkerShard& shard, const SpaceTimeVector& slice,
                              std::size_t num_steps, Backend backend,
                              PipelineCounters* counters) {
    if (shard.empty())
        return SpaceTimeVector::zeros(shard.local_sources(), num_steps, Ordering::SOTI);
    if (backend == Backend::Naive) require_time_domain(shard);
    switch (backend) {
        case Backend::Fft:
            return apply_adjoint(shard.spectral, slice, counters);
        case Backend::Ewp:
            return apply_adjoint_ewp(shard.spectral, slice, counters);
        case Backend::Naive:
            return tosi_to_soti(
                naive_apply_adjoint(shard.compact, soti_to_tosi(slice), counters));
    }
    throw Error("unknown backend");
}

void merge_counters(PipelineCounters& into, const PipelineCounters& part) {
    auto merge_stage = [](StageCounters& a, const StageCounters& b) {
        a.ops += b.ops;
        a.bytes += b.bytes;
        a.seconds += b.seconds;
    };
    merge_stage(into.pad, part.pad);
    merge_stage(into.forward_fft, part.forward_fft);
    merge_stage(into.reorder_in, part.reorder_in);
    merge_stage(into.apply, part.apply);
    merge_stage(into.reorder_out, part.reorder_out);
    merge_stage(into.inverse_fft, part.inverse_fft);
    merge_stage(into.unpad, part.unpad);
    into.block_products += part.block_products;
    into.naive_ops += part.naive_ops;
}

// Run one task per worker, either inline or on real threads. Results land in
// per-worker slots, so scheduling cannot change the outcome.
template <typename Fn>
std::vector<SpaceTimeVector> run_workers(std::size_t count, ExecutionPolicy policy, Fn&& fn) {
    std::vector<SpaceTimeVector> results(count);
    if (policy == ExecutionPolicy::Serial) {
        for (std::size_t w = 0; w < count; ++w) results[w] = fn(w);
        return results;
    }
    std::vector<std::future<SpaceTimeVector>> futures;
    futures.reserve(count);
    for (std::size_t w = 0; w < count; ++w)
        futures.push_back(std::async(std::launch::async, [&fn, w] { return fn(w); }));
    for (std::size_t w = 0; w < count; ++w) results[w] = futures[w].get();
    return results;
}

}  // namespace

Backend parse_backend(const std::string& name) {
    if (name == "fft") return Backend::Fft;
    if (name == "ewp") return Backend::Ewp;
    if (name == "naive") return Backend::Naive;
    throw Error("unknown backend '" + name + "' (expected fft, ewp, or naive)");
}

std::string to_string(Backend backend) {
    switch (backend) {
        case Backend::Fft: return "fft";
        case Backend::Ewp: return "ewp";
        case Backend::Naive: return "naive";
    }
    return "?";
}

namespace {

Partition partition_skeleton(std::size_t num_sensors, std::size_t num_sources,
                             std::size_t num_steps, const GridShape& grid) {
    if (grid.rows == 0 || grid.cols == 0) throw GridError("partition: grid must be positive");
    if (grid.rows > num_sensors || grid.cols > num_sources) {
        throw GridError("partition: grid " + grid.to_string() + " leaves workers without any of " +
                        std::to_string(num_sensors) + " sensors x " +
                        std::to_string(num_sources) + " sources");
    }

    const std::size_t sen_chunk = ceil_div(num_sensors, grid.rows);
    const std::size_t src_chunk = ceil_div(num_sources, grid.cols);

    Partition partition;
    partition.grid = grid;
    partition.num_sensors = num_sensors;
    partition.num_sources = num_sources;
    partition.num_steps = num_steps;
    partition.shards.resize(grid.rows * grid.cols);
    for (std::size_t i = 0; i < grid.rows; ++i) {
        for (std::size_t j = 0; j < grid.cols; ++j) {
            WorkerShard& shard = partition.shards[i * grid.cols + j];
            shard.grid_row = i;
            shard.grid_col = j;
            shard.sensor_begin = std::min(i * sen_chunk, num_sensors);
            shard.sensor_end = std::min((i + 1) * sen_chunk, num_sensors);
            shard.source_begin = std::min(j * src_chunk, num_sources);
            shard.source_end = std::min((j + 1) * src_chunk, num_sources);
        }
    }
    return partition;
}

}  // namespace

Partition partition_operator(const CompactP2O& op, const GridShape& grid,
                             const SetupOptions& options) {
    op.validate();
    Partition partition =
        partition_skeleton(op.num_sensors, op.num_sources, op.num_steps, grid);
    for (WorkerShard& shard : partition.shards) {
        if (shard.empty()) continue;
        shard.compact =
            CompactP2O::zeros(shard.local_sensors(), shard.local_sources(), op.num_steps);
        for (std::size_t k = 0; k < op.num_steps; ++k)
            for (std::size_t si = shard.sensor_begin; si < shard.sensor_end; ++si)
                for (std::size_t sj = shard.source_begin; sj < shard.source_end; ++sj)
                    shard.compact.entry(k, si - shard.sensor_begin, sj - shard.source_begin) =
                        op.entry(k, si, sj);
        shard.spectral = setup(shard.compact, options);
    }
    return partition;
}

Partition partition_operator(const SpectralP2O& op, const GridShape& grid,
                             const SetupOptions& options) {
    op.validate();
    Partition partition =
        partition_skeleton(op.num_sensors, op.num_sources, op.num_steps, grid);
    for (WorkerShard& shard : partition.shards) {
        if (shard.empty()) continue;
        SpectralP2O& local = shard.spectral;
        local.num_sensors = shard.local_sensors();
        local.num_sources = shard.local_sources();
        local.num_steps = op.num_steps;
        local.freq_blocks.resize(local.num_freq() * local.block_size());
        for (std::size_t f = 0; f < local.num_freq(); ++f)
            for (std::size_t i = 0; i < local.num_sensors; ++i)
                for (std::size_t j = 0; j < local.num_sources; ++j)
                    local.freq_blocks[f * local.block_size() + i * local.num_sources + j] =
                        op.freq_entry(f, shard.sensor_begin + i, shard.source_begin + j);
        if (options.keep_channel_layout) ensure_channel_layout(local);
    }
    return partition;
}

namespace {

std::vector<SpaceTimeVector> scatter(const SpaceTimeVector& v, std::size_t chunks,
                                     std::size_t chunk_size, std::size_t num_steps) {
    v.validate();
    v.require_ordering(Ordering::SOTI);
    std::vector<SpaceTimeVector> slices;
    slices.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = std::min(c * chunk_size, v.spatial_dim);
        const std::size_t end = std::min((c + 1) * chunk_size, v.spatial_dim);
        SpaceTimeVector slice = SpaceTimeVector::zeros(end - begin, num_steps, Ordering::SOTI);
        std::copy(v.values.begin() + begin * num_steps, v.values.begin() + end * num_steps,
                  slice.values.begin());
        slices.push_back(std::move(slice));
    }
    return slices;
}

SpaceTimeVector gather(const std::vector<SpaceTimeVector>& slices, std::size_t spatial_dim,
                       std::size_t num_steps) {
    SpaceTimeVector out = SpaceTimeVector::zeros(spatial_dim, num_steps, Ordering::SOTI);
    std::size_t offset = 0;
    for (const SpaceTimeVector& slice : slices) {
        slice.require_ordering(Ordering::SOTI);
        std::copy(slice.values.begin(), slice.values.end(), out.values.begin() + offset);
        offset += slice.values.size();
    }
    if (offset != out.values.size())
        throw DimensionError("gather: slices do not cover the global vector");
    return out;
}

}  // namespace

std::vector<SpaceTimeVector> scatter_param(const SpaceTimeVector& m, const Partition& partition) {
    if (m.spatial_dim != partition.num_sources || m.num_steps != partition.num_steps)
        throw DimensionError("scatter_param: vector does not match partition");
    return scatter(m, partition.grid.cols, ceil_div(partition.num_sources, partition.grid.cols),
                   partition.num_steps);
}

std::vector<SpaceTimeVector> scatter_data(const SpaceTimeVector& d, const Partition& partition) {
    if (d.spatial_dim != partition.num_sensors || d.num_steps != partition.num_steps)
        throw DimensionError("scatter_data: vector does not match partition");
    return scatter(d, partition.grid.rows, ceil_div(partition.num_sensors, partition.grid.rows),
                   partition.num_steps);
}

SpaceTimeVector gather_param(const std::vector<SpaceTimeVector>& slices,
                             const Partition& partition) {
    return gather(slices, partition.num_sources, partition.num_steps);
}

SpaceTimeVector gather_data(const std::vector<SpaceTimeVector>& slices,
                            const Partition& partition) {
    return gather(slices, partition.num_sensors, partition.num_steps);
}

std::uint64_t CommLog::total_bytes() const {
    std::uint64_t sum = 0;
    for (const CommEvent& e : events) sum += e.total_bytes;
    return sum;
}

std::size_t CommLog::total_messages() const {
    std::size_t sum = 0;
    for (const CommEvent& e : events) sum += e.messages;
    return sum;
}

std::vector<PhaseReport> comm_report(const CommLog& log, const CostParams& params) {
    params.validate();
    std::vector<PhaseReport> report;
    for (const CommEvent& event : log.events) {
        auto it = std::find_if(report.begin(), report.end(),
                               [&](const PhaseReport& r) { return r.phase == event.phase; });
        if (it == report.end()) {
            report.push_back({event.phase, 0, 0, 0.0});
            it = report.end() - 1;
        }
        it->messages += event.messages;
        it->bytes += event.total_bytes;
        if (event.participants > 1) {
            it->modeled_seconds +=
                static_cast<double>(event.tree_depth) *
                (params.latency + static_cast<double>(event.link_bytes) / params.bandwidth);
        }
    }
    return report;
}

SpaceTimeVector distributed_forward(const Partition& partition, const SpaceTimeVector& m,
                                    const EngineOptions& options, CommLog* log,
                                    PipelineCounters* counters) {
    const GridShape grid = partition.grid;
    const std::size_t steps = partition.num_steps;
    std::vector<SpaceTimeVector> param_slices = scatter_param(m, partition);

    // Broadcast each column's parameter slice down the column.
    for (std::size_t j = 0; j < grid.cols; ++j) {
        record_collective(log, "broadcast", grid.rows,
                          static_cast<std::uint64_t>(8 * steps * param_slices[j].spatial_dim));
    }

    // Local matvecs; worker (i, j) sees only its shard and its column's slice.
    std::vector<PipelineCounters> worker_counters(counters ? partition.shards.size() : 0);
    if (counters)
        for (auto& wc : worker_counters) wc.time_stages = counters->time_stages;
    auto task = [&](std::size_t w) {
        const WorkerShard& shard = partition.shards[w];
        return local_forward(shard, param_slices[shard.grid_col], steps, options.backend,
                             counters ? &worker_counters[w] : nullptr);
    };
    std::vector<SpaceTimeVector> partials =
        run_workers(partition.shards.size(), options.policy, task);
    if (counters)
        for (const auto& wc : worker_counters) merge_counters(*counters, wc);

    // Sum-reduce each row onto its column-0 worker.
    std::vector<SpaceTimeVector> data_slices;
    data_slices.reserve(grid.rows);
    for (std::size_t i = 0; i < grid.rows; ++i) {
        std::vector<SpaceTimeVector> row(partials.begin() + i * grid.cols,
                                         partials.begin() + (i + 1) * grid.cols);
        record_collective(log, "reduce", grid.cols,
                          static_cast<std::uint64_t>(8 * steps * row.front().spatial_dim));
        tree_reduce(row);
        data_slices.push_back(std::move(row.front()));
    }
    return gather_data(data_slices, partition);
}

SpaceTimeVector distributed_adjoint(const Partition& partition, const SpaceTimeVector& d,
                                    const EngineOptions& options, CommLog* log,
                                    PipelineCounters* counters) {
    const GridShape grid = partition.grid;
    const std::size_t steps = partition.num_steps;
    std::vector<SpaceTimeVector> data_slices = scatter_data(d, partition);

    // Broadcast each row's data slice along the row.
    for (std::size_t i = 0; i < grid.rows; ++i) {
        record_collective(log, "broadcast", grid.cols,
                          static_cast<std::uint64_t>(8 * steps * data_slices[i].spatial_dim));
    }

    std::vector<PipelineCounters> worker_counters(counters ? partition.shards.size() : 0);
    if (counters)
        for (auto& wc : worker_counters) wc.time_stages = counters->time_stages;
    auto task = [&](std::size_t w) {
        const WorkerShard& shard = partition.shards[w];
        return local_adjoint(shard, data_slices[shard.grid_row], steps, options.backend,
                             counters ? &worker_counters[w] : nullptr);
    };
    std::vector<SpaceTimeVector> partials =
        run_workers(partition.shards.size(), options.policy, task);
    if (counters)
        for (const auto& wc : worker_counters) merge_counters(*counters, wc);

    // Sum-reduce each column onto its row-0 worker.
    std::vector<SpaceTimeVector> param_slices;
    param_slices.reserve(grid.cols);
    for (std::size_t j = 0; j < grid.cols; ++j) {
        std::vector<SpaceTimeVector> column;
        column.reserve(grid.rows);
        for (std::size_t i = 0; i < grid.rows; ++i) column.push_back(partials[i * grid.cols + j]);
        record_collective(log, "reduce", grid.rows,
                          static_cast<std::uint64_t>(8 * steps * column.front().spatial_dim));
        tree_reduce(column);
        param_slices.push_back(std::move(column.front()));
    }
    return gather_param(param_slices, partition);
}

}  // namespace btoep
