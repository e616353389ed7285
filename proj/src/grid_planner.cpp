#include "btoep/grid_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

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

// All (rows, cols) factorizations of `workers`, rows ascending.
std::vector<GridShape> factor_pairs(std::size_t workers) {
    std::vector<GridShape> pairs;
    for (std::size_t r = 1; r * r <= workers; ++r) {
        if (workers % r != 0) continue;
        pairs.push_back({r, workers / r});
        if (r != workers / r) pairs.push_back({workers / r, r});
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const GridShape& a, const GridShape& b) { return a.rows < b.rows; });
    return pairs;
}

// Golden-section minimization of the modified cost on [1, workers].
double continuous_argmin(std::size_t workers, double log_dim_ratio) {
    double lo = 1.0;
    double hi = static_cast<double>(workers);
    if (hi <= lo) return lo;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - phi * (hi - lo);
    double b = lo + phi * (hi - lo);
    double fa = modified_cost(a, workers, log_dim_ratio);
    double fb = modified_cost(b, workers, log_dim_ratio);
    for (int it = 0; it < 200 && hi - lo > 1e-10 * hi; ++it) {
        if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = modified_cost(a, workers, log_dim_ratio);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = modified_cost(b, workers, log_dim_ratio);
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

void CostParams::validate() const {
    if (latency < 0.0) throw Error("cost params: latency must be non-negative");
    if (bandwidth <= 0.0) throw Error("cost params: bandwidth must be positive");
    if (gpus_per_node < 1) throw Error("cost params: gpus per node must be at least 1");
}

std::string GridShape::to_string() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

GridShape GridShape::parse(const std::string& text) {
    const auto pos = text.find_first_of("xX");
    if (pos == std::string::npos || pos == 0 || pos + 1 >= text.size())
        throw Error("grid shape: expected RxC, got '" + text + "'");
    GridShape shape;
    try {
        shape.rows = std::stoull(text.substr(0, pos));
        shape.cols = std::stoull(text.substr(pos + 1));
    } catch (const std::exception&) {
        throw Error("grid shape: expected RxC, got '" + text + "'");
    }
    if (shape.rows == 0 || shape.cols == 0)
        throw Error("grid shape: rows and cols must be positive");
    return shape;
}

std::size_t ProblemDims::local_sources(std::size_t cols) const {
    return ceil_div(num_sources, cols);
}

std::size_t ProblemDims::local_sensors(std::size_t rows) const {
    return ceil_div(num_sensors, rows);
}

double ProblemDims::log_dim_ratio() const {
    return std::log10(static_cast<double>(num_sensors) / static_cast<double>(num_sources));
}

double comm_cost(const GridShape& grid, const ProblemDims& dims, const CostParams& params) {
    params.validate();
    const double steps = static_cast<double>(dims.num_steps);
    const double sources = static_cast<double>(dims.num_sources);
    const double sensors = static_cast<double>(dims.num_sensors);
    const double rows = static_cast<double>(grid.rows);
    const double cols = static_cast<double>(grid.cols);
    return (params.latency + 8.0 * steps * sources / (params.bandwidth * cols)) * std::log(rows) +
           (params.latency + 8.0 * steps * sensors / (params.bandwidth * rows)) * std::log(cols);
}

double modified_cost(double rows, std::size_t workers, double log_dim_ratio) {
    const double p = static_cast<double>(workers);
    if (rows < 1.0 || rows > p) throw Error("modified cost: rows must lie in [1, workers]");
    return (rows / p) * std::log(rows) +
           (std::pow(10.0, log_dim_ratio) / rows) * std::log(p / rows);
}

GridShape select_grid(std::size_t workers, double log_dim_ratio, unsigned gpus_per_node) {
    if (workers == 0) throw Error("select_grid: workers must be positive");
    if (gpus_per_node < 1) throw Error("select_grid: gpus per node must be at least 1");
    if (workers == 1) return {1, 1};

    const double target = continuous_argmin(workers, log_dim_ratio);
    const double p = static_cast<double>(workers);
    if (target <= 1.0 + 1e-6) return {1, workers};
    if (target >= p * (1.0 - 1e-6)) return {workers, 1};

    const std::vector<GridShape> pairs = factor_pairs(workers);
    auto distance = [target](const GridShape& g) {
        return std::abs(static_cast<double>(g.rows) - target);
    };
    auto orientation_ok = [log_dim_ratio](const GridShape& g) {
        return log_dim_ratio >= 0.0 ? g.rows >= g.cols : g.rows < g.cols;
    };

    if (gpus_per_node == 1) {
        // Exact integer minimizer of the modified cost; ties broken toward the
        // requested orientation, then toward the continuous optimum.
        double best_cost = std::numeric_limits<double>::infinity();
        for (const GridShape& g : pairs)
            best_cost = std::min(best_cost,
                                 modified_cost(static_cast<double>(g.rows), workers, log_dim_ratio));
        const GridShape* best = nullptr;
        for (const GridShape& g : pairs) {
            const double cost = modified_cost(static_cast<double>(g.rows), workers, log_dim_ratio);
            if (cost > best_cost * (1.0 + 1e-12) + 1e-300) continue;
            if (!best) {
                best = &g;
                continue;
            }
            if (orientation_ok(g) != orientation_ok(*best)) {
                if (orientation_ok(g)) best = &g;
                continue;
            }
            if (distance(g) < distance(*best) ||
                (distance(g) == distance(*best) && g.rows < best->rows))
                best = &g;
        }
        return *best;
    }

    // Hardware-aware snap: keep the requested orientation, then prefer row
    // counts divisible by the node size (column traffic stays on-node), then
    // column counts, then anything; within a class pick the row count nearest
    // the continuous optimum.
    std::vector<GridShape> oriented;
    for (const GridShape& g : pairs)
        if (orientation_ok(g)) oriented.push_back(g);
    if (oriented.empty()) return log_dim_ratio >= 0.0 ? GridShape{workers, 1} : GridShape{1, workers};

    auto pick = [&](auto&& keep) -> const GridShape* {
        const GridShape* best = nullptr;
        for (const GridShape& g : oriented) {
            if (!keep(g)) continue;
            if (!best || distance(g) < distance(*best) ||
                (distance(g) == distance(*best) &&
                 modified_cost(static_cast<double>(g.rows), workers, log_dim_ratio) <
                     modified_cost(static_cast<double>(best->rows), workers, log_dim_ratio)))
                best = &g;
        }
        return best;
    };

    const std::size_t node = gpus_per_node;
    if (const GridShape* g = pick([&](const GridShape& s) { return s.rows % node == 0; })) return *g;
    if (const GridShape* g = pick([&](const GridShape& s) { return s.cols % node == 0; })) return *g;
    return *pick([](const GridShape&) { return true; });
}

WeakScalingChoice weak_scaling_shape(double local_ratio, std::size_t workers) {
    if (local_ratio <= 0.0) throw Error("weak_scaling_shape: local ratio must be positive");
    WeakScalingChoice choice;
    if (local_ratio == 1.0) {
        choice.indifferent = true;
        choice.shape = {1, workers};
    } else if (local_ratio > 1.0) {
        choice.shape = {workers, 1};
    } else {
        choice.shape = {1, workers};
    }
    return choice;
}

std::vector<StepCost> step_cost_table(const ProblemDims& dims, const GridShape& grid,
                                      const CostParams& params) {
    params.validate();
    const double steps = static_cast<double>(dims.num_steps);
    const double len = 2.0 * steps;
    const double log_len = std::log2(len);
    const double local_src = static_cast<double>(dims.local_sources(grid.cols));
    const double local_sen = static_cast<double>(dims.local_sensors(grid.rows));

    const double bcast_depth_rows = static_cast<double>(tree_depth(grid.rows));
    const double reduce_depth_cols = static_cast<double>(tree_depth(grid.cols));

    auto comm_seconds = [&](double payload_bytes, double depth) {
        return depth * (params.latency + payload_bytes / params.bandwidth);
    };

    std::vector<StepCost> table;
    auto add = [&table](std::string phase, std::string step, double ops, double bytes,
                        double seconds) {
        table.push_back({std::move(phase), std::move(step), ops, bytes, seconds});
    };

    // One-time setup.
    add("setup", "fft_matrix", 2.0 * local_sen * local_src * steps * log_len,
        2.0 * 16.0 * local_sen * local_src * len, 0.0);
    add("setup", "reorder", 0.0, 2.0 * 16.0 * local_sen * local_src * len, 0.0);

    // One forward and one adjoint matvec; the adjoint swaps the roles of the
    // local sensor and source counts in the vector-sized steps.
    struct Side {
        const char* phase;
        double in_dim;   // channels entering the pipeline
        double out_dim;  // channels leaving it
        double bcast_payload;
        double bcast_depth;
        double reduce_payload;
        double reduce_depth;
    };
    const Side sides[2] = {
        {"forward", local_src, local_sen, 8.0 * steps * local_src, bcast_depth_rows,
         8.0 * steps * local_sen, reduce_depth_cols},
        {"adjoint", local_sen, local_src, 8.0 * steps * local_sen, reduce_depth_cols,
         8.0 * steps * local_src, bcast_depth_rows},
    };
    for (const Side& side : sides) {
        add(side.phase, "broadcast_vector", 0.0, side.bcast_payload,
            comm_seconds(side.bcast_payload, side.bcast_depth));
        add(side.phase, "pad_vector", 2.0 * side.in_dim * steps,
            8.0 * side.in_dim * steps + 16.0 * side.in_dim * len, 0.0);
        add(side.phase, "fft_vector", 2.0 * side.in_dim * steps * log_len,
            2.0 * 16.0 * side.in_dim * len, 0.0);
        add(side.phase, "reorder_in", 0.0, 2.0 * 16.0 * side.in_dim * len, 0.0);
        add(side.phase, "apply_matrix", local_sen * local_src * (steps + 1.0),
            16.0 * (local_sen * local_src + local_src + local_sen) * len, 0.0);
        add(side.phase, "reorder_out", 0.0, 2.0 * 16.0 * side.out_dim * len, 0.0);
        add(side.phase, "ifft_vector", 2.0 * side.out_dim * steps * log_len,
            2.0 * 16.0 * side.out_dim * len, 0.0);
        add(side.phase, "unpad_vector", 2.0 * side.out_dim * steps,
            16.0 * side.out_dim * steps + 8.0 * side.out_dim * steps, 0.0);
        add(side.phase, "reduce_vector", 0.0, side.reduce_payload,
            comm_seconds(side.reduce_payload, side.reduce_depth));
    }

    // Reference point: the direct triangular sum over time.
    add("naive", "apply_matrix", local_sen * local_src * steps * steps / 2.0,
        8.0 * local_sen * local_src * steps * steps / 2.0, 0.0);

    // Fill modeled seconds for compute rows from the traffic model.
    for (StepCost& row : table)
        if (row.seconds == 0.0 && row.bytes > 0.0) row.seconds = row.bytes / params.bandwidth;
    return table;
}

CostEstimate conventional_cost_estimate(double grid_points, double num_steps,
                                        double num_sensors, double rank_fraction) {
    if (grid_points <= 0.0 || num_steps <= 0.0 || num_sensors <= 0.0 || rank_fraction <= 0.0)
        throw Error("cost estimate: all inputs must be positive");
    CostEstimate est;
    const double state_dim = 3.0 * grid_points;  // 3 values per grid point
    est.per_solve_flops = 324.0 * state_dim * num_steps;
    est.effective_rank = num_sensors * num_steps * rank_fraction;
    est.conventional_total_flops = 2.0 * est.effective_rank * est.per_solve_flops;

    const double num_sources = std::pow(grid_points, 2.0 / 3.0);  // surface field
    est.fft_setup_flops = num_sensors * est.per_solve_flops;
    est.fft_matvec_flops =
        2.0 * est.effective_rank * 8.0 * num_sources * num_sensors * num_steps;
    est.fft_total_flops = est.fft_setup_flops + est.fft_matvec_flops;
    est.ratio = est.conventional_total_flops / est.fft_total_flops;
    return est;
}

double apply_arithmetic_intensity(double local_sensors, double local_sources) {
    const double prod = local_sensors * local_sources;
    return prod / (2.0 * (prod + local_sources + local_sensors));
}

}  // namespace btoep
