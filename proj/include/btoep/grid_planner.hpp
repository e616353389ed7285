#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace btoep {

// Machine model: per-message latency (seconds), bandwidth (bytes/second),
// and accelerators per node.
struct CostParams {
    double latency = 1e-6;
    double bandwidth = 1e10;
    unsigned gpus_per_node = 1;

    void validate() const;
};

// r x c arrangement of workers; rows partition sensors, columns partition
// sources.
struct GridShape {
    std::size_t rows = 1;
    std::size_t cols = 1;

    std::size_t workers() const { return rows * cols; }
    bool operator==(const GridShape&) const = default;
    std::string to_string() const;

    static GridShape parse(const std::string& text);  // "RxC"
};

struct ProblemDims {
    std::size_t num_sources = 0;  // global parameter dimension
    std::size_t num_sensors = 0;  // global data dimension
    std::size_t num_steps = 0;

    std::size_t local_sources(std::size_t cols) const;  // ceil division
    std::size_t local_sensors(std::size_t rows) const;
    double log_dim_ratio() const;  // log10(sensors / sources)
};

// Total broadcast + reduce model for one forward and one adjoint matvec:
//   (latency + 8*steps*sources/(bandwidth*cols)) * ln(rows)
// + (latency + 8*steps*sensors/(bandwidth*rows)) * ln(cols)
double comm_cost(const GridShape& grid, const ProblemDims& dims, const CostParams& params);

// Scale-free form minimized by the planner:
//   (r/p) ln r + (10^l / r) ln(p/r),  l = log10(sensors/sources).
// The log base only rescales the objective; the argmin is unchanged.
double modified_cost(double rows, std::size_t workers, double log_dim_ratio);

// Pick the grid: minimize the modified cost over real row counts, then snap
// to an integer factorization. With gpus_per_node > 1 the node-divisibility
// preference overrides the raw cost model (on-node links are not modeled);
// with gpus_per_node == 1 the result is the exact integer minimizer.
GridShape select_grid(std::size_t workers, double log_dim_ratio, unsigned gpus_per_node = 1);

// Weak scaling at fixed local sizes: the cost depends on the shape only
// through (1 - local_ratio) * log(rows), so the choice degenerates.
struct WeakScalingChoice {
    bool indifferent = false;  // local_ratio == 1: any shape works
    GridShape shape;
};
WeakScalingChoice weak_scaling_shape(double local_ratio, std::size_t workers);

// One row of the per-matvec step-cost table. Compute steps carry a model
// operation count and single-pass traffic estimate; communication steps carry
// modeled seconds from the tree depth and the machine model. Reorder steps
// are pure memory operations (no ops).
struct StepCost {
    std::string phase;  // "setup" | "forward" | "adjoint" | "naive"
    std::string step;
    double ops = 0.0;
    double bytes = 0.0;
    double seconds = 0.0;
};

std::vector<StepCost> step_cost_table(const ProblemDims& dims, const GridShape& grid,
                                      const CostParams& params);

// Whole-inversion cost model for a conventional time-stepping approach versus
// the FFT-based operator, for a 3D wave problem with 3 state values per grid
// point, a 27-point stencil, 4 stencil applications per step, and a surface
// parameter field (sources = grid_points^(2/3)).
struct CostEstimate {
    double per_solve_flops = 0.0;
    double effective_rank = 0.0;
    double conventional_total_flops = 0.0;
    double fft_setup_flops = 0.0;
    double fft_matvec_flops = 0.0;
    double fft_total_flops = 0.0;
    double ratio = 0.0;  // conventional / fft
};

CostEstimate conventional_cost_estimate(double grid_points, double num_steps,
                                        double num_sensors, double rank_fraction = 0.1);

// Model operations-per-byte of the per-frequency matrix apply:
//   n_d n_m / (2 (n_d n_m + n_m + n_d)), tending to 1/2.
double apply_arithmetic_intensity(double local_sensors, double local_sources);

}  // namespace btoep
