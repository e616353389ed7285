#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "btoep/distributed.hpp"
#include "btoep/grid_planner.hpp"

namespace btoep {

struct BenchConfig {
    std::vector<std::size_t> sources_list{8};
    std::vector<std::size_t> sensors_list{4};
    std::vector<std::size_t> steps_list{64};
    std::vector<GridShape> grids{{1, 1}};
    std::vector<Backend> backends{Backend::Fft};
    std::size_t trials = 3;
    std::uint64_t seed = 1;
    bool include_adjoint = true;
};

struct BenchRow {
    std::string backend;
    bool adjoint = false;
    std::size_t num_sources = 0;
    std::size_t num_sensors = 0;
    std::size_t num_steps = 0;
    std::string grid;
    std::size_t trial = 0;
    double setup_seconds = 0.0;
    double pad_seconds = 0.0;
    double fft_seconds = 0.0;
    double reorder_in_seconds = 0.0;
    double apply_seconds = 0.0;
    double reorder_out_seconds = 0.0;
    double ifft_seconds = 0.0;
    double unpad_seconds = 0.0;
    double total_seconds = 0.0;  // wall time around the whole matvec
    double comm_modeled_seconds = 0.0;
    std::uint64_t comm_bytes = 0;
    double apply_ops = 0.0;
    double apply_bytes = 0.0;
    double total_ops = 0.0;
    double apply_intensity = 0.0;
};

// Sweep the configured sizes with seeded random operators and inputs. One row
// per (backend, direction, sizes, grid, trial).
std::vector<BenchRow> run_bench(const BenchConfig& config, const CostParams& params = {});

std::string bench_csv_header();
void write_csv_row(std::ostream& out, const BenchRow& row);

}  // namespace btoep
