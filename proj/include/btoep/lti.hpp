#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "btoep/block_operator.hpp"
#include "btoep/space_time.hpp"

namespace btoep {

// Discrete linear time-invariant test problem
//   state[k+1] = state_update * state[k] + input_map * m[k]
//   data[k+1]  = observation_map * state[k+1]
// with zero initial state. All matrices dense, row-major.
struct LTISystemSpec {
    std::size_t state_dim = 0;
    std::size_t num_sources = 0;
    std::size_t num_sensors = 0;
    std::size_t num_steps = 0;
    std::vector<double> state_update;     // state_dim x state_dim
    std::vector<double> input_map;        // state_dim x num_sources
    std::vector<double> observation_map;  // num_sensors x state_dim

    void validate() const;

    // Power-iteration estimate of the spectral radius of the state update.
    double spectral_radius_estimate(std::size_t iterations = 200) const;
};

// Non-empty when the fixture looks unstable for long horizons (estimated
// spectral radius above 1.05). A warning, never an error.
std::optional<std::string> stability_warning(const LTISystemSpec& spec);

// Explicit time stepping; input and output are TOSI.
SpaceTimeVector simulate_forward(const LTISystemSpec& spec, const SpaceTimeVector& m);

// First block column of the parameter-to-observable map, one forward solve
// per source column (unit impulse at time zero).
CompactP2O assemble_compact_p2o(const LTISystemSpec& spec);

// Same operator obtained from one adjoint recursion per sensor row.
CompactP2O assemble_compact_p2o_adjoint_route(const LTISystemSpec& spec);

// Built-in fixture family: 1D advection-diffusion forward-Euler stencil with
// sensors sampling evenly spaced nodes and sources injecting at evenly spaced
// nodes. Stable for diffusion/advection numbers in the usual explicit range.
struct FixtureConfig {
    std::size_t state_dim = 64;
    std::size_t num_sources = 4;
    std::size_t num_sensors = 3;
    std::size_t num_steps = 32;
    double diffusion = 0.3;   // nu * dt / dx^2
    double advection = 0.2;   // a * dt / dx
};

LTISystemSpec make_advection_diffusion_fixture(const FixtureConfig& config);

}  // namespace btoep
