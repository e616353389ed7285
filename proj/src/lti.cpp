#include "btoep/lti.hpp"

#include <cmath>
#include <string>

#include "btoep/errors.hpp"

namespace btoep {
namespace {

// y = M x for a dense row-major rows x cols matrix.
void dense_matvec(const std::vector<double>& mat, std::size_t rows, std::size_t cols,
                  const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        const double* row = mat.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

// y = M^T x.
void dense_matvec_transposed(const std::vector<double>& mat, std::size_t rows,
                             std::size_t cols, const double* x, double* y) {
    for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double w = x[i];
        const double* row = mat.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) y[j] += row[j] * w;
    }
}

}  // namespace

void LTISystemSpec::validate() const {
    if (state_dim == 0 || num_sources == 0 || num_sensors == 0 || num_steps == 0)
        throw DimensionError("lti spec: all dimensions must be positive");
    if (state_update.size() != state_dim * state_dim)
        throw DimensionError("lti spec: state update must be state_dim x state_dim");
    if (input_map.size() != state_dim * num_sources)
        throw DimensionError("lti spec: input map must be state_dim x num_sources");
    if (observation_map.size() != num_sensors * state_dim)
        throw DimensionError("lti spec: observation map must be num_sensors x state_dim");
}

double LTISystemSpec::spectral_radius_estimate(std::size_t iterations) const {
    validate();
    std::vector<double> v(state_dim), w(state_dim);
    // Deterministic nonzero start vector.
    for (std::size_t i = 0; i < state_dim; ++i)
        v[i] = 1.0 + 0.37 * static_cast<double>(i % 7);
    double norm = 0.0;
    for (std::size_t it = 0; it < iterations; ++it) {
        dense_matvec(state_update, state_dim, state_dim, v.data(), w.data());
        norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        for (std::size_t i = 0; i < state_dim; ++i) v[i] = w[i] / norm;
    }
    return norm;
}

std::optional<std::string> stability_warning(const LTISystemSpec& spec) {
    const double radius = spec.spectral_radius_estimate();
    if (radius > 1.05) {
        return "state update has estimated spectral radius " + std::to_string(radius) +
               " > 1.05; long-horizon fixtures may overflow";
    }
    return std::nullopt;
}

SpaceTimeVector simulate_forward(const LTISystemSpec& spec, const SpaceTimeVector& m) {
    spec.validate();
    m.validate();
    m.require_ordering(Ordering::TOSI);
    if (m.spatial_dim != spec.num_sources || m.num_steps != spec.num_steps)
        throw DimensionError("simulate_forward: parameter vector does not match the system");

    SpaceTimeVector d = SpaceTimeVector::zeros(spec.num_sensors, spec.num_steps, Ordering::TOSI);
    std::vector<double> state(spec.state_dim, 0.0);
    std::vector<double> next(spec.state_dim);
    std::vector<double> forced(spec.state_dim);
    for (std::size_t k = 0; k < spec.num_steps; ++k) {
        dense_matvec(spec.state_update, spec.state_dim, spec.state_dim, state.data(), next.data());
        dense_matvec(spec.input_map, spec.state_dim, spec.num_sources,
                     m.values.data() + k * spec.num_sources, forced.data());
        for (std::size_t i = 0; i < spec.state_dim; ++i) next[i] += forced[i];
        state.swap(next);
        dense_matvec(spec.observation_map, spec.num_sensors, spec.state_dim, state.data(),
                     d.values.data() + k * spec.num_sensors);
    }
    return d;
}

CompactP2O assemble_compact_p2o(const LTISystemSpec& spec) {
    spec.validate();
    CompactP2O op = CompactP2O::zeros(spec.num_sensors, spec.num_sources, spec.num_steps);
    // One forward solve per source: the response to a unit impulse at time
    // zero is exactly column j of every block.
    SpaceTimeVector impulse =
        SpaceTimeVector::zeros(spec.num_sources, spec.num_steps, Ordering::TOSI);
    for (std::size_t j = 0; j < spec.num_sources; ++j) {
        impulse.values.assign(impulse.values.size(), 0.0);
        impulse.values[j] = 1.0;
        SpaceTimeVector response = simulate_forward(spec, impulse);
        for (std::size_t k = 0; k < spec.num_steps; ++k)
            for (std::size_t i = 0; i < spec.num_sensors; ++i)
                op.entry(k, i, j) = response.values[k * spec.num_sensors + i];
    }
    return op;
}

CompactP2O assemble_compact_p2o_adjoint_route(const LTISystemSpec& spec) {
    spec.validate();
    CompactP2O op = CompactP2O::zeros(spec.num_sensors, spec.num_sources, spec.num_steps);
    // One adjoint recursion per sensor: w <- A^T w seeded with the sensor's
    // observation row; row i of block k is then w_k^T * input_map.
    std::vector<double> w(spec.state_dim), next(spec.state_dim), row(spec.num_sources);
    for (std::size_t i = 0; i < spec.num_sensors; ++i) {
        for (std::size_t u = 0; u < spec.state_dim; ++u)
            w[u] = spec.observation_map[i * spec.state_dim + u];
        for (std::size_t k = 0; k < spec.num_steps; ++k) {
            dense_matvec_transposed(spec.input_map, spec.state_dim, spec.num_sources, w.data(),
                                    row.data());
            for (std::size_t j = 0; j < spec.num_sources; ++j) op.entry(k, i, j) = row[j];
            if (k + 1 < spec.num_steps) {
                dense_matvec_transposed(spec.state_update, spec.state_dim, spec.state_dim,
                                        w.data(), next.data());
                w.swap(next);
            }
        }
    }
    return op;
}

LTISystemSpec make_advection_diffusion_fixture(const FixtureConfig& config) {
    if (config.num_sensors > config.state_dim || config.num_sources > config.state_dim)
        throw DimensionError("fixture: sensors and sources must not exceed the state dimension");

    LTISystemSpec spec;
    spec.state_dim = config.state_dim;
    spec.num_sources = config.num_sources;
    spec.num_sensors = config.num_sensors;
    spec.num_steps = config.num_steps;

    const std::size_t n = config.state_dim;
    spec.state_update.assign(n * n, 0.0);
    const double lower = config.diffusion + 0.5 * config.advection;
    const double upper = config.diffusion - 0.5 * config.advection;
    for (std::size_t i = 0; i < n; ++i) {
        spec.state_update[i * n + i] = 1.0 - 2.0 * config.diffusion;
        if (i > 0) spec.state_update[i * n + (i - 1)] = lower;
        if (i + 1 < n) spec.state_update[i * n + (i + 1)] = upper;
    }

    auto node_for = [n](std::size_t index, std::size_t count) {
        return (2 * index + 1) * n / (2 * count);
    };
    spec.input_map.assign(n * config.num_sources, 0.0);
    for (std::size_t j = 0; j < config.num_sources; ++j)
        spec.input_map[node_for(j, config.num_sources) * config.num_sources + j] = 1.0;
    spec.observation_map.assign(config.num_sensors * n, 0.0);
    for (std::size_t i = 0; i < config.num_sensors; ++i)
        spec.observation_map[i * n + node_for(i, config.num_sensors)] = 1.0;
    return spec;
}

}  // namespace btoep
