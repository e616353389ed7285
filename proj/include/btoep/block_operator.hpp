#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "btoep/counters.hpp"
#include "btoep/space_time.hpp"

namespace btoep {

// Compact storage of a block lower-triangular Toeplitz parameter-to-observable
// operator: the first block column only. Block k couples an input at time step
// j to the output at step j + k; each block is sensors x sources, row-major.
struct CompactP2O {
    std::size_t num_sensors = 0;  // rows of each block
    std::size_t num_sources = 0;  // columns of each block
    std::size_t num_steps = 0;    // number of blocks
    std::vector<double> blocks;   // num_steps * num_sensors * num_sources

    static CompactP2O zeros(std::size_t num_sensors, std::size_t num_sources,
                            std::size_t num_steps);

    std::size_t block_size() const { return num_sensors * num_sources; }
    double& entry(std::size_t step, std::size_t sensor, std::size_t source);
    double entry(std::size_t step, std::size_t sensor, std::size_t source) const;

    void validate() const;
};

// Frequency-domain form of the operator: 2*num_steps complex blocks, one per
// frequency, in the same sensors x sources row-major block shape. Obtained by
// transforming each (sensor, source) time series padded to twice the length.
// The same object serves forward and adjoint products; no transposed copy is
// ever stored.
struct SpectralP2O {
    std::size_t num_sensors = 0;
    std::size_t num_sources = 0;
    std::size_t num_steps = 0;
    std::vector<std::complex<double>> freq_blocks;  // 2*num_steps blocks

    // Channel-major copy of the same spectra (per (sensor, source) pair, its
    // 2*num_steps-long spectrum contiguous). Only kept when setup is asked to
    // retain it; required by the elementwise-product backend.
    std::vector<std::complex<double>> channel_spectra;

    std::size_t num_freq() const { return 2 * num_steps; }
    std::size_t block_size() const { return num_sensors * num_sources; }
    bool has_channel_layout() const { return !channel_spectra.empty(); }

    std::complex<double> freq_entry(std::size_t freq, std::size_t sensor,
                                    std::size_t source) const;

    void validate() const;
};

struct SetupOptions {
    // Retain the channel-major spectra alongside the per-frequency blocks.
    // Costs a second operator-sized array; off by default.
    bool keep_channel_layout = false;
};

// Transform the compact operator to its frequency-domain form.
SpectralP2O setup(const CompactP2O& compact, const SetupOptions& options = {});

// Derive the channel-major layout from the stored frequency blocks (a pure
// permutation). No-op when already present.
void ensure_channel_layout(SpectralP2O& op);

// d = F m through the padded-FFT pipeline. Input and output are SOTI.
SpaceTimeVector apply_forward(const SpectralP2O& op, const SpaceTimeVector& m,
                              PipelineCounters* counters = nullptr);

// m = F^T d; identical pipeline with the conjugate-transposed per-frequency
// product, consuming the same spectral operator.
SpaceTimeVector apply_adjoint(const SpectralP2O& op, const SpaceTimeVector& d,
                              PipelineCounters* counters = nullptr);

// Elementwise-product backend: per-channel spectra multiplied frequency by
// frequency, then summed over block rows (forward) or conjugated and summed
// over block columns (adjoint). Requires the retained channel layout.
SpaceTimeVector apply_forward_ewp(const SpectralP2O& op, const SpaceTimeVector& m,
                                  PipelineCounters* counters = nullptr);
SpaceTimeVector apply_adjoint_ewp(const SpectralP2O& op, const SpaceTimeVector& d,
                                  PipelineCounters* counters = nullptr);

// Direct block-triangular sums, O(num_steps^2 / 2) block products. Oracle and
// reference backend. Input and output are TOSI.
SpaceTimeVector naive_apply_forward(const CompactP2O& op, const SpaceTimeVector& m,
                                    PipelineCounters* counters = nullptr);
SpaceTimeVector naive_apply_adjoint(const CompactP2O& op, const SpaceTimeVector& d,
                                    PipelineCounters* counters = nullptr);

}  // namespace btoep
