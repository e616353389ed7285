#include "btoep/block_operator.hpp"

#include <cassert>
#include <chrono>
#include <cmath>
#include <string>

#include "btoep/errors.hpp"
#include "btoep/fft.hpp"

namespace btoep {
namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
public:
    StageTimer(PipelineCounters* counters, StageCounters* stage)
        : stage_(counters && counters->time_stages ? stage : nullptr) {
        if (stage_) start_ = Clock::now();
    }
    ~StageTimer() {
        if (stage_) {
            stage_->seconds +=
                std::chrono::duration<double>(Clock::now() - start_).count();
        }
    }

private:
    StageCounters* stage_;
    Clock::time_point start_;
};

double fft_model_ops(std::size_t channels, std::size_t num_steps) {
    const double len = 2.0 * static_cast<double>(num_steps);
    return static_cast<double>(channels) * len * std::log2(len);
}

// Scratch buffers reused across matvecs, one set per thread; every stage
// fully initializes the region it reads.
struct Workspace {
    std::vector<std::complex<double>> chan;
    std::vector<std::complex<double>> freq_in;
    std::vector<std::complex<double>> freq_out;
    std::vector<std::complex<double>> chan_out;
};

Workspace& workspace() {
    thread_local Workspace ws;
    return ws;
}

// Zero-pad SOTI channels to twice the step count and transform in place.
void pad_and_transform(std::vector<std::complex<double>>& buf, const SpaceTimeVector& v,
                       PipelineCounters* counters, StageCounters* pad_stage,
                       StageCounters* fft_stage) {
    const std::size_t channels = v.spatial_dim;
    const std::size_t steps = v.num_steps;
    const std::size_t len = 2 * steps;
    {
        StageTimer timer(counters, pad_stage);
        buf.assign(channels * len, {});
        for (std::size_t s = 0; s < channels; ++s)
            for (std::size_t t = 0; t < steps; ++t)
                buf[s * len + t] = v.values[s * steps + t];
    }
    if (counters) {
        pad_stage->ops += 2.0 * static_cast<double>(channels * steps);
        pad_stage->bytes +=
            8.0 * static_cast<double>(channels * steps) + 16.0 * static_cast<double>(channels * len);
    }
    {
        StageTimer timer(counters, fft_stage);
        fft::forward(buf.data(), len, channels);
    }
    if (counters) {
        fft_stage->ops += fft_model_ops(channels, steps);
        fft_stage->bytes += 2.0 * 16.0 * static_cast<double>(channels * len);
    }
}

// Inverse transform per channel, drop the padding, and take real parts.
SpaceTimeVector transform_back_and_unpad(std::vector<std::complex<double>>& buf,
                                         std::size_t channels, std::size_t steps,
                                         PipelineCounters* counters,
                                         StageCounters* ifft_stage,
                                         StageCounters* unpad_stage) {
    const std::size_t len = 2 * steps;
    {
        StageTimer timer(counters, ifft_stage);
        fft::inverse(buf.data(), len, channels);
    }
    if (counters) {
        ifft_stage->ops += fft_model_ops(channels, steps);
        ifft_stage->bytes += 2.0 * 16.0 * static_cast<double>(channels * len);
    }
    SpaceTimeVector out;
    {
        StageTimer timer(counters, unpad_stage);
        out = SpaceTimeVector::zeros(channels, steps, Ordering::SOTI);
        for (std::size_t s = 0; s < channels; ++s)
            for (std::size_t t = 0; t < steps; ++t)
                out.values[s * steps + t] = buf[s * len + t].real();
    }
    if (counters) {
        unpad_stage->ops += 2.0 * static_cast<double>(channels * steps);
        unpad_stage->bytes +=
            16.0 * static_cast<double>(channels * steps) + 8.0 * static_cast<double>(channels * steps);
    }
#ifndef NDEBUG
    // Real operator on real data: the imaginary residue is FFT round-off only.
    double residue = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < buf.size(); ++i) {
        residue = std::max(residue, std::abs(buf[i].imag()));
        scale = std::max(scale, std::abs(buf[i].real()));
    }
    assert(residue <= 1e-10 * scale + 1e-300);
#endif
    return out;
}

void check_apply_input(const SpectralP2O& op, const SpaceTimeVector& v,
                       std::size_t expected_dim, const char* what) {
    op.validate();
    v.validate();
    v.require_ordering(Ordering::SOTI);
    if (v.spatial_dim != expected_dim || v.num_steps != op.num_steps) {
        throw DimensionError(std::string(what) + ": input is " + std::to_string(v.spatial_dim) +
                             " x " + std::to_string(v.num_steps) + " but operator expects " +
                             std::to_string(expected_dim) + " x " + std::to_string(op.num_steps));
    }
}

}  // namespace

CompactP2O CompactP2O::zeros(std::size_t num_sensors, std::size_t num_sources,
                             std::size_t num_steps) {
    CompactP2O op;
    op.num_sensors = num_sensors;
    op.num_sources = num_sources;
    op.num_steps = num_steps;
    op.blocks.assign(num_steps * num_sensors * num_sources, 0.0);
    return op;
}

double& CompactP2O::entry(std::size_t step, std::size_t sensor, std::size_t source) {
    return blocks[step * block_size() + sensor * num_sources + source];
}

double CompactP2O::entry(std::size_t step, std::size_t sensor, std::size_t source) const {
    return blocks[step * block_size() + sensor * num_sources + source];
}

void CompactP2O::validate() const {
    if (num_sensors == 0 || num_sources == 0 || num_steps == 0)
        throw DimensionError("compact operator: all dimensions must be positive");
    if (blocks.size() != num_steps * block_size())
        throw DimensionError("compact operator: block storage has " +
                             std::to_string(blocks.size()) + " entries, expected " +
                             std::to_string(num_steps * block_size()));
}

std::complex<double> SpectralP2O::freq_entry(std::size_t freq, std::size_t sensor,
                                             std::size_t source) const {
    return freq_blocks[freq * block_size() + sensor * num_sources + source];
}

void SpectralP2O::validate() const {
    if (num_sensors == 0 || num_sources == 0 || num_steps == 0)
        throw DimensionError("spectral operator: all dimensions must be positive");
    if (freq_blocks.size() != num_freq() * block_size())
        throw DimensionError("spectral operator: frequency storage has " +
                             std::to_string(freq_blocks.size()) + " entries, expected " +
                             std::to_string(num_freq() * block_size()));
}

SpectralP2O setup(const CompactP2O& compact, const SetupOptions& options) {
    compact.validate();
    const std::size_t sensors = compact.num_sensors;
    const std::size_t sources = compact.num_sources;
    const std::size_t steps = compact.num_steps;
    const std::size_t len = 2 * steps;
    const std::size_t channels = sensors * sources;

    // Channel-major padded copy: one zero-padded time series per
    // (sensor, source) pair, transformed as a batch.
    std::vector<std::complex<double>> spectra(channels * len);
    for (std::size_t k = 0; k < steps; ++k) {
        const double* block = compact.blocks.data() + k * channels;
        for (std::size_t c = 0; c < channels; ++c) spectra[c * len + k] = block[c];
    }
    fft::forward(spectra.data(), len, channels);

    SpectralP2O result;
    result.num_sensors = sensors;
    result.num_sources = sources;
    result.num_steps = steps;
    result.freq_blocks.resize(len * channels);
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t f = 0; f < len; ++f)
            result.freq_blocks[f * channels + c] = spectra[c * len + f];
    if (options.keep_channel_layout) result.channel_spectra = std::move(spectra);
    return result;
}

void ensure_channel_layout(SpectralP2O& op) {
    if (op.has_channel_layout()) return;
    op.validate();
    const std::size_t channels = op.block_size();
    const std::size_t len = op.num_freq();
    op.channel_spectra.resize(channels * len);
    for (std::size_t f = 0; f < len; ++f)
        for (std::size_t c = 0; c < channels; ++c)
            op.channel_spectra[c * len + f] = op.freq_blocks[f * channels + c];
}

SpaceTimeVector apply_forward(const SpectralP2O& op, const SpaceTimeVector& m,
                              PipelineCounters* counters) {
    check_apply_input(op, m, op.num_sources, "apply_forward");
    const std::size_t sensors = op.num_sensors;
    const std::size_t sources = op.num_sources;
    const std::size_t len = op.num_freq();

    Workspace& ws = workspace();
    std::vector<std::complex<double>>& chan = ws.chan;
    pad_and_transform(chan, m, counters, counters ? &counters->pad : nullptr,
                      counters ? &counters->forward_fft : nullptr);

    std::vector<std::complex<double>>& freq_in = ws.freq_in;
    {
        StageTimer timer(counters, counters ? &counters->reorder_in : nullptr);
        freq_in.resize(len * sources);
        for (std::size_t s = 0; s < sources; ++s)
            for (std::size_t f = 0; f < len; ++f) freq_in[f * sources + s] = chan[s * len + f];
    }
    if (counters) counters->reorder_in.bytes += 2.0 * 16.0 * static_cast<double>(len * sources);

    std::vector<std::complex<double>>& freq_out = ws.freq_out;
    {
        StageTimer timer(counters, counters ? &counters->apply : nullptr);
        freq_out.resize(len * sensors);
        for (std::size_t f = 0; f < len; ++f) {
            const std::complex<double>* block = op.freq_blocks.data() + f * op.block_size();
            const std::complex<double>* in = freq_in.data() + f * sources;
            std::complex<double>* out = freq_out.data() + f * sensors;
            for (std::size_t i = 0; i < sensors; ++i) {
                std::complex<double> acc{0.0, 0.0};
                const std::complex<double>* row = block + i * sources;
                for (std::size_t j = 0; j < sources; ++j) acc += row[j] * in[j];
                out[i] = acc;
            }
        }
    }
    if (counters) {
        counters->apply.ops += 8.0 * static_cast<double>(sensors * sources) * static_cast<double>(len);
        counters->apply.bytes +=
            16.0 * static_cast<double>(sensors * sources + sources + sensors) * static_cast<double>(len);
    }

    std::vector<std::complex<double>>& chan_out = ws.chan_out;
    {
        StageTimer timer(counters, counters ? &counters->reorder_out : nullptr);
        chan_out.resize(sensors * len);
        for (std::size_t i = 0; i < sensors; ++i)
            for (std::size_t f = 0; f < len; ++f) chan_out[i * len + f] = freq_out[f * sensors + i];
    }
    if (counters) counters->reorder_out.bytes += 2.0 * 16.0 * static_cast<double>(len * sensors);

    return transform_back_and_unpad(chan_out, sensors, op.num_steps, counters,
                                    counters ? &counters->inverse_fft : nullptr,
                                    counters ? &counters->unpad : nullptr);
}

SpaceTimeVector apply_adjoint(const SpectralP2O& op, const SpaceTimeVector& d,
                              PipelineCounters* counters) {
    check_apply_input(op, d, op.num_sensors, "apply_adjoint");
    const std::size_t sensors = op.num_sensors;
    const std::size_t sources = op.num_sources;
    const std::size_t len = op.num_freq();

    Workspace& ws = workspace();
    std::vector<std::complex<double>>& chan = ws.chan;
    pad_and_transform(chan, d, counters, counters ? &counters->pad : nullptr,
                      counters ? &counters->forward_fft : nullptr);

    std::vector<std::complex<double>>& freq_in = ws.freq_in;
    {
        StageTimer timer(counters, counters ? &counters->reorder_in : nullptr);
        freq_in.resize(len * sensors);
        for (std::size_t i = 0; i < sensors; ++i)
            for (std::size_t f = 0; f < len; ++f) freq_in[f * sensors + i] = chan[i * len + f];
    }
    if (counters) counters->reorder_in.bytes += 2.0 * 16.0 * static_cast<double>(len * sensors);

    // Per-frequency conjugate-transpose product; the stored blocks are read
    // row by row, never transposed in memory.
    std::vector<std::complex<double>>& freq_out = ws.freq_out;
    {
        StageTimer timer(counters, counters ? &counters->apply : nullptr);
        freq_out.assign(len * sources, {});
        for (std::size_t f = 0; f < len; ++f) {
            const std::complex<double>* block = op.freq_blocks.data() + f * op.block_size();
            const std::complex<double>* in = freq_in.data() + f * sensors;
            std::complex<double>* out = freq_out.data() + f * sources;
            for (std::size_t i = 0; i < sensors; ++i) {
                const std::complex<double> w = in[i];
                const std::complex<double>* row = block + i * sources;
                for (std::size_t j = 0; j < sources; ++j) out[j] += std::conj(row[j]) * w;
            }
        }
    }
    if (counters) {
        counters->apply.ops += 8.0 * static_cast<double>(sensors * sources) * static_cast<double>(len);
        counters->apply.bytes +=
            16.0 * static_cast<double>(sensors * sources + sources + sensors) * static_cast<double>(len);
    }

    std::vector<std::complex<double>>& chan_out = ws.chan_out;
    {
        StageTimer timer(counters, counters ? &counters->reorder_out : nullptr);
        chan_out.resize(sources * len);
        for (std::size_t j = 0; j < sources; ++j)
            for (std::size_t f = 0; f < len; ++f) chan_out[j * len + f] = freq_out[f * sources + j];
    }
    if (counters) counters->reorder_out.bytes += 2.0 * 16.0 * static_cast<double>(len * sources);

    return transform_back_and_unpad(chan_out, sources, op.num_steps, counters,
                                    counters ? &counters->inverse_fft : nullptr,
                                    counters ? &counters->unpad : nullptr);
}

namespace {

void require_channel_layout(const SpectralP2O& op, const char* what) {
    if (!op.has_channel_layout()) {
        throw Error(std::string(what) +
                    ": spectral operator was built without the channel layout "
                    "(setup with keep_channel_layout)");
    }
}

}  // namespace

SpaceTimeVector apply_forward_ewp(const SpectralP2O& op, const SpaceTimeVector& m,
                                  PipelineCounters* counters) {
    check_apply_input(op, m, op.num_sources, "apply_forward_ewp");
    require_channel_layout(op, "apply_forward_ewp");
    const std::size_t sensors = op.num_sensors;
    const std::size_t sources = op.num_sources;
    const std::size_t len = op.num_freq();

    Workspace& ws = workspace();
    std::vector<std::complex<double>>& chan = ws.chan;
    pad_and_transform(chan, m, counters, counters ? &counters->pad : nullptr,
                      counters ? &counters->forward_fft : nullptr);

    std::vector<std::complex<double>>& out_chan = ws.chan_out;
    {
        StageTimer timer(counters, counters ? &counters->apply : nullptr);
        out_chan.assign(sensors * len, {});
        for (std::size_t i = 0; i < sensors; ++i) {
            std::complex<double>* acc = out_chan.data() + i * len;
            for (std::size_t j = 0; j < sources; ++j) {
                const std::complex<double>* spectrum =
                    op.channel_spectra.data() + (i * sources + j) * len;
                const std::complex<double>* in = chan.data() + j * len;
                for (std::size_t f = 0; f < len; ++f) acc[f] += spectrum[f] * in[f];
            }
        }
    }
    if (counters) {
        counters->apply.ops += 8.0 * static_cast<double>(sensors * sources) * static_cast<double>(len);
        counters->apply.bytes +=
            16.0 * static_cast<double>(len) * (3.0 * static_cast<double>(sensors * sources) +
                                               2.0 * static_cast<double>(sensors + sources));
    }

    return transform_back_and_unpad(out_chan, sensors, op.num_steps, counters,
                                    counters ? &counters->inverse_fft : nullptr,
                                    counters ? &counters->unpad : nullptr);
}

SpaceTimeVector apply_adjoint_ewp(const SpectralP2O& op, const SpaceTimeVector& d,
                                  PipelineCounters* counters) {
    check_apply_input(op, d, op.num_sensors, "apply_adjoint_ewp");
    require_channel_layout(op, "apply_adjoint_ewp");
    const std::size_t sensors = op.num_sensors;
    const std::size_t sources = op.num_sources;
    const std::size_t len = op.num_freq();

    Workspace& ws = workspace();
    std::vector<std::complex<double>>& chan = ws.chan;
    pad_and_transform(chan, d, counters, counters ? &counters->pad : nullptr,
                      counters ? &counters->forward_fft : nullptr);

    std::vector<std::complex<double>>& out_chan = ws.chan_out;
    {
        StageTimer timer(counters, counters ? &counters->apply : nullptr);
        out_chan.assign(sources * len, {});
        for (std::size_t j = 0; j < sources; ++j) {
            std::complex<double>* acc = out_chan.data() + j * len;
            for (std::size_t i = 0; i < sensors; ++i) {
                const std::complex<double>* spectrum =
                    op.channel_spectra.data() + (i * sources + j) * len;
                const std::complex<double>* in = chan.data() + i * len;
                for (std::size_t f = 0; f < len; ++f) acc[f] += std::conj(spectrum[f]) * in[f];
            }
        }
    }
    if (counters) {
        counters->apply.ops += 8.0 * static_cast<double>(sensors * sources) * static_cast<double>(len);
        counters->apply.bytes +=
            16.0 * static_cast<double>(len) * (3.0 * static_cast<double>(sensors * sources) +
                                               2.0 * static_cast<double>(sensors + sources));
    }

    return transform_back_and_unpad(out_chan, sources, op.num_steps, counters,
                                    counters ? &counters->inverse_fft : nullptr,
                                    counters ? &counters->unpad : nullptr);
}

SpaceTimeVector naive_apply_forward(const CompactP2O& op, const SpaceTimeVector& m,
                                    PipelineCounters* counters) {
    op.validate();
    m.validate();
    m.require_ordering(Ordering::TOSI);
    if (m.spatial_dim != op.num_sources || m.num_steps != op.num_steps)
        throw DimensionError("naive_apply_forward: input does not match operator");

    const std::size_t sensors = op.num_sensors;
    const std::size_t sources = op.num_sources;
    SpaceTimeVector d = SpaceTimeVector::zeros(sensors, op.num_steps, Ordering::TOSI);
    for (std::size_t t_out = 0; t_out < op.num_steps; ++t_out) {
        double* out = d.values.data() + t_out * sensors;
        for (std::size_t t_in = 0; t_in <= t_out; ++t_in) {
            const double* block = op.blocks.data() + (t_out - t_in) * op.block_size();
            const double* in = m.values.data() + t_in * sources;
            for (std::size_t i = 0; i < sensors; ++i) {
                double acc = 0.0;
                const double* row = block + i * sources;
                for (std::size_t j = 0; j < sources; ++j) acc += row[j] * in[j];
                out[i] += acc;
            }
            if (counters) {
                ++counters->block_products;
                counters->naive_ops += 2.0 * static_cast<double>(sensors * sources);
            }
        }
    }
    return d;
}

SpaceTimeVector naive_apply_adjoint(const CompactP2O& op, const SpaceTimeVector& d,
                                    PipelineCounters* counters) {
    op.validate();
    d.validate();
    d.require_ordering(Ordering::TOSI);
    if (d.spatial_dim != op.num_sensors || d.num_steps != op.num_steps)
        throw DimensionError("naive_apply_adjoint: input does not match operator");

    const std::size_t sensors = op.num_sensors;
    const std::size_t sources = op.num_sources;
    SpaceTimeVector m = SpaceTimeVector::zeros(sources, op.num_steps, Ordering::TOSI);
    for (std::size_t t_out = 0; t_out < op.num_steps; ++t_out) {
        const double* in = d.values.data() + t_out * sensors;
        for (std::size_t t_in = 0; t_in <= t_out; ++t_in) {
            const double* block = op.blocks.data() + (t_out - t_in) * op.block_size();
            double* out = m.values.data() + t_in * sources;
            for (std::size_t i = 0; i < sensors; ++i) {
                const double w = in[i];
                const double* row = block + i * sources;
                for (std::size_t j = 0; j < sources; ++j) out[j] += row[j] * w;
            }
            if (counters) {
                ++counters->block_products;
                counters->naive_ops += 2.0 * static_cast<double>(sensors * sources);
            }
        }
    }
    return m;
}

}  // namespace btoep
