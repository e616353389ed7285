#include "btoep/toeplitz.hpp"

#include <string>

#include "btoep/errors.hpp"
#include "btoep/fft.hpp"

namespace btoep {
namespace {

std::vector<double> spectral_matvec(const CirculantSpectrum& spectrum,
                                    std::span<const double> x, bool conjugate) {
    const std::size_t n = spectrum.order;
    if (x.size() != n) {
        throw DimensionError("toeplitz matvec: input length " + std::to_string(x.size()) +
                             " does not match matrix order " + std::to_string(n));
    }
    const std::size_t len = 2 * n;
    std::vector<std::complex<double>> buf(len);
    for (std::size_t i = 0; i < n; ++i) buf[i] = x[i];

    fft::forward(buf.data(), len);
    if (conjugate) {
        for (std::size_t i = 0; i < len; ++i) buf[i] *= std::conj(spectrum.spectrum[i]);
    } else {
        for (std::size_t i = 0; i < len; ++i) buf[i] *= spectrum.spectrum[i];
    }
    fft::inverse(buf.data(), len);

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real();
    return out;
}

}  // namespace

ToeplitzSpec ToeplitzSpec::lower_triangular(std::vector<double> first_col) {
    ToeplitzSpec spec;
    spec.order = first_col.size();
    spec.first_col = std::move(first_col);
    spec.first_row_tail.assign(spec.order == 0 ? 0 : spec.order - 1, 0.0);
    return spec;
}

bool ToeplitzSpec::is_lower_triangular() const {
    for (double v : first_row_tail)
        if (v != 0.0) return false;
    return true;
}

void ToeplitzSpec::validate() const {
    if (order == 0) throw DimensionError("toeplitz spec: order must be positive");
    if (first_col.size() != order) {
        throw DimensionError("toeplitz spec: first column has length " +
                             std::to_string(first_col.size()) + ", expected " +
                             std::to_string(order));
    }
    if (first_row_tail.size() != order - 1) {
        throw DimensionError("toeplitz spec: first row tail has length " +
                             std::to_string(first_row_tail.size()) + ", expected " +
                             std::to_string(order - 1));
    }
}

std::vector<double> embed_circulant_first_column(const ToeplitzSpec& spec) {
    spec.validate();
    const std::size_t n = spec.order;
    std::vector<double> col(2 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) col[i] = spec.first_col[i];
    // col[n] stays zero (the circulant corner); the first-row tail fills the
    // remainder in reverse so that row 0 of the circulant reads
    // [c_0, r_1, ..., r_{n-1}, 0, c_{n-1}, ..., c_1].
    for (std::size_t i = 0; i + 1 < n; ++i) col[2 * n - 1 - i] = spec.first_row_tail[i];
    return col;
}

CirculantSpectrum circulant_spectrum(const ToeplitzSpec& spec) {
    std::vector<double> col = embed_circulant_first_column(spec);
    CirculantSpectrum result;
    result.order = spec.order;
    result.spectrum.assign(col.begin(), col.end());
    fft::forward(result.spectrum.data(), result.spectrum.size());
    return result;
}

std::vector<double> toeplitz_matvec(const CirculantSpectrum& spectrum,
                                    std::span<const double> x) {
    return spectral_matvec(spectrum, x, false);
}

std::vector<double> toeplitz_matvec(const ToeplitzSpec& spec, std::span<const double> x) {
    return spectral_matvec(circulant_spectrum(spec), x, false);
}

std::vector<double> toeplitz_adjoint_matvec(const CirculantSpectrum& spectrum,
                                            std::span<const double> y) {
    return spectral_matvec(spectrum, y, true);
}

std::vector<double> toeplitz_adjoint_matvec(const ToeplitzSpec& spec,
                                            std::span<const double> y) {
    return spectral_matvec(circulant_spectrum(spec), y, true);
}

}  // namespace btoep
