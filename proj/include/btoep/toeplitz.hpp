#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace btoep {

// Scalar Toeplitz matrix of order n, described by its first column
// (entries on and below the diagonal) and the tail of its first row
// (entries above the diagonal). A lower-triangular matrix has an all-zero
// first-row tail.
struct ToeplitzSpec {
    std::size_t order = 0;
    std::vector<double> first_col;       // diagonal and below, length order
    std::vector<double> first_row_tail;  // above the diagonal, length order-1

    static ToeplitzSpec lower_triangular(std::vector<double> first_col);

    bool is_lower_triangular() const;
    void validate() const;  // throws DimensionError on inconsistent lengths
};

// DFT of the first column of the 2n x 2n circulant the Toeplitz matrix
// embeds into. Conjugate-symmetric for real Toeplitz data.
struct CirculantSpectrum {
    std::size_t order = 0;                       // original Toeplitz order n
    std::vector<std::complex<double>> spectrum;  // length 2n
};

// First column of the circulant embedding:
// [c_0, ..., c_{n-1}, 0, r_{n-1}, ..., r_1] where c is the first column and
// r the first-row tail. Length 2n; index n is exactly zero.
std::vector<double> embed_circulant_first_column(const ToeplitzSpec& spec);

CirculantSpectrum circulant_spectrum(const ToeplitzSpec& spec);

// y = T x via padded FFT, pointwise product, inverse FFT, truncation.
std::vector<double> toeplitz_matvec(const CirculantSpectrum& spectrum,
                                    std::span<const double> x);
std::vector<double> toeplitz_matvec(const ToeplitzSpec& spec, std::span<const double> x);

// y = T^T x; same spectrum, conjugated pointwise product.
std::vector<double> toeplitz_adjoint_matvec(const CirculantSpectrum& spectrum,
                                            std::span<const double> y);
std::vector<double> toeplitz_adjoint_matvec(const ToeplitzSpec& spec,
                                            std::span<const double> y);

}  // namespace btoep
