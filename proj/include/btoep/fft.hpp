#pragma once

#include <complex>
#include <cstddef>

namespace btoep::fft {

// Unnormalized forward DFT, in place. `data` holds `count` contiguous
// transforms of length `n` each (stride n between batch members).
void forward(std::complex<double>* data, std::size_t n, std::size_t count = 1);

// Inverse DFT, in place, normalized by 1/n so that inverse(forward(x)) == x.
void inverse(std::complex<double>* data, std::size_t n, std::size_t count = 1);

}  // namespace btoep::fft
