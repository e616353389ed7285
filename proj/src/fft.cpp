#include "btoep/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace btoep::fft {
namespace {

// The FFTW planner is not thread-safe; plan creation and destruction are
// serialized. Execution of a created plan is safe to run concurrently.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void transform(std::complex<double>* data, std::size_t n, std::size_t count, int sign) {
    if (n == 0 || count == 0) return;
    auto* raw = reinterpret_cast<fftw_complex*>(data);
    const int len = static_cast<int>(n);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_many_dft(1, &len, static_cast<int>(count),
                                  raw, nullptr, 1, len,
                                  raw, nullptr, 1, len,
                                  sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
}

}  // namespace

void forward(std::complex<double>* data, std::size_t n, std::size_t count) {
    transform(data, n, count, FFTW_FORWARD);
}

void inverse(std::complex<double>* data, std::size_t n, std::size_t count) {
    transform(data, n, count, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n * count; ++i) data[i] *= scale;
}

}  // namespace btoep::fft
