#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace mnls {

/// Unnormalized DFT, out[m] = sum_j in[j] e^{-2 pi i m j / n}. Plans are cached per size
/// and shared by all callers; `in` and `out` may alias.
void fft_forward(const std::complex<double>* in, std::complex<double>* out, std::size_t n);

/// Unnormalized inverse DFT (sign +).
void fft_backward(const std::complex<double>* in, std::complex<double>* out, std::size_t n);

inline std::vector<std::complex<double>> fft_forward(std::vector<std::complex<double>> v) {
    fft_forward(v.data(), v.data(), v.size());
    return v;
}

/// Inverse including the 1/n factor.
inline std::vector<std::complex<double>> ifft(std::vector<std::complex<double>> v) {
    fft_backward(v.data(), v.data(), v.size());
    const double s = 1.0 / static_cast<double>(v.size());
    for (auto& z : v) z *= s;
    return v;
}

/// Signed integer frequency of DFT bin m (numpy fftfreq * n).
[[nodiscard]] inline long fft_index(std::size_t m, std::size_t n) noexcept {
    return m < (n + 1) / 2 ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(n);
}

} // namespace mnls
