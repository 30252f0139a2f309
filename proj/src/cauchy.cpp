#include "mnls/cauchy.hpp"

#include <cmath>

#include "mnls/fft.hpp"

namespace mnls {

void cauchy_periodic(const cplx* in, cplx* out, std::size_t n, Side side) {
    std::vector<cplx> spec(in, in + n);
    fft_forward(spec.data(), spec.data(), n);
    for (std::size_t m = 0; m < n; ++m) {
        if (fft_index(m, n) < 0 || (n % 2 == 0 && m == n / 2)) spec[m] = 0.0;
    }
    fft_backward(spec.data(), spec.data(), n);
    const double s = 1.0 / static_cast<double>(n);
    if (side == Side::Plus) {
        for (std::size_t j = 0; j < n; ++j) out[j] = spec[j] * s;
    } else {
        for (std::size_t j = 0; j < n; ++j) out[j] = spec[j] * s - in[j];
    }
}

MatrixSeries cauchy_projection(const MatrixSeries& f, Side side) {
    const std::size_t n = f.size();
    if (n < 2 || (n & (n - 1)) != 0) throw InputError("cauchy_projection: length is not a power of two");
    MatrixSeries out(f.rows(), f.cols(), n);
    std::vector<cplx> buf(n);
    for (int r = 0; r < f.rows(); ++r) {
        for (int c = 0; c < f.cols(); ++c) {
            for (std::size_t j = 0; j < n; ++j) buf[j] = f[j](r, c);
            cauchy_periodic(buf.data(), buf.data(), n, side);
            for (std::size_t j = 0; j < n; ++j) out[j](r, c) = buf[j];
        }
    }
    return out;
}

Eigen::VectorXcd cauchy_projection(const Eigen::VectorXcd& f, Side side) {
    const auto n = static_cast<std::size_t>(f.size());
    if (n < 2 || (n & (n - 1)) != 0) throw InputError("cauchy_projection: length is not a power of two");
    Eigen::VectorXcd out(f.size());
    cauchy_periodic(f.data(), out.data(), n, side);
    return out;
}

// =============================================================================
// LineCauchy
// =============================================================================

LineCauchy::LineCauchy(std::size_t n) : n_(n), kernel_hat_(2 * n) {
    if (n < 2) throw InputError("LineCauchy needs at least two nodes");
    const std::size_t m = 2 * n;
    kernel_hat_[0] = 0.5;
    for (std::size_t d = 1; d < n; ++d) {
        if (d % 2 == 0) continue;
        const cplx v = kI / (kPi * static_cast<double>(d));
        kernel_hat_[d] = v;
        kernel_hat_[m - d] = -v;
    }
    fft_forward(kernel_hat_.data(), kernel_hat_.data(), m);
    const double s = 1.0 / static_cast<double>(m);
    for (auto& z : kernel_hat_) z *= s;
}

void LineCauchy::apply(const cplx* in, cplx* out, Side side) const {
    const std::size_t m = 2 * n_;
    std::vector<cplx> buf(m, cplx{});
    std::copy(in, in + n_, buf.begin());
    fft_forward(buf.data(), buf.data(), m);
    for (std::size_t j = 0; j < m; ++j) buf[j] *= kernel_hat_[j];
    fft_backward(buf.data(), buf.data(), m);
    if (side == Side::Plus) {
        std::copy(buf.begin(), buf.begin() + static_cast<long>(n_), out);
    } else {
        for (std::size_t j = 0; j < n_; ++j) out[j] = buf[j] - in[j];
    }
}

Eigen::VectorXcd LineCauchy::apply(const Eigen::VectorXcd& f, Side side) const {
    if (static_cast<std::size_t>(f.size()) != n_) throw InputError("LineCauchy: length mismatch");
    Eigen::VectorXcd out(f.size());
    apply(f.data(), out.data(), side);
    return out;
}

Eigen::RowVectorXcd line_cauchy_weights(const Grid1D& grid, cplx z) {
    if (z.imag() == 0.0) throw InputError("line_cauchy_weights: point lies on the real axis");
    const double h = grid.step;
    Eigen::RowVectorXcd w(static_cast<Eigen::Index>(grid.count));
    const cplx den = 2.0 * kPi * kI;
    for (std::size_t j = 0; j < grid.count; ++j) {
        const cplx d = z - grid.node(j);
        cplx v;
        if (z.imag() > 0.0) v = h * (std::exp(kI * kPi * d / h) - 1.0) / (den * d);
        else v = -h * (1.0 - std::exp(-kI * kPi * d / h)) / (den * d);
        w[static_cast<Eigen::Index>(j)] = v;
    }
    return w;
}

} // namespace mnls
