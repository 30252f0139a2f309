#pragma once

// =============================================================================
// Cauchy projections on a uniform k-grid.
//
// Two discretizations are provided:
//   * the periodic sharp multiplier: exact projectors on the window treated as a
//     torus (C+ keeps DFT modes 0..n/2-1, C- = C+ - I);
//   * the line transform: exact boundary values on R of the Cauchy integral of the
//     sinc interpolant of the samples. Used by the Riemann-Hilbert solvers, where the
//     periodic wrap-around would otherwise limit accuracy to O(1/L).
// =============================================================================

#include <vector>

#include "mnls/core.hpp"

namespace mnls {

enum class Side { Plus, Minus };

/// Periodic sharp projector applied to a single sequence; `in` and `out` may alias.
void cauchy_periodic(const cplx* in, cplx* out, std::size_t n, Side side);

/// Periodic sharp projector applied entrywise to a matrix series. Power-of-two length required.
[[nodiscard]] MatrixSeries cauchy_projection(const MatrixSeries& f, Side side);
[[nodiscard]] Eigen::VectorXcd cauchy_projection(const Eigen::VectorXcd& f, Side side);

/// Boundary values C± of the Cauchy transform of the sinc interpolant:
/// (C+ f)_l = f_l / 2 + (i/pi) sum_{l-j odd} f_j / (l - j), evaluated by FFT convolution.
class LineCauchy {
public:
    explicit LineCauchy(std::size_t n);

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

    /// out = C± in. `in` and `out` may alias. Thread-safe.
    void apply(const cplx* in, cplx* out, Side side) const;

    [[nodiscard]] Eigen::VectorXcd apply(const Eigen::VectorXcd& f, Side side) const;

private:
    std::size_t n_;
    std::vector<cplx> kernel_hat_;
};

/// Weights w_j with sum_j w_j f_j = (1/2 pi i) int S f(s) / (s - z) ds, where S f is the sinc
/// interpolant on `grid`; z must be off the real axis.
[[nodiscard]] Eigen::RowVectorXcd line_cauchy_weights(const Grid1D& grid, cplx z);

} // namespace mnls
