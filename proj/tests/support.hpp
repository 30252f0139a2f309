#pragma once

// =============================================================================
// Shared helpers for the unit tests.
// =============================================================================

#include <cmath>
#include <functional>

#include "mnls/core.hpp"

namespace mnls::test {

/// Field sampled from a closed-form profile (the profile is kept for off-node values).
inline PotentialField field_from(const Grid1D& g, int p, int q, int sigma, const Profile& f) {
    MatrixSeries s(p, q, g.count);
    for (std::size_t j = 0; j < g.count; ++j) s[j] = f(g.node(j));
    return PotentialField(g, p, q, sigma, std::move(s), f);
}

/// Same samples without the profile (band-limited interpolation off the nodes).
inline PotentialField samples_only(const PotentialField& f) {
    return PotentialField(f.grid, f.p, f.q, f.sigma, f.samples);
}

inline RowMat rank_one(int p, int q) {
    return RowMat::Constant(p, q, cplx(1.0 / std::sqrt(static_cast<double>(p * q)), 0.0));
}

inline Profile gaussian(double amp, const RowMat& dir, double center = 0.0, double width = 1.0) {
    return [=](double x) {
        const double u = (x - center) / width;
        return RowMat(amp * std::exp(-u * u) * dir);
    };
}

inline MatrixSeries series_from(const Grid1D& g, int rows, int cols, const std::function<RowMat(double)>& f) {
    MatrixSeries s(rows, cols, g.count);
    for (std::size_t j = 0; j < g.count; ++j) s[j] = f(g.node(j));
    return s;
}

inline double max_diff(const MatrixSeries& a, const MatrixSeries& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, (RowMat(a[j]) - RowMat(b[j])).norm());
    return m;
}

inline double rel_l2(const MatrixSeries& a, const MatrixSeries& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        num += (RowMat(a[j]) - RowMat(b[j])).squaredNorm();
        den += RowMat(b[j]).squaredNorm();
    }
    return std::sqrt(num / den);
}

} // namespace mnls::test
