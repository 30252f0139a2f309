#include "mnls/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mnls/fft.hpp"

namespace mnls {

// =============================================================================
// Grid1D
// =============================================================================

Grid1D::Grid1D(double start, double step, std::size_t count) : start(start), step(step), count(count) {
    if (!(step > 0.0) || !std::isfinite(step) || !std::isfinite(start))
        throw InputError("grid step must be positive and finite");
    if (count < 2) throw InputError("grid needs at least two nodes");
}

Grid1D Grid1D::window(double lo, double hi, std::size_t count) {
    if (!(hi > lo)) throw InputError("grid window needs hi > lo");
    if (count < 2) throw InputError("grid needs at least two nodes");
    return Grid1D(lo, (hi - lo) / static_cast<double>(count), count);
}

bool Grid1D::is_power_of_two() const noexcept { return count >= 2 && (count & (count - 1)) == 0; }

void Grid1D::require_power_of_two(const std::string& what) const {
    if (!is_power_of_two()) {
        std::ostringstream os;
        os << what << ": node count " << count << " is not a power of two";
        throw InputError(os.str());
    }
}

std::vector<double> Grid1D::nodes() const {
    std::vector<double> out(count);
    for (std::size_t j = 0; j < count; ++j) out[j] = node(j);
    return out;
}

std::size_t Grid1D::nearest(double v) const noexcept {
    const double r = std::round((v - start) / step);
    if (!(r > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(r), count - 1);
}

// =============================================================================
// BlockMatrix
// =============================================================================

BlockMatrix::BlockMatrix(int p, int q) : p_(p), q_(q), m_(RowMat::Zero(p + q, p + q)) {
    if (p < 1 || q < 1) throw InputError("block sizes must be positive");
}

BlockMatrix::BlockMatrix(int p, int q, RowMat entries) : p_(p), q_(q), m_(std::move(entries)) {
    if (p < 1 || q < 1) throw InputError("block sizes must be positive");
    if (m_.rows() != p + q || m_.cols() != p + q) throw InputError("block matrix has wrong shape");
}

BlockMatrix BlockMatrix::identity(int p, int q) {
    return BlockMatrix(p, q, RowMat::Identity(p + q, p + q));
}

RowMat sigma3(int p, int q) {
    RowMat s = RowMat::Identity(p + q, p + q);
    s.bottomRightCorner(q, q) *= -1.0;
    return s;
}

// =============================================================================
// MatrixSeries
// =============================================================================

MatrixSeries::MatrixSeries(int rows, int cols, std::size_t count)
    : rows_(rows), cols_(cols), count_(count), data_(static_cast<std::size_t>(rows) * cols * count) {}

Eigen::VectorXcd MatrixSeries::entry(int r, int c) const {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(count_));
    for (std::size_t j = 0; j < count_; ++j) v[static_cast<Eigen::Index>(j)] = (*this)[j](r, c);
    return v;
}

void MatrixSeries::set_entry(int r, int c, const Eigen::VectorXcd& v) {
    for (std::size_t j = 0; j < count_; ++j) (*this)[j](r, c) = v[static_cast<Eigen::Index>(j)];
}

double MatrixSeries::max_norm() const {
    double m = 0.0;
    for (std::size_t j = 0; j < count_; ++j) m = std::max(m, (*this)[j].norm());
    return m;
}

// =============================================================================
// PotentialField
// =============================================================================

PotentialField::PotentialField(Grid1D grid, int p, int q, int sigma, MatrixSeries samples, Profile profile)
    : grid(grid), p(p), q(q), sigma(sigma), samples(std::move(samples)), profile(std::move(profile)) {
    if (sigma != 1 && sigma != -1) throw InputError("sigma must be +1 or -1");
    if (p < 1 || q < 1) throw InputError("p and q must be positive");
    if (this->samples.size() != grid.count) throw InputError("sample count does not match grid");
    if (this->samples.rows() != p || this->samples.cols() != q) throw InputError("samples are not p x q");
}

RowMat PotentialField::at(double x) const {
    if (profile) return profile(x);
    const double t0 = (x - grid.start) / grid.step;
    const auto n = static_cast<double>(grid.count);
    if (t0 < -0.5 || t0 > n - 0.5) return RowMat::Zero(p, q);
    // Band-limited interpolant of the window treated as periodic (Nyquist mode split evenly).
    const double r = std::round(t0);
    if (std::abs(t0 - r) < 1e-14) return samples[static_cast<std::size_t>(std::clamp(r, 0.0, n - 1.0))];
    RowMat out = RowMat::Zero(p, q);
    const bool even = grid.count % 2 == 0;
    for (std::size_t j = 0; j < grid.count; ++j) {
        const double t = t0 - static_cast<double>(j);
        const double a = kPi * t / n;
        const double w = even ? std::sin(kPi * t) / (n * std::tan(a)) : std::sin(kPi * t) / (n * std::sin(a));
        out += w * samples[j];
    }
    return out;
}

double PotentialField::u_l1(double a, double b) const {
    double acc = 0.0;
    const double r2 = std::sqrt(2.0);
    for (std::size_t j = 0; j < grid.count; ++j) {
        const double x = grid.node(j);
        if (x < a || x > b) continue;
        acc += r2 * samples[j].norm();
    }
    return acc * grid.step;
}

PotentialField PotentialField::reflected() const {
    Grid1D g(-grid.back(), grid.step, grid.count);
    MatrixSeries s(p, q, grid.count);
    for (std::size_t j = 0; j < grid.count; ++j) s[j] = samples[grid.count - 1 - j];
    Profile prof;
    if (profile) prof = [f = profile](double x) { return f(-x); };
    return PotentialField(g, p, q, sigma, std::move(s), std::move(prof));
}

PotentialField PotentialField::cut(double x0, bool keep_right) const {
    MatrixSeries s = samples;
    for (std::size_t j = 0; j < grid.count; ++j) {
        const double x = grid.node(j);
        if (keep_right ? x < x0 : x > x0) s[j].setZero();
        else if (std::abs(x - x0) <= 1e-12 * std::max(1.0, std::abs(x0))) s[j] *= 0.5;
    }
    const PotentialField whole = *this;
    Profile prof = [whole, x0, keep_right](double x) -> RowMat {
        if (keep_right ? x < x0 : x > x0) return RowMat::Zero(whole.p, whole.q);
        return whole.at(x);
    };
    return PotentialField(grid, p, q, sigma, std::move(s), std::move(prof));
}

// =============================================================================
// RunConfig
// =============================================================================

void RunConfig::validate() const {
    if (p < 1 || q < 1) throw InputError("p and q must be positive");
    if (sigma != 1 && sigma != -1) throw InputError("sigma must be +1 or -1");
    if (!(solver_tol > 0.0) || !(symmetry_tol > 0.0)) throw InputError("tolerances must be positive");
    if (!(cutoff_threshold > 0.0) || !(cutoff_threshold < 1.0))
        throw InputError("cutoff_threshold must lie in (0, 1)");
    if (!(s_infinity_margin > 0.0)) throw InputError("s_infinity_margin must be positive");
}

// =============================================================================
// Operations
// =============================================================================

BlockMatrix assemble_U(const RowMat& Q, int sigma) {
    const int p = static_cast<int>(Q.rows());
    const int q = static_cast<int>(Q.cols());
    BlockMatrix U(p, q);
    U.m12() = Q;
    U.m21() = static_cast<double>(sigma) * Q.adjoint();
    return U;
}

void ad_sigma3_exp_inplace(cplx theta, int p, Eigen::Ref<RowMat> M) {
    const auto n = M.rows();
    const cplx up = std::exp(-2.0 * kI * theta);
    const cplx lo = std::exp(2.0 * kI * theta);
    M.topRightCorner(p, n - p) *= up;
    M.bottomLeftCorner(n - p, p) *= lo;
}

BlockMatrix ad_sigma3_exp(cplx theta, const BlockMatrix& M) {
    BlockMatrix out = M;
    ad_sigma3_exp_inplace(theta, M.p(), out.entries());
    return out;
}

SobolevNorms discrete_norms(const MatrixSeries& f, const Grid1D& grid) {
    grid.require_power_of_two("discrete_norms");
    if (f.size() != grid.count) throw InputError("discrete_norms: sample count does not match grid");
    const std::size_t n = grid.count;
    const double h = grid.step;
    double l2 = 0.0;
    double l21 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double a = f[j].squaredNorm();
        const double x = grid.node(j);
        l2 += a;
        l21 += (1.0 + x * x) * a;
    }
    l2 *= h;
    l21 *= h;
    // Derivative energy by Plancherel: h sum |f'|^2 = (h/n) sum xi^2 |F|^2, Nyquist bin dropped.
    double d2 = 0.0;
    std::vector<cplx> buf(n);
    const double dxi = 2.0 * kPi / (static_cast<double>(n) * h);
    for (int r = 0; r < f.rows(); ++r) {
        for (int c = 0; c < f.cols(); ++c) {
            for (std::size_t j = 0; j < n; ++j) buf[j] = f[j](r, c);
            fft_forward(buf.data(), buf.data(), n);
            for (std::size_t m = 0; m < n; ++m) {
                if (m == n / 2) continue;
                const double xi = dxi * static_cast<double>(fft_index(m, n));
                d2 += xi * xi * std::norm(buf[m]);
            }
        }
    }
    d2 *= h / static_cast<double>(n);
    SobolevNorms out;
    out.l2 = std::sqrt(l2);
    out.l21 = std::sqrt(l21);
    out.h1 = std::sqrt(l2 + d2);
    out.h11 = std::sqrt(out.h1 * out.h1 + out.l21 * out.l21);
    return out;
}

} // namespace mnls
