#pragma once

// =============================================================================
// Core types shared by every module: grids, block matrices, sampled matrix
// functions, potentials, weighted Sobolev norms and run configuration.
// =============================================================================

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mnls/errors.hpp"

namespace mnls {

using cplx = std::complex<double>;
using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

// =============================================================================
// Grid1D
// =============================================================================

/// Uniform nodes start + j*step, j in [0, count).
struct Grid1D {
    double start = 0.0;
    double step = 1.0;
    std::size_t count = 2;

    Grid1D() = default;
    Grid1D(double start, double step, std::size_t count);

    /// Half-open window [lo, hi) with `count` nodes.
    static Grid1D window(double lo, double hi, std::size_t count);

    [[nodiscard]] double node(std::size_t j) const noexcept { return start + step * static_cast<double>(j); }
    [[nodiscard]] double back() const noexcept { return node(count - 1); }
    [[nodiscard]] double length() const noexcept { return step * static_cast<double>(count); }
    [[nodiscard]] bool is_power_of_two() const noexcept;
    void require_power_of_two(const std::string& what) const;
    [[nodiscard]] std::vector<double> nodes() const;
    /// Index of the node closest to v, clamped to the grid.
    [[nodiscard]] std::size_t nearest(double v) const noexcept;

    bool operator==(const Grid1D&) const = default;
};

// =============================================================================
// BlockMatrix
// =============================================================================

/// (p+q)x(p+q) complex matrix with block views m11 (pxp), m12 (pxq), m21 (qxp), m22 (qxq).
class BlockMatrix {
public:
    BlockMatrix() = default;
    BlockMatrix(int p, int q);
    BlockMatrix(int p, int q, RowMat entries);

    static BlockMatrix identity(int p, int q);

    [[nodiscard]] int p() const noexcept { return p_; }
    [[nodiscard]] int q() const noexcept { return q_; }
    [[nodiscard]] int n() const noexcept { return p_ + q_; }

    RowMat& entries() noexcept { return m_; }
    [[nodiscard]] const RowMat& entries() const noexcept { return m_; }

    auto m11() { return m_.topLeftCorner(p_, p_); }
    auto m12() { return m_.topRightCorner(p_, q_); }
    auto m21() { return m_.bottomLeftCorner(q_, p_); }
    auto m22() { return m_.bottomRightCorner(q_, q_); }
    [[nodiscard]] auto m11() const { return m_.topLeftCorner(p_, p_); }
    [[nodiscard]] auto m12() const { return m_.topRightCorner(p_, q_); }
    [[nodiscard]] auto m21() const { return m_.bottomLeftCorner(q_, p_); }
    [[nodiscard]] auto m22() const { return m_.bottomRightCorner(q_, q_); }

private:
    int p_ = 1;
    int q_ = 1;
    RowMat m_ = RowMat::Zero(2, 2);
};

/// diag(I_p, -I_q)
[[nodiscard]] RowMat sigma3(int p, int q);

// =============================================================================
// MatrixSeries: one rows x cols matrix per grid node, stored contiguously.
// =============================================================================

class MatrixSeries {
public:
    using Map = Eigen::Map<RowMat>;
    using ConstMap = Eigen::Map<const RowMat>;

    MatrixSeries() = default;
    MatrixSeries(int rows, int cols, std::size_t count);

    [[nodiscard]] int rows() const noexcept { return rows_; }
    [[nodiscard]] int cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return count_; }

    Map operator[](std::size_t j) {
        return Map(data_.data() + j * stride(), rows_, cols_);
    }
    ConstMap operator[](std::size_t j) const {
        return ConstMap(data_.data() + j * stride(), rows_, cols_);
    }

    std::vector<cplx>& raw() noexcept { return data_; }
    [[nodiscard]] const std::vector<cplx>& raw() const noexcept { return data_; }

    /// Entry (r, c) across all nodes.
    [[nodiscard]] Eigen::VectorXcd entry(int r, int c) const;
    void set_entry(int r, int c, const Eigen::VectorXcd& v);

    /// max over nodes of the Frobenius norm.
    [[nodiscard]] double max_norm() const;

private:
    [[nodiscard]] std::size_t stride() const noexcept {
        return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_);
    }
    int rows_ = 0;
    int cols_ = 0;
    std::size_t count_ = 0;
    std::vector<cplx> data_;
};

// =============================================================================
// PotentialField
// =============================================================================

/// Closed-form evaluator x -> Q(x) (p x q). Optional; used where exact
/// off-node values matter (Gauss points of the Jost integrator).
using Profile = std::function<RowMat(double)>;

struct PotentialField {
    Grid1D grid;
    int p = 1;
    int q = 1;
    int sigma = 1;
    MatrixSeries samples;
    Profile profile;

    PotentialField() = default;
    PotentialField(Grid1D grid, int p, int q, int sigma, MatrixSeries samples, Profile profile = {});

    /// Q(x): exact profile when available, else the band-limited interpolant of the samples
    /// (zero outside the window).
    [[nodiscard]] RowMat at(double x) const;
    /// Trapezoid integral of |U| = sqrt(tr U†U) = sqrt(2)|Q|_F over [a, b] clipped to the grid.
    [[nodiscard]] double u_l1(double a, double b) const;
    /// Potential with samples and profile reflected, Q_r(x) = Q(-x), on the mirrored grid.
    [[nodiscard]] PotentialField reflected() const;
    /// Q * indicator(x > x0) (right) or Q * indicator(x < x0) (left); a node at x0 holds Q(x0)/2.
    [[nodiscard]] PotentialField cut(double x0, bool keep_right) const;
};

// =============================================================================
// Norms
// =============================================================================

struct SobolevNorms {
    double l2 = 0.0;
    double l21 = 0.0;
    double h1 = 0.0;
    double h11 = 0.0;
};

// =============================================================================
// RunConfig
// =============================================================================

enum class Backend { Dense, Iterative };

struct RunConfig {
    int p = 1;
    int q = 1;
    int sigma = 1;
    Grid1D x_grid = Grid1D::window(-20.0, 20.0, 1024);
    Grid1D k_grid = Grid1D::window(-15.0, 15.0, 1024);
    double solver_tol = 1e-8;
    double symmetry_tol = 1e-8;
    Backend backend = Backend::Iterative;
    double cutoff_threshold = 0.1;
    double s_infinity_margin = 1.5;

    void validate() const;
};

// =============================================================================
// Operations
// =============================================================================

/// U = [[0, Q], [sigma Q†, 0]].
[[nodiscard]] BlockMatrix assemble_U(const RowMat& Q, int sigma);

/// e^{-i theta ad sigma3} M: m12 * e^{-2i theta}, m21 * e^{2i theta}.
[[nodiscard]] BlockMatrix ad_sigma3_exp(cplx theta, const BlockMatrix& M);

/// In-place variant on a raw (p+q)x(p+q) matrix.
void ad_sigma3_exp_inplace(cplx theta, int p, Eigen::Ref<RowMat> M);

/// l2, l21 by periodic trapezoid; h1 adds the spectral derivative energy; h11 = sqrt(h1^2 + l21^2).
[[nodiscard]] SobolevNorms discrete_norms(const MatrixSeries& f, const Grid1D& grid);

/// Frobenius norm sqrt(tr M†M).
[[nodiscard]] inline double frob(const RowMat& m) { return m.norm(); }

} // namespace mnls
