#pragma once

// =============================================================================
// Direct scattering: Jost functions, scattering matrix and reflection coefficient
// for psi_x = (-ik sigma3 + U) psi.
//
// Each x-cell [x_j, x_j+1] is advanced by one sixth-order Magnus exponential built
// from U at the three Gauss-Legendre points of the cell. The integral-form scattering
// matrix is accumulated by the trapezoid rule over the nodes during the sweep and
// cross-checked against the matching formula S = e^{i x_max k ad sigma3} m-(x_max).
// =============================================================================

#include <cstddef>
#include <vector>

#include "mnls/core.hpp"

namespace mnls {

struct JostOptions {
    /// 0 keeps m± only at the two window ends; s > 0 keeps every s-th node as well.
    std::size_t store_stride = 0;
    bool compute_plus = true;
};

/// Sampled Jost functions. Entry [i] of m_minus/m_plus holds the (p+q)x(p+q) matrices over
/// the k-grid at x-node stored[i].
struct JostPair {
    Grid1D x_grid;
    Grid1D k_grid;
    int p = 1;
    int q = 1;
    std::vector<std::size_t> stored;
    std::vector<MatrixSeries> m_minus;
    std::vector<MatrixSeries> m_plus;
    /// S(k) from I + int e^{iyk ad sigma3} U m- dy (trapezoid over the x-nodes).
    MatrixSeries s_integral;
    /// S(k) from e^{i x_max k ad sigma3} m-(x_max).
    MatrixSeries s_matching;

    /// Position of x-node j in `stored`, or throws if that node was not kept.
    [[nodiscard]] std::size_t slot(std::size_t j) const;
};

struct ScatteringData {
    Grid1D k_grid;
    int p = 1;
    int q = 1;
    int sigma = 1;
    MatrixSeries A;
    MatrixSeries B;
    MatrixSeries C;
    MatrixSeries D;
    /// max_k |S_integral - S_matching| recorded by scattering_matrix.
    double consistency_gap = 0.0;

    ScatteringData() = default;
    ScatteringData(Grid1D k_grid, int p, int q, int sigma);

    [[nodiscard]] BlockMatrix S(std::size_t j) const;
    void set_S(std::size_t j, const RowMat& s);
};

struct Reflection {
    MatrixSeries R;
    /// max_k |C A^-1 - sigma R†| over nodes where A is invertible.
    double adjoint_residual = 0.0;
};

struct SymmetryReport {
    double det_residual = 0.0;
    double symmetry_residual = 0.0;
    /// sigma = +1 only: max_k | |det A|^2 - det(I + B B†) |.
    double modulus_residual = 0.0;
    /// sigma = +1 only: max_k | |det D|^2 - det(I + C C†) |.
    double d_modulus_residual = 0.0;
    double min_abs_det_D = 0.0;
};

/// Precomputed per-cell Magnus data of a potential; k-independent.
class JostIntegrator {
public:
    explicit JostIntegrator(const PotentialField& potential);

    [[nodiscard]] const PotentialField& potential() const noexcept { return potential_; }
    [[nodiscard]] std::size_t cells() const noexcept { return cells_; }
    [[nodiscard]] int n() const noexcept { return n_; }

    /// psi-propagator over cell j at wavenumber k: psi(x_{j+1}) = E psi(x_j); `inverse` gives E^-1
    /// built from exp(-Omega) factors.
    [[nodiscard]] RowMat cell_propagator(std::size_t j, cplx k, bool inverse = false) const;
    /// Magnus exponent of cell j at wavenumber k.
    [[nodiscard]] RowMat omega(std::size_t j, cplx k) const;
    /// U at the three Gauss points of every cell, then U at every node; flattened row-major.
    [[nodiscard]] const std::vector<cplx>& gauss_u_flat() const noexcept { return gauss_u_; }
    [[nodiscard]] const std::vector<cplx>& node_u_flat() const noexcept { return node_u_; }

    void check_resolution(cplx k) const;

private:
    PotentialField potential_;
    std::size_t cells_ = 0;
    int n_ = 2;
    std::vector<cplx> gauss_u_;
    std::vector<cplx> node_u_;
};

[[nodiscard]] JostPair solve_jost(const PotentialField& potential, const Grid1D& k_grid,
                                  const JostOptions& options = {});

/// Blocks from the matching formula; throws ConsistencyError when the two formulas
/// disagree by more than 10 * solver_tol.
[[nodiscard]] ScatteringData scattering_matrix(const JostPair& jost, const PotentialField& potential,
                                               double solver_tol = 1e-8);

/// Convenience: solve_jost (ends only, no m+) followed by scattering_matrix.
[[nodiscard]] ScatteringData forward_scattering(const PotentialField& potential, const Grid1D& k_grid,
                                                double solver_tol = 1e-8);

/// R = B D^-1. Throws SpectralSingularity if min |det D| <= 1e-10 on the grid.
[[nodiscard]] Reflection reflection_coefficient(const ScatteringData& sd);

[[nodiscard]] SymmetryReport symmetry_report(const ScatteringData& sd);

// =============================================================================
// Complex wavenumbers
// =============================================================================

/// Columns analytic in the closed upper half-plane at a single k with Im k >= 0.
struct UpperColumns {
    RowMat m1_minus; ///< (p+q) x p, first block column of m- at the requested node
    RowMat m2_plus;  ///< (p+q) x q, second block column of m+ at the requested node
    RowMat A;        ///< p x p, m11-(x_max)
};

[[nodiscard]] UpperColumns upper_columns(const JostIntegrator& integ, cplx k, std::size_t x_node);

/// D(k) = m22-(x_max) for Im k <= 0.
[[nodiscard]] RowMat lower_D(const JostIntegrator& integ, cplx k);

/// Full m+ at x-node j for real k, from the cell propagators.
[[nodiscard]] RowMat plus_at(const JostIntegrator& integ, double k, std::size_t x_node);

// =============================================================================
// Lipschitz probe
// =============================================================================

struct LipschitzResult {
    double max_ratio = 0.0;
    std::size_t argmax = 0;
    std::vector<double> ratios;
};

/// ||R1 - R2||_{H11} / ||Q1 - Q2||_{H11} for each pair; identical pairs report 0.
[[nodiscard]] LipschitzResult lipschitz_probe(
    const std::vector<std::pair<PotentialField, PotentialField>>& pairs, const Grid1D& k_grid,
    double solver_tol = 1e-8);

} // namespace mnls
