#pragma once

// =============================================================================
// Defocusing inverse problem on the real line: jump factorization v = v-^-1 v+,
// the Beals-Coifman equation (I - C_w) nu = I and potential reconstruction.
// =============================================================================

#include <vector>

#include "mnls/cauchy.hpp"
#include "mnls/core.hpp"
#include "mnls/scattering.hpp"

namespace mnls {

/// L(a) = [[I, 0], [a, I]] and Up(a) = [[I, a], [0, I]] with a of size q x p resp. p x q.
[[nodiscard]] RowMat lower_unit(const RowMat& a);
[[nodiscard]] RowMat upper_unit(const RowMat& a);

struct JumpFactorization {
    Grid1D k_grid;
    int p = 1;
    int q = 1;
    /// Sign entering v+ = L(sigma R†); +1 is the defocusing jump.
    int sigma = 1;
    MatrixSeries R;
    MatrixSeries v;
    MatrixSeries v_plus;
    MatrixSeries v_minus;

    [[nodiscard]] RowMat w_plus(std::size_t j) const;
    [[nodiscard]] RowMat w_minus(std::size_t j) const;
    /// v = v-^-1 v+ residual, max over nodes.
    [[nodiscard]] double factorization_residual() const;
    /// min over nodes of the smallest eigenvalue of v + v†.
    [[nodiscard]] double min_eig_v_plus_vdag() const;
};

/// Jump from reflection data: v+ = L(sigma R†), v- = Up(R), v = v-^-1 v+. No positivity check.
[[nodiscard]] JumpFactorization jump_from_reflection(const Grid1D& k_grid, const MatrixSeries& R, int sigma = 1);

/// Defocusing jump from scattering data; throws DataError if v + v† is not positive definite.
[[nodiscard]] JumpFactorization build_jump(const ScatteringData& sd);

struct BealsCoifmanOptions {
    Backend backend = Backend::Iterative;
    double tol = 1e-8;
    int restart = 100;
    int max_iterations = 2000;
};

struct BealsCoifmanSolution {
    double x = 0.0;
    /// nu over the k-grid; rows not solved for stay as identity rows.
    MatrixSeries nu;
    double residual = 0.0;
    long iterations = 0;
};

/// Discrete Beals-Coifman operator at fixed x on the line, acting row-wise on nu.
class BealsCoifmanOperator {
public:
    BealsCoifmanOperator(const JumpFactorization& jump, double x);

    [[nodiscard]] Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(n_ * nk_); }

    /// y = (I - C_w) nu_row, with nu_row stored as n_ blocks of nk_ samples (component-major).
    void apply(const Eigen::VectorXcd& nu_row, Eigen::VectorXcd& y) const;
    /// y = (C_w nu_row) without the identity.
    void apply_cw(const Eigen::VectorXcd& nu_row, Eigen::VectorXcd& y) const;
    /// Adjoint of apply for the l2 inner product on samples.
    void apply_adjoint(const Eigen::VectorXcd& y, Eigen::VectorXcd& out) const;
    /// Dense matrix of apply, size (n nk)^2.
    [[nodiscard]] Eigen::MatrixXcd dense() const;

    [[nodiscard]] const MatrixSeries& w_total() const noexcept { return wsum_; }
    [[nodiscard]] const MatrixSeries& w_minus() const noexcept { return wminus_; }

private:
    int n_;
    std::size_t nk_;
    LineCauchy cauchy_;
    MatrixSeries wsum_;
    MatrixSeries wminus_;
};

/// Solves (I - C_w) nu = I for the requested rows (default: all) at position x.
[[nodiscard]] BealsCoifmanSolution beals_coifman_solve(const JumpFactorization& jump, double x,
                                                       const BealsCoifmanOptions& options = {},
                                                       std::vector<int> rows = {},
                                                       const BealsCoifmanSolution* warm = nullptr);

/// Q(x) = (-1/pi int nu (w+ + w-) dk)_12 from a solution whose first p rows are solved.
[[nodiscard]] RowMat potential_from_nu(const JumpFactorization& jump, const BealsCoifmanSolution& sol);

/// Reconstructs Q on x_grid; the potential sign is taken from jump.sigma.
[[nodiscard]] PotentialField reconstruct_potential(const JumpFactorization& jump, const Grid1D& x_grid,
                                                   const BealsCoifmanOptions& options = {});

/// M(x, z) = I + C(nu (w+ + w-))(z) at an off-axis point.
[[nodiscard]] RowMat rh_solution_at(const JumpFactorization& jump, const BealsCoifmanSolution& sol, cplx z);

struct LaxResidual {
    double x_residual = 0.0;
    double t_residual = 0.0;
    /// |P2 + 2 M1_x| with P2 = i sigma3 U_x - i sigma3 U^2 and M1 the 1/k moment of M.
    double p2_moment_residual = 0.0;
};

/// Finite-difference Lax-pair residuals of M at z, with step h in x and t.
[[nodiscard]] LaxResidual verify_lax(const JumpFactorization& jump, double x, double t, double h, cplx z,
                                     const BealsCoifmanOptions& options = {});

struct LeftNormalizedReport {
    /// max over probe points of |M_tilde(Jost) - M(RH) delta|.
    double offaxis_residual = 0.0;
    /// max over k of |det v_tilde - 1|.
    double vtilde_det_residual = 0.0;
    /// max over k of the off-diagonal blocks of delta± (zero by construction).
    double delta_offdiag = 0.0;
};

/// Left-normalized consistency check at position x (must be a node of potential.grid).
[[nodiscard]] LeftNormalizedReport left_normalized_diagnostic(const PotentialField& potential,
                                                              const ScatteringData& sd,
                                                              const JumpFactorization& jump, std::size_t x_node,
                                                              const std::vector<cplx>& probes,
                                                              const BealsCoifmanOptions& options = {});

/// |C+(R e^{-2ixk})|_2 and the bound |R|_{H1} / sqrt(1 + x^2) for a scalar-entry p x q R.
struct DecayCheck {
    double lhs = 0.0;
    double bound = 0.0;
};
[[nodiscard]] DecayCheck cauchy_decay_check(const MatrixSeries& R, const Grid1D& k_grid, double x);

} // namespace mnls
