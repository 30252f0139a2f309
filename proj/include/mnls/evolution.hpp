#pragma once

// Time evolution of scattering and jump data: e^{-2itk^2 ad sigma3} per k-node.

#include <vector>

#include "mnls/core.hpp"
#include "mnls/defocusing.hpp"
#include "mnls/scattering.hpp"

namespace mnls {

/// Applies e^{-2itk^2 ad sigma3} to every matrix of a series sampled on k_grid (n x n, split at p).
[[nodiscard]] MatrixSeries evolve_series(const MatrixSeries& m, const Grid1D& k_grid, int p, double t);

/// Off-diagonal p x q block data times e^{-4itk^2} (R, B); q x p data times e^{4itk^2} (C).
[[nodiscard]] MatrixSeries evolve_upper(const MatrixSeries& b, const Grid1D& k_grid, double t);
[[nodiscard]] MatrixSeries evolve_lower(const MatrixSeries& c, const Grid1D& k_grid, double t);

[[nodiscard]] ScatteringData evolve_scattering(const ScatteringData& sd, double t);

/// Evolves v, v± and R.
[[nodiscard]] JumpFactorization evolve_jump(const JumpFactorization& jump, double t);

/// Lazily evolved jump: keeps the t = 0 data and the accumulated time; phases are applied once
/// on materialization so repeated small steps do not accumulate roundoff.
class EvolvedJump {
public:
    explicit EvolvedJump(JumpFactorization base, double t = 0.0) : base_(std::move(base)), t_(t) {}

    [[nodiscard]] double t() const noexcept { return t_; }
    [[nodiscard]] const JumpFactorization& base() const noexcept { return base_; }
    [[nodiscard]] EvolvedJump advanced(double dt) const { return EvolvedJump(base_, t_ + dt); }
    [[nodiscard]] JumpFactorization materialize() const { return evolve_jump(base_, t_); }

private:
    JumpFactorization base_;
    double t_;
};

struct TimeContinuity {
    /// Discrete H11 norm of v±(t1) - v±(t2) restricted to |k| <= gamma and |k| > gamma.
    double bulk = 0.0;
    double tail = 0.0;
    /// Bulk residual divided by (gamma^2 + gamma^2 T + 1)|t1 - t2| with T = max(|t1|, |t2|).
    double bulk_constant = 0.0;
    /// L21 norm of the diagonal-block difference (zero: diagonal blocks are static).
    double diagonal_l21 = 0.0;
};

[[nodiscard]] TimeContinuity time_continuity_probe(const JumpFactorization& jump, double t1, double t2,
                                                   double gamma_cut);

} // namespace mnls
