#pragma once

// =============================================================================
// Split-step Fourier integrator for iQ_t + Q_xx - 2 sigma Q Q† Q = 0 on a periodic
// power-of-two grid. Serves as the independent evolution oracle.
// =============================================================================

#include <vector>

#include "mnls/core.hpp"

namespace mnls {

/// Relative L2 drift above this raises the stability flag.
inline constexpr double kStabilityDrift = 1e-5;

struct SplitStepState {
    PotentialField field;
    double t = 0.0;
    double dt = 1e-3;
    /// Splitting order; only Strang (2) is provided.
    int order = 2;
};

struct ConservationLog {
    std::size_t steps = 0;
    double l2_initial = 0.0;
    double l2_final = 0.0;
    /// max over steps of |‖Q(t)‖ - ‖Q(0)‖| / ‖Q(0)‖
    double max_drift = 0.0;
    bool stability_warning = false;
};

/// Exact flow of i Q_t = 2 sigma Q Q† Q over dt: Q -> exp(-2 i sigma dt Q Q†) Q.
[[nodiscard]] RowMat nonlinear_step(const RowMat& Q, double dt, int sigma);

/// Fourier multiplier e^{-i xi^2 dt} applied entrywise.
[[nodiscard]] PotentialField linear_step(const PotentialField& field, double dt);

/// Strang composition L(dt/2) N(dt) L(dt/2) iterated round(T/dt) times; T may be negative.
/// The result carries no closed-form profile.
[[nodiscard]] PotentialField propagate(const PotentialField& field, double T, double dt,
                                       ConservationLog* log = nullptr);

/// Advances the state in place to state.t + T.
void advance(SplitStepState& state, double T, ConservationLog* log = nullptr);

/// Fields at each requested time (ascending, measured from t = 0).
[[nodiscard]] std::vector<PotentialField> propagate_snapshots(const PotentialField& field,
                                                             const std::vector<double>& times, double dt,
                                                             ConservationLog* log = nullptr);

/// Discrete L2 norm sqrt(h sum |Q_j|_F^2).
[[nodiscard]] double l2_norm(const PotentialField& field);

} // namespace mnls
