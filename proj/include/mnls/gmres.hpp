#pragma once

// Matrix-free restarted GMRES on top of Eigen's IterativeSolvers module.

#include <Eigen/Dense>

#include <functional>

#include "mnls/core.hpp"

namespace mnls {

/// y = A x for a square operator of the given size.
using ApplyFn = std::function<void(const Eigen::VectorXcd& x, Eigen::VectorXcd& y)>;

struct GmresResult {
    Eigen::VectorXcd x;
    /// Relative residual |b - A x| / |b| recomputed after the solve.
    double residual = 0.0;
    long iterations = 0;
    bool converged = false;
};

/// Solves A x = b from the initial guess x0 (empty for zero).
[[nodiscard]] GmresResult gmres_solve(const ApplyFn& apply, Eigen::Index size, const Eigen::VectorXcd& b,
                                      const Eigen::VectorXcd& x0, double tol, int restart = 100,
                                      int max_iterations = 2000);

/// Power iteration estimate of |A^-1|_2 using GMRES for the inner solves.
[[nodiscard]] double resolvent_norm_estimate(const ApplyFn& apply, const ApplyFn& apply_adjoint, Eigen::Index size,
                                             double tol, int power_steps = 30);

} // namespace mnls
