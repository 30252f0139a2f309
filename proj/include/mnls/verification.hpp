#pragma once

// =============================================================================
// Cross-module pipelines: round trips, IST versus split-step evolution and
// Lipschitz-ratio probes of the solution map.
// =============================================================================

#include <string>
#include <vector>

#include "mnls/core.hpp"
#include "mnls/io.hpp"

namespace mnls {

/// One measured quantity and the limit it was judged against (measured < limit passes).
struct Check {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    [[nodiscard]] bool pass() const { return value < limit; }
};

struct ComparisonReport {
    std::string scenario;
    double norm_before = 0.0;
    double norm_after = 0.0;
    std::vector<Check> checks;
    /// Unjudged diagnostics.
    std::vector<std::pair<std::string, double>> residuals;
    std::vector<std::pair<std::string, double>> timings;
    /// Reference and computed fields on the comparison grid.
    PotentialField reference;
    PotentialField computed;

    [[nodiscard]] bool pass() const;
    [[nodiscard]] const Check& check(const std::string& name) const;
    [[nodiscard]] Report report() const;
};

/// Relative L2, H1 and L21 errors of `computed` against `reference` (same grid).
struct FieldErrors {
    double rel_l2 = 0.0;
    double rel_h1 = 0.0;
    double rel_l21 = 0.0;
};
[[nodiscard]] FieldErrors field_errors(const PotentialField& computed, const PotentialField& reference);

struct PipelineOptions {
    /// Reconstruct on every s-th x-node (s a power of two keeps the H1 norm spectral).
    std::size_t x_stride = 1;
    /// Tolerance of the Beals-Coifman solves.
    double rh_tol = 1e-10;
    std::size_t circle_nodes = 256;
};

/// Forward map, jump, inverse map, comparison on the (strided) x-grid. Checks rel_l2 < tol.
[[nodiscard]] ComparisonReport roundtrip(const PotentialSpec& spec, const RunConfig& config, double tol,
                                         const PipelineOptions& options = {});

/// Path A: forward at t = 0, jump evolved to T, inverse. Path B: split-step with step dt.
/// Checks rel_l2(A, B) < tol and exact time reversal of the jump.
[[nodiscard]] ComparisonReport evolution_crosscheck(const PotentialSpec& spec, const RunConfig& config, double T,
                                                    double dt, double tol, const PipelineOptions& options = {});

struct ContinuityOptions {
    std::vector<double> epsilons{1e-1, 1e-2, 1e-3};
    /// Flow times for the Gronwall fit; the first must be 0.
    std::vector<double> times{0.0, 0.25, 0.5, 1.0};
    double dt = 1e-3;
    /// Largest admissible relative change of a ratio between the two smallest epsilons.
    double stability_tol = 0.1;
    PipelineOptions pipeline;
};

/// Lipschitz ratios ||F(Q1) - F(Q2)|| / ||Q1 - Q2|| in H11 for Q2 = Q1 + eps phi, phi a fixed
/// smooth bump, with F the direct map, the inverse map (defocusing only) and the split-step
/// flow to each time. Reports a fit ratio(T) = ratio(0) e^{C T}.
[[nodiscard]] ComparisonReport continuity_probe(const PotentialSpec& base, const RunConfig& config,
                                                const ContinuityOptions& options = {});

/// Perturbation direction phi(x) = x e^{-x^2/2} times a fixed complex p x q matrix.
[[nodiscard]] PotentialField perturbation(const PotentialField& base);

/// Field with every s-th node of the input grid.
[[nodiscard]] Grid1D strided(const Grid1D& grid, std::size_t stride);

} // namespace mnls
