#pragma once

// =============================================================================
// Focusing inverse problem: cut-off potential, the disc |k| < S_inf enclosing
// every zero of det D, the contour Gamma = R u {|k| = S_inf} (and its
// reoriented form Gamma_hat), eta regularization at +-S_inf, and the
// Beals-Coifman solve on the piecewise contour.
// =============================================================================

#include <array>
#include <string>
#include <vector>

#include "mnls/core.hpp"
#include "mnls/defocusing.hpp"
#include "mnls/scattering.hpp"

namespace mnls {

// =============================================================================
// Cut-off and disc radius
// =============================================================================

struct CutoffSelection {
    /// Smallest node with int_{x0}^{inf} |U| < threshold.
    double x0 = 0.0;
    std::size_t node = 0;
    /// Largest node with int_{-inf}^{x} |U| < threshold (left cut-off).
    double x0_left = 0.0;
    std::size_t node_left = 0;
};

[[nodiscard]] CutoffSelection select_cutoff(const PotentialField& potential, double threshold = 0.1);

struct SInfinityOptions {
    double margin = 1.5;
    double min_radius = 1.0;
    double det_threshold = 0.1;
    /// Lower half-plane probe arcs: radii spread over (0, k_max], angles over (-pi, 0).
    int radii = 24;
    int angles = 8;
};

struct SInfinitySelection {
    /// Radius snapped to a k-grid node with -S_inf also a node.
    double s_infinity = 0.0;
    std::size_t node = 0;
    /// Largest probed modulus with |det D| < det_threshold (0 if none).
    double largest_small_modulus = 0.0;
    /// min |det D| over probes with |k| >= s_infinity.
    double min_abs_det_outside = 0.0;
};

/// Scans |det D| on the real grid (from sd_full) and on arcs in the lower half-plane.
[[nodiscard]] SInfinitySelection select_s_infinity(const JostIntegrator& full, const ScatteringData& sd_full,
                                                   const SInfinityOptions& options = {});

// =============================================================================
// Contour
// =============================================================================

enum class SegmentKind { Line, CircleArc, EllipseArc };

struct ContourSegment {
    SegmentKind kind = SegmentKind::Line;
    std::string name;
    /// Endpoints in orientation order.
    cplx start{0.0, 0.0};
    cplx end{0.0, 0.0};
    /// Semi-axes for arcs (equal for circle arcs).
    double radius_x = 0.0;
    double radius_y = 0.0;
    /// +1: left to right (lines) or counter-clockwise (arcs); -1 reversed.
    int orientation = 1;
    /// Nodes in increasing parameter order (k for lines, angle for arcs).
    std::vector<cplx> nodes;
    /// Oriented quadrature weights for int f dk.
    std::vector<cplx> weights;
    /// False on the added ellipse arcs, where both factors are the identity.
    bool carries_jump = true;
};

enum class Region { Omega1, Omega2, Omega3, Omega4, OnContour };

struct Contour {
    double s_infinity = 0.0;
    bool hat = false;
    double ellipse_ratio = 0.0;
    std::vector<ContourSegment> segments;
    /// Self-intersection points with the names of the incident segments.
    std::vector<cplx> intersections;
    std::vector<std::vector<std::string>> incidence;

    [[nodiscard]] Region region(cplx z) const;
    [[nodiscard]] const ContourSegment& segment(const std::string& name) const;
    [[nodiscard]] std::size_t node_count() const;
};

/// Gamma: line segments split at +-S_inf (inner segment right-to-left) and the circle
/// |k| = S_inf with `circle_nodes` equispaced angles 2 pi (j + offset) / circle_nodes.
[[nodiscard]] Contour build_gamma(double s_infinity, const Grid1D& k_grid, std::size_t circle_nodes = 256,
                                  double angle_offset = 0.5);

/// Gamma_hat: Gamma with the inner segment reversed plus two ellipse arcs (semi-axes S_inf and
/// ellipse_ratio S_inf) carrying identity jumps.
[[nodiscard]] Contour build_gamma_hat(double s_infinity, const Grid1D& k_grid, std::size_t circle_nodes = 256,
                                      double ellipse_ratio = 0.5, double angle_offset = 0.5);

// =============================================================================
// Jumps
// =============================================================================

/// Strictly triangular rational factor I + (c0 + c1 k)(k - k0)^-n in one off-diagonal block.
struct EtaFactor {
    cplx k0{0.0, 0.0};
    int n = 3;
    /// Lower-left q x p block when true, upper-right p x q block otherwise.
    bool lower = true;
    RowMat c0;
    RowMat c1;

    [[nodiscard]] RowMat block(cplx k) const;
    [[nodiscard]] RowMat matrix(cplx k, int p, int q) const;
};

/// Fits f = c0 + c1 k to (k - k0)^n values at +-S_inf so that block(+-S_inf) = values.
[[nodiscard]] EtaFactor construct_eta(const RowMat& value_plus, const RowMat& value_minus, double s_infinity,
                                      cplx k0, int n, bool lower);

struct EtaOptions {
    /// k0 = -i scale S_inf for factors used in the upper half-plane, +i scale S_inf below.
    double pole_scale = 2.0;
    int order = 3;
};

struct FocusingJump {
    int p = 1;
    int q = 1;
    double x0 = 0.0;
    std::size_t x0_node = 0;
    double s_infinity = 0.0;
    std::size_t s_node = 0;
    std::size_t minus_s_node = 0;
    Grid1D k_grid;
    Contour contour;

    /// Full-potential reflection B D^-1 on |k| >= S_inf (zero inside).
    MatrixSeries R;
    /// Cut-off reflection on the whole grid.
    MatrixSeries R0;
    /// Circle nodes in angle order, orientation sign (-1 upper arc, +1 lower arc) and the
    /// off-diagonal circle data: X (q x p, lower-left of V2) on the upper arc, Y (p x q,
    /// upper-right of V4) on the lower arc; the unused block is zero.
    std::vector<cplx> circle;
    std::vector<int> circle_sign;
    MatrixSeries X;
    MatrixSeries Y;
    double circle_angle_offset = 0.5;
    /// Number of quarter-spacing rotations applied to dodge near-singular A on the circle.
    int node_rotations = 0;

    /// eta_1 .. eta_4: Omega1 (lower, -R†), Omega2 (upper, R), Omega3 (lower, -R0†), Omega4 (upper, R0).
    std::array<EtaFactor, 4> eta;

    /// Jumps on Gamma (inner segment right-to-left): V = V-^-1 V+ per node.
    MatrixSeries line_V, line_V_plus, line_V_minus;
    MatrixSeries circle_V, circle_V_plus, circle_V_minus;
    /// eta-conjugated factors on Gamma_hat (line left-to-right throughout), before x-dressing.
    MatrixSeries line_Vh_plus, line_Vh_minus;
    MatrixSeries circle_Vh_plus, circle_Vh_minus;

    [[nodiscard]] bool inner(std::size_t j) const;
    /// V = V-^-1 V+ residual over all nodes of Gamma.
    [[nodiscard]] double factorization_residual() const;
    /// min eigenvalue of V + V† over the real line.
    [[nodiscard]] double min_eig_line() const;
    /// Evolved jump: off-diagonal data times e^{-+4itk^2}; eta refitted at the new anchors.
    [[nodiscard]] FocusingJump evolved(double t, const EtaOptions& options = {}) const;
};

/// Assembles all four jumps from the full potential, its scattering data and the cut-off data.
[[nodiscard]] FocusingJump build_focusing_jump(const PotentialField& potential, const ScatteringData& sd_full,
                                               const ScatteringData& sd_cutoff, std::size_t x0_node,
                                               const Contour& gamma_hat, const EtaOptions& options = {});

/// Rebuilds eta and the conjugated factors from R, R0, X, Y (after editing the raw data).
void refresh_conjugated(FocusingJump& fj, const EtaOptions& options = {});

struct MatchingReport {
    /// |V1 V2^-1 V3 V4^-1 - I| at +S_inf and |V3^-1 V2 V1^-1 V4 - I| at -S_inf, with every
    /// factor evaluated at the intersection point itself.
    double at_plus = 0.0;
    double at_minus = 0.0;
    /// Same products from the m-th nearest nodes, m = 1..approach.size().
    std::vector<double> approach_plus;
    std::vector<double> approach_minus;
    /// Empirical order from a log-log fit of the approach residuals against node distance.
    double order_plus = 0.0;
    double order_minus = 0.0;
};

[[nodiscard]] MatchingReport verify_matching(const FocusingJump& fj, const PotentialField& potential,
                                             std::size_t approach = 6);

struct EtaReport {
    /// max |eta(+-S_inf) - V(+-S_inf)| over the four factors.
    double anchor_residual = 0.0;
    /// max norm of the block that must vanish.
    double triangularity = 0.0;
    /// |k|^2 |eta - I| at |k| = 5 S_inf and 10 S_inf (max over factors and probe angles).
    double decay_5 = 0.0;
    double decay_10 = 0.0;
};

[[nodiscard]] EtaReport eta_report(const FocusingJump& fj);

// =============================================================================
// Solve
// =============================================================================

/// Discretized Cauchy operators of Gamma_hat: line (sinc), circle (trigonometric) and couplings.
class FocusingOperators {
public:
    explicit FocusingOperators(const FocusingJump& fj);

    [[nodiscard]] std::size_t line_size() const noexcept { return nk_; }
    [[nodiscard]] std::size_t circle_size() const noexcept { return nc_; }

    /// Minus-side boundary values on Gamma_hat of the Cauchy integral of densities given per
    /// column: fl (nk x m) on the line, fc (nc x m) on the circle in its own orientation.
    void cauchy_minus(const Eigen::MatrixXcd& fl, const Eigen::MatrixXcd& fc, Eigen::MatrixXcd& line_out,
                      Eigen::MatrixXcd& circle_out) const;

    /// Cauchy integral of the same densities at an off-contour point.
    [[nodiscard]] Eigen::RowVectorXcd evaluate(const Eigen::MatrixXcd& fl, const Eigen::MatrixXcd& fc,
                                               cplx z) const;

    [[nodiscard]] const FocusingJump& jump() const noexcept { return fj_; }

private:
    const FocusingJump& fj_;
    std::size_t nk_;
    std::size_t nc_;
    LineCauchy line_;
    Eigen::MatrixXcd line_to_circle_;
    Eigen::MatrixXcd circle_to_line_;
    Eigen::MatrixXcd circle_self_;
    Eigen::VectorXd sign_;
};

struct FocusingOptions {
    double tol = 1e-10;
    int restart = 200;
    int max_iterations = 3000;
};

struct FocusingSolution {
    double x = 0.0;
    /// mu on the line (nk) and the circle (nc); only the first p rows are solved.
    MatrixSeries mu_line;
    MatrixSeries mu_circle;
    double residual = 0.0;
    long iterations = 0;
};

[[nodiscard]] FocusingSolution focusing_solve(const FocusingOperators& ops, double x,
                                              const FocusingOptions& options = {},
                                              const FocusingSolution* warm = nullptr);

/// Q(x) = (-1/pi int_{Gamma_hat} mu (V_x+ - V_x-) dk)_12.
/// Contribution of the upper-right eta block beyond the k window: its full-line
/// Fourier integral vanishes for x >= 0, so the tail equals minus the window part.
[[nodiscard]] RowMat window_tail(const FocusingJump& fj, double x);
[[nodiscard]] RowMat focusing_potential(const FocusingOperators& ops, const FocusingSolution& sol);

/// Reconstruction at x >= 0 from a prepared jump.
[[nodiscard]] std::vector<RowMat> focusing_reconstruct_right(const FocusingJump& fj, const std::vector<double>& xs,
                                                             const FocusingOptions& options = {});

/// Scattering data of the cut-off potential Q 1(x > x0): S0 = e^{i x0 k ad sigma3} (m+(x0))^-1.
[[nodiscard]] ScatteringData cutoff_scattering(const JostIntegrator& integ, const Grid1D& k_grid, std::size_t x0_node);

struct FocusingSetupOptions {
    double solver_tol = 1e-8;
    double cutoff_threshold = 0.1;
    SInfinityOptions s_infinity;
    std::size_t circle_nodes = 256;
    double ellipse_ratio = 0.5;
    EtaOptions eta;
};

struct FocusingSetup {
    CutoffSelection cutoff;
    SInfinitySelection disc;
    ScatteringData sd_full;
    ScatteringData sd_cutoff;
    FocusingJump jump;
};

/// Forward map plus contour construction for one side of the line.
[[nodiscard]] FocusingSetup prepare_focusing(const PotentialField& potential, const Grid1D& k_grid,
                                             const FocusingSetupOptions& options = {});

/// x >= 0 from `right`; x < 0 from `left` (built from the reflected potential) evaluated at -x.
[[nodiscard]] PotentialField focusing_reconstruct(const FocusingJump& right, const FocusingJump* left,
                                                  const Grid1D& x_grid, const FocusingOptions& options = {});

/// Full-line reconstruction: x >= 0 directly, x < 0 via the mirrored construction on the
/// reflected potential. sigma of the result is -1.
[[nodiscard]] PotentialField focusing_solve_and_reconstruct(const PotentialField& potential, const Grid1D& k_grid,
                                                            const Grid1D& x_grid,
                                                            const FocusingSetupOptions& setup = {},
                                                            const FocusingOptions& options = {});

// =============================================================================
// Decay probe
// =============================================================================

struct DecayRow {
    double x = 0.0;
    /// |C+(V_x- - I)|_{L2(Gamma+)}, |C-(V_x+ - I)|_{L2(Gamma-)}, |V_x- - I|_{L2(Gamma4)},
    /// |V_x+ - I|_{L2(Gamma2)}, |(C_Vx)^2 I|_{L2(Gamma_hat)}.
    std::array<double, 5> lhs{};
    /// lhs sqrt(1 + x^2) divided by the H1 factor(s) of the matching bound.
    std::array<double, 5> constant{};
};

struct DecayTable {
    double h1_minus = 0.0;
    double h1_plus = 0.0;
    std::vector<DecayRow> rows;
    /// max over rows of each constant.
    std::array<double, 5> fitted{};
};

[[nodiscard]] DecayTable decay_estimate_probe(const FocusingJump& fj, const std::vector<double>& xs);

} // namespace mnls
