#include "mnls/focusing.hpp"

#include <Eigen/Eigenvalues>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mnls/fft.hpp"
#include "mnls/gmres.hpp"
#include "mnls/parallel.hpp"

namespace mnls {

namespace {

bool is_node(const Grid1D& g, double v, std::size_t& idx) {
    idx = g.nearest(v);
    return std::abs(g.node(idx) - v) <= 1e-9 * g.step;
}

RowMat identity(int n) { return RowMat::Identity(n, n); }

} // namespace

// =============================================================================
// Cut-off and disc radius
// =============================================================================

CutoffSelection select_cutoff(const PotentialField& potential, double threshold) {
    if (!(threshold > 0.0)) throw InputError("select_cutoff: threshold must be positive");
    const auto& g = potential.grid;
    const std::size_t n = g.count;
    std::vector<double> u(n);
    for (std::size_t j = 0; j < n; ++j) u[j] = std::sqrt(2.0) * RowMat(potential.samples[j]).norm();
    std::vector<double> tail(n, 0.0);
    std::vector<double> head(n, 0.0);
    for (std::size_t j = n - 1; j-- > 0;) tail[j] = tail[j + 1] + 0.5 * g.step * (u[j] + u[j + 1]);
    for (std::size_t j = 1; j < n; ++j) head[j] = head[j - 1] + 0.5 * g.step * (u[j] + u[j - 1]);

    CutoffSelection out;
    std::size_t right = n - 1;
    for (std::size_t j = 0; j < n; ++j) {
        if (tail[j] < threshold) {
            right = j;
            break;
        }
    }
    std::size_t left = 0;
    for (std::size_t j = n; j-- > 0;) {
        if (head[j] < threshold) {
            left = j;
            break;
        }
    }
    if (n > 1 && (right == n - 1 || left == 0)) {
        std::ostringstream os;
        os << "select_cutoff: tail mass below " << threshold << " is not reached inside the x-window";
        throw WindowError(os.str());
    }
    out.node = right;
    out.x0 = g.node(right);
    out.node_left = left;
    out.x0_left = g.node(left);
    return out;
}

SInfinitySelection select_s_infinity(const JostIntegrator& full, const ScatteringData& sd_full,
                                     const SInfinityOptions& options) {
    const auto& kg = sd_full.k_grid;
    const double kmax = std::min(std::abs(kg.start), std::abs(kg.back()));
    const double kres = kPi / (4.0 * full.potential().grid.step);
    const double rmax = std::min(kmax, 0.999 * kres);

    struct Probe {
        double modulus;
        double det;
    };
    std::vector<Probe> probes;
    for (std::size_t j = 0; j < kg.count; ++j)
        probes.push_back({std::abs(kg.node(j)), std::abs(RowMat(sd_full.D[j]).determinant())});

    const int nr = std::max(1, options.radii);
    const int na = std::max(1, options.angles);
    std::vector<Probe> arc(static_cast<std::size_t>(nr * na));
    parallel_for(arc.size(), [&](std::size_t i) {
        const int ir = static_cast<int>(i) / na;
        const int ia = static_cast<int>(i) % na;
        const double r = rmax * (ir + 1) / nr;
        const double phi = -kPi * (ia + 0.5) / na;
        const cplx z = std::polar(r, phi);
        arc[i] = {r, std::abs(lower_D(full, z).determinant())};
    });
    probes.insert(probes.end(), arc.begin(), arc.end());

    SInfinitySelection out;
    for (const auto& pr : probes)
        if (pr.det < options.det_threshold) out.largest_small_modulus = std::max(out.largest_small_modulus, pr.modulus);

    const double want = std::max(options.min_radius, options.margin * out.largest_small_modulus);
    // Snap upward to a node whose mirror is also a node, leaving room for an outer line segment.
    const double limit = kmax - 4.0 * kg.step;
    bool found = false;
    for (std::size_t j = 0; j < kg.count; ++j) {
        const double k = kg.node(j);
        if (k + 1e-12 < want) continue;
        std::size_t mirror = 0;
        if (k > limit) break;
        if (is_node(kg, -k, mirror)) {
            out.s_infinity = k;
            out.node = j;
            found = true;
            break;
        }
    }
    if (!found) {
        std::ostringstream os;
        os << "select_s_infinity: required radius " << want << " does not fit in the k-window (|k| <= " << kmax
           << "); enlarge the k-range";
        throw WindowError(os.str());
    }
    out.min_abs_det_outside = INFINITY;
    for (const auto& pr : probes)
        if (pr.modulus >= out.s_infinity) out.min_abs_det_outside = std::min(out.min_abs_det_outside, pr.det);
    if (!(out.min_abs_det_outside > options.det_threshold)) {
        std::ostringstream os;
        os << "select_s_infinity: |det D| = " << out.min_abs_det_outside << " outside radius " << out.s_infinity
           << "; enlarge the k-range or the margin";
        throw WindowError(os.str());
    }
    return out;
}

// =============================================================================
// Contour
// =============================================================================

Region Contour::region(cplx z) const {
    const double r = std::abs(z);
    const double tol = 1e-12 * std::max(1.0, s_infinity);
    if (std::abs(z.imag()) <= tol || std::abs(r - s_infinity) <= tol) return Region::OnContour;
    if (r > s_infinity) return z.imag() > 0.0 ? Region::Omega1 : Region::Omega2;
    return z.imag() > 0.0 ? Region::Omega3 : Region::Omega4;
}

const ContourSegment& Contour::segment(const std::string& name) const {
    for (const auto& s : segments)
        if (s.name == name) return s;
    throw InputError("contour has no segment named " + name);
}

std::size_t Contour::node_count() const {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.nodes.size();
    return n;
}

namespace {

Contour make_contour(double s_inf, const Grid1D& kg, std::size_t nc, double offset, bool hat, double ratio) {
    if (!(s_inf > 0.0)) throw InputError("contour: S_inf must be positive");
    if (nc < 8 || nc % 2 != 0) throw InputError("contour: circle node count must be even and >= 8");
    if (!(offset > 0.0 && offset < 1.0)) throw InputError("contour: angle offset must lie in (0, 1)");
    std::size_t sp = 0;
    std::size_t sm = 0;
    if (!is_node(kg, s_inf, sp) || !is_node(kg, -s_inf, sm) || sp + 1 >= kg.count || sm == 0)
        throw InputError("contour: +-S_inf must be interior nodes of the k-grid");

    Contour c;
    c.s_infinity = s_inf;
    c.hat = hat;
    c.ellipse_ratio = hat ? ratio : 0.0;
    const double h = kg.step;

    ContourSegment left{SegmentKind::Line, "line-left", cplx(kg.start, 0.0), cplx(-s_inf, 0.0), 0, 0, 1, {}, {}, true};
    ContourSegment inner{SegmentKind::Line, "line-inner", cplx(s_inf, 0.0), cplx(-s_inf, 0.0), 0, 0, -1, {}, {}, true};
    ContourSegment right{SegmentKind::Line, "line-right", cplx(s_inf, 0.0), cplx(kg.back(), 0.0), 0, 0, 1, {}, {}, true};
    if (hat) {
        inner.orientation = 1;
        std::swap(inner.start, inner.end);
    }
    for (std::size_t j = 0; j < kg.count; ++j) {
        const cplx k(kg.node(j), 0.0);
        ContourSegment& seg = j <= sm ? left : (j >= sp ? right : inner);
        seg.nodes.push_back(k);
        seg.weights.push_back(static_cast<double>(seg.orientation) * h);
    }

    // Upper arc clockwise (-S to +S over the top), lower arc counter-clockwise (-S to +S below).
    ContourSegment up{SegmentKind::CircleArc, "arc-upper", cplx(-s_inf, 0.0), cplx(s_inf, 0.0), s_inf, s_inf, -1, {}, {}, true};
    ContourSegment dn{SegmentKind::CircleArc, "arc-lower", cplx(-s_inf, 0.0), cplx(s_inf, 0.0), s_inf, s_inf, 1, {}, {}, true};
    const double dth = 2.0 * kPi / static_cast<double>(nc);
    for (std::size_t j = 0; j < nc; ++j) {
        const double th = dth * (static_cast<double>(j) + offset);
        const cplx z = std::polar(s_inf, th);
        ContourSegment& seg = j < nc / 2 ? up : dn;
        seg.nodes.push_back(z);
        seg.weights.push_back(static_cast<double>(seg.orientation) * kI * z * dth);
    }
    c.segments = {left, inner, right, up, dn};

    std::vector<std::string> at_plus = {"line-inner", "line-right", "arc-upper", "arc-lower"};
    std::vector<std::string> at_minus = {"line-left", "line-inner", "arc-upper", "arc-lower"};
    if (hat) {
        // Ellipse arcs: upper counter-clockwise (+S to -S), lower clockwise (+S to -S).
        const std::size_t ne = nc / 2;
        const double dphi = kPi / static_cast<double>(ne);
        ContourSegment eu{SegmentKind::EllipseArc, "ellipse-upper", cplx(s_inf, 0.0), cplx(-s_inf, 0.0), s_inf, ratio * s_inf, 1, {}, {}, false};
        ContourSegment el{SegmentKind::EllipseArc, "ellipse-lower", cplx(s_inf, 0.0), cplx(-s_inf, 0.0), s_inf, ratio * s_inf, -1, {}, {}, false};
        for (std::size_t j = 0; j < 2 * ne; ++j) {
            const double phi = dphi * (static_cast<double>(j) + 0.5);
            const cplx z(s_inf * std::cos(phi), ratio * s_inf * std::sin(phi));
            const cplx dz(-s_inf * std::sin(phi), ratio * s_inf * std::cos(phi));
            ContourSegment& seg = j < ne ? eu : el;
            seg.nodes.push_back(z);
            seg.weights.push_back(static_cast<double>(seg.orientation) * dz * dphi);
        }
        c.segments.push_back(eu);
        c.segments.push_back(el);
        at_plus.insert(at_plus.end(), {"ellipse-upper", "ellipse-lower"});
        at_minus.insert(at_minus.end(), {"ellipse-upper", "ellipse-lower"});
    }
    c.intersections = {cplx(s_inf, 0.0), cplx(-s_inf, 0.0)};
    c.incidence = {at_plus, at_minus};
    return c;
}

} // namespace

Contour build_gamma(double s_infinity, const Grid1D& k_grid, std::size_t circle_nodes, double angle_offset) {
    return make_contour(s_infinity, k_grid, circle_nodes, angle_offset, false, 0.0);
}

Contour build_gamma_hat(double s_infinity, const Grid1D& k_grid, std::size_t circle_nodes, double ellipse_ratio,
                        double angle_offset) {
    if (!(ellipse_ratio > 0.0 && ellipse_ratio < 1.0)) throw InputError("contour: ellipse ratio must lie in (0, 1)");
    return make_contour(s_infinity, k_grid, circle_nodes, angle_offset, true, ellipse_ratio);
}

// =============================================================================
// Eta
// =============================================================================

RowMat EtaFactor::block(cplx k) const {
    return (c0 + c1 * k) / std::pow(k - k0, n);
}

RowMat EtaFactor::matrix(cplx k, int p, int q) const {
    const RowMat b = block(k);
    if (b.rows() != (lower ? q : p) || b.cols() != (lower ? p : q)) throw InputError("EtaFactor: block size mismatch");
    return lower ? lower_unit(b) : upper_unit(b);
}

EtaFactor construct_eta(const RowMat& value_plus, const RowMat& value_minus, double s_infinity, cplx k0, int n,
                        bool lower) {
    if (n < 3) throw InputError("construct_eta: order must be at least 3");
    EtaFactor e;
    e.k0 = k0;
    e.n = n;
    e.lower = lower;
    const RowMat a = std::pow(cplx(s_infinity, 0.0) - k0, n) * value_plus;
    const RowMat b = std::pow(cplx(-s_infinity, 0.0) - k0, n) * value_minus;
    e.c1 = (a - b) / (2.0 * s_infinity);
    e.c0 = (a + b) / 2.0;
    return e;
}

// =============================================================================
// FocusingJump
// =============================================================================

bool FocusingJump::inner(std::size_t j) const { return j > minus_s_node && j < s_node; }

double FocusingJump::factorization_residual() const {
    double r = 0.0;
    auto check = [&r](const MatrixSeries& v, const MatrixSeries& vp, const MatrixSeries& vm) {
        for (std::size_t j = 0; j < v.size(); ++j)
            r = std::max(r, (RowMat(vm[j]).inverse() * RowMat(vp[j]) - RowMat(v[j])).norm());
    };
    check(line_V, line_V_plus, line_V_minus);
    check(circle_V, circle_V_plus, circle_V_minus);
    return r;
}

double FocusingJump::min_eig_line() const {
    double lo = INFINITY;
    for (std::size_t j = 0; j < line_V.size(); ++j) {
        const RowMat v = line_V[j];
        const Eigen::MatrixXcd s = v + v.adjoint();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s, Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    return lo;
}

FocusingJump FocusingJump::evolved(double t, const EtaOptions& options) const {
    FocusingJump out = *this;
    for (std::size_t j = 0; j < k_grid.count; ++j) {
        const double k = k_grid.node(j);
        const cplx ph = std::exp(-4.0 * kI * t * k * k);
        out.R[j] *= ph;
        out.R0[j] *= ph;
    }
    for (std::size_t j = 0; j < circle.size(); ++j) {
        const cplx z = circle[j];
        out.X[j] *= std::exp(4.0 * kI * t * z * z);
        out.Y[j] *= std::exp(-4.0 * kI * t * z * z);
    }
    refresh_conjugated(out, options);
    return out;
}

void refresh_conjugated(FocusingJump& fj, const EtaOptions& options) {
    const int p = fj.p;
    const int q = fj.q;
    const int n = p + q;
    const double S = fj.s_infinity;
    const RowMat Rp = fj.R[fj.s_node];
    const RowMat Rm = fj.R[fj.minus_s_node];
    const RowMat R0p = fj.R0[fj.s_node];
    const RowMat R0m = fj.R0[fj.minus_s_node];
    const cplx k_up = -kI * options.pole_scale * S;
    const cplx k_dn = kI * options.pole_scale * S;
    fj.eta[0] = construct_eta(-Rp.adjoint(), -Rm.adjoint(), S, k_up, options.order, true);
    fj.eta[1] = construct_eta(Rp, Rm, S, k_dn, options.order, false);
    fj.eta[2] = construct_eta(-R0p.adjoint(), -R0m.adjoint(), S, k_up, options.order, true);
    fj.eta[3] = construct_eta(R0p, R0m, S, k_dn, options.order, false);

    const std::size_t nk = fj.k_grid.count;
    const std::size_t nc = fj.circle.size();
    fj.line_V = MatrixSeries(n, n, nk);
    fj.line_V_plus = MatrixSeries(n, n, nk);
    fj.line_V_minus = MatrixSeries(n, n, nk);
    fj.line_Vh_plus = MatrixSeries(n, n, nk);
    fj.line_Vh_minus = MatrixSeries(n, n, nk);
    for (std::size_t j = 0; j < nk; ++j) {
        const cplx k(fj.k_grid.node(j), 0.0);
        if (fj.inner(j)) {
            const RowMat r0 = fj.R0[j];
            fj.line_V_plus[j] = upper_unit(r0);
            fj.line_V_minus[j] = lower_unit(-r0.adjoint());
            fj.line_V[j] = lower_unit(r0.adjoint()) * upper_unit(r0);
            fj.line_Vh_plus[j] = lower_unit(-r0.adjoint() - fj.eta[2].block(k));
            fj.line_Vh_minus[j] = upper_unit(r0 - fj.eta[3].block(k));
        } else {
            const RowMat r = fj.R[j];
            fj.line_V_plus[j] = lower_unit(-r.adjoint());
            fj.line_V_minus[j] = upper_unit(r);
            fj.line_V[j] = upper_unit(-r) * lower_unit(-r.adjoint());
            fj.line_Vh_plus[j] = lower_unit(-r.adjoint() - fj.eta[0].block(k));
            fj.line_Vh_minus[j] = upper_unit(r - fj.eta[1].block(k));
        }
    }
    fj.circle_V = MatrixSeries(n, n, nc);
    fj.circle_V_plus = MatrixSeries(n, n, nc);
    fj.circle_V_minus = MatrixSeries(n, n, nc);
    fj.circle_Vh_plus = MatrixSeries(n, n, nc);
    fj.circle_Vh_minus = MatrixSeries(n, n, nc);
    for (std::size_t j = 0; j < nc; ++j) {
        const cplx z = fj.circle[j];
        fj.circle_V_minus[j] = identity(n);
        if (fj.circle_sign[j] < 0) {
            const RowMat x = fj.X[j];
            fj.circle_V[j] = lower_unit(x);
            fj.circle_V_plus[j] = lower_unit(x);
            fj.circle_Vh_plus[j] = lower_unit(fj.eta[2].block(z) + x - fj.eta[0].block(z));
            fj.circle_Vh_minus[j] = identity(n);
        } else {
            const RowMat y = fj.Y[j];
            fj.circle_V[j] = upper_unit(y);
            fj.circle_V_plus[j] = upper_unit(y);
            fj.circle_Vh_plus[j] = identity(n);
            fj.circle_Vh_minus[j] = upper_unit(-(fj.eta[1].block(z) + y - fj.eta[3].block(z)));
        }
    }
}

namespace {

/// (m22+)^-1 m21- A^-1 e^{-2 i x0 z} at the cut-off node for Im z >= 0.
RowMat circle_x(const JostIntegrator& integ, cplx z, std::size_t x0_node, double x0, double& det_a) {
    const int q = integ.potential().q;
    const auto cols = upper_columns(integ, z, x0_node);
    det_a = std::abs(cols.A.determinant());
    const RowMat m21 = cols.m1_minus.bottomRows(q);
    const RowMat m22 = cols.m2_plus.bottomRows(q);
    return m22.partialPivLu().solve(RowMat(m21 * cols.A.inverse())) * std::exp(-2.0 * kI * x0 * z);
}

} // namespace

FocusingJump build_focusing_jump(const PotentialField& potential, const ScatteringData& sd_full,
                                 const ScatteringData& sd_cutoff, std::size_t x0_node, const Contour& gamma_hat,
                                 const EtaOptions& options) {
    if (!gamma_hat.hat) throw InputError("build_focusing_jump: a Gamma_hat contour is required");
    if (!(sd_full.k_grid == sd_cutoff.k_grid)) throw InputError("build_focusing_jump: k-grids differ");
    if (x0_node >= potential.grid.count) throw InputError("build_focusing_jump: cut-off node outside the grid");
    FocusingJump fj;
    fj.p = potential.p;
    fj.q = potential.q;
    fj.k_grid = sd_full.k_grid;
    fj.x0_node = x0_node;
    fj.x0 = potential.grid.node(x0_node);
    fj.s_infinity = gamma_hat.s_infinity;
    if (!is_node(fj.k_grid, fj.s_infinity, fj.s_node) || !is_node(fj.k_grid, -fj.s_infinity, fj.minus_s_node))
        throw InputError("build_focusing_jump: +-S_inf must be k-grid nodes");

    const int p = fj.p;
    const int q = fj.q;
    fj.R = MatrixSeries(p, q, fj.k_grid.count);
    for (std::size_t j = 0; j < fj.k_grid.count; ++j) {
        if (fj.inner(j)) continue;
        const RowMat D = sd_full.D[j];
        if (std::abs(D.determinant()) < 1e-10) {
            std::ostringstream os;
            os << "det D vanishes at k = " << fj.k_grid.node(j) << " outside the disc; enlarge S_inf";
            throw ContourError(os.str());
        }
        fj.R[j] = RowMat(sd_full.B[j]) * D.inverse();
    }
    fj.R0 = reflection_coefficient(sd_cutoff).R;

    const auto& up = gamma_hat.segment("arc-upper");
    const auto& dn = gamma_hat.segment("arc-lower");
    const std::size_t nc = up.nodes.size() + dn.nodes.size();
    double offset = std::arg(up.nodes.front()) * static_cast<double>(nc) / (2.0 * kPi);
    Contour contour = gamma_hat;
    JostIntegrator integ(potential);

    for (int attempt = 0; attempt < 3; ++attempt) {
        const auto& u = contour.segment("arc-upper");
        const auto& d = contour.segment("arc-lower");
        fj.circle.assign(u.nodes.begin(), u.nodes.end());
        fj.circle.insert(fj.circle.end(), d.nodes.begin(), d.nodes.end());
        fj.circle_sign.assign(nc, 1);
        std::fill(fj.circle_sign.begin(), fj.circle_sign.begin() + static_cast<long>(u.nodes.size()), -1);
        fj.X = MatrixSeries(q, p, nc);
        fj.Y = MatrixSeries(p, q, nc);
        std::vector<double> dets(nc);
        parallel_for(nc, [&](std::size_t j) {
            const cplx z = fj.circle[j];
            if (fj.circle_sign[j] < 0) {
                fj.X[j] = circle_x(integ, z, x0_node, fj.x0, dets[j]);
            } else {
                fj.Y[j] = circle_x(integ, std::conj(z), x0_node, fj.x0, dets[j]).adjoint();
            }
        });
        const double worst = *std::min_element(dets.begin(), dets.end());
        if (worst > 1e-8) {
            fj.contour = contour;
            fj.circle_angle_offset = offset;
            refresh_conjugated(fj, options);
            return fj;
        }
        offset += 0.25;
        if (offset >= 1.0) offset -= 1.0;
        ++fj.node_rotations;
        contour = build_gamma_hat(fj.s_infinity, fj.k_grid, nc, gamma_hat.ellipse_ratio, offset);
    }
    throw ContourError("det A vanishes on the circle |k| = S_inf after node rotation; choose a larger S_inf");
}

// =============================================================================
// Matching and eta diagnostics
// =============================================================================

namespace {

double slope(const std::vector<double>& r) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(r[i] > 0.0)) continue;
        const double x = std::log(static_cast<double>(i + 1));
        const double y = std::log(r[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 2) return 0.0;
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

} // namespace

MatchingReport verify_matching(const FocusingJump& fj, const PotentialField& potential, std::size_t approach) {
    const int n = fj.p + fj.q;
    const RowMat I = identity(n);
    JostIntegrator integ(potential);
    MatchingReport rep;

    auto limits = [&](std::size_t node, double k) {
        double det = 0.0;
        const RowMat x = circle_x(integ, cplx(k, 0.0), fj.x0_node, fj.x0, det);
        const RowMat r = fj.R[node];
        const RowMat r0 = fj.R0[node];
        struct Four {
            RowMat v1, v2, v3, v4;
        };
        return Four{upper_unit(-r) * lower_unit(-r.adjoint()), lower_unit(x), lower_unit(r0.adjoint()) * upper_unit(r0),
                    upper_unit(x.adjoint())};
    };
    {
        const auto f = limits(fj.s_node, fj.s_infinity);
        rep.at_plus = (f.v1 * f.v2.inverse() * f.v3 * f.v4.inverse() - I).norm();
        const auto g = limits(fj.minus_s_node, -fj.s_infinity);
        rep.at_minus = (g.v3.inverse() * g.v2 * g.v1.inverse() * g.v4 - I).norm();
    }
    const std::size_t nc = fj.circle.size();
    const std::size_t half = nc / 2;
    const std::size_t steps = std::min({approach, half, fj.minus_s_node, fj.k_grid.count - 1 - fj.s_node,
                                        (fj.s_node - fj.minus_s_node) / 2});
    for (std::size_t m = 1; m <= steps; ++m) {
        const RowMat v1 = fj.line_V[fj.s_node + m];
        const RowMat v3 = fj.line_V[fj.s_node - m];
        const RowMat v2 = fj.circle_V[m - 1];
        const RowMat v4 = fj.circle_V[nc - m];
        rep.approach_plus.push_back((v1 * v2.inverse() * v3 * v4.inverse() - I).norm());
        const RowMat w1 = fj.line_V[fj.minus_s_node - m];
        const RowMat w3 = fj.line_V[fj.minus_s_node + m];
        const RowMat w2 = fj.circle_V[half - m];
        const RowMat w4 = fj.circle_V[half + m - 1];
        rep.approach_minus.push_back((w3.inverse() * w2 * w1.inverse() * w4 - I).norm());
    }
    rep.order_plus = slope(rep.approach_plus);
    rep.order_minus = slope(rep.approach_minus);
    return rep;
}

EtaReport eta_report(const FocusingJump& fj) {
    const int p = fj.p;
    const int q = fj.q;
    const int n = p + q;
    const double S = fj.s_infinity;
    EtaReport rep;
    const RowMat Rp = fj.R[fj.s_node];
    const RowMat Rm = fj.R[fj.minus_s_node];
    const RowMat R0p = fj.R0[fj.s_node];
    const RowMat R0m = fj.R0[fj.minus_s_node];
    const std::array<std::pair<RowMat, RowMat>, 4> anchors = {
        std::pair{RowMat(-Rp.adjoint()), RowMat(-Rm.adjoint())}, std::pair{Rp, Rm},
        std::pair{RowMat(-R0p.adjoint()), RowMat(-R0m.adjoint())}, std::pair{R0p, R0m}};
    for (int i = 0; i < 4; ++i) {
        const auto& e = fj.eta[static_cast<std::size_t>(i)];
        rep.anchor_residual = std::max({rep.anchor_residual, (e.block(cplx(S, 0.0)) - anchors[i].first).norm(),
                                        (e.block(cplx(-S, 0.0)) - anchors[i].second).norm()});
        for (int a = 0; a < 8; ++a) {
            const double phi = 2.0 * kPi * (a + 0.5) / 8.0;
            const cplx z5 = std::polar(5.0 * S, phi);
            const cplx z10 = std::polar(10.0 * S, phi);
            rep.decay_5 = std::max(rep.decay_5, std::norm(z5) * e.block(z5).norm());
            rep.decay_10 = std::max(rep.decay_10, std::norm(z10) * e.block(z10).norm());
        }
    }
    // Plus factors strictly lower, minus factors strictly upper after subtracting I.
    auto lower_violation = [&](const RowMat& m) {
        const RowMat d = m - identity(n);
        return std::max({d.topLeftCorner(p, p).norm(), d.topRightCorner(p, q).norm(), d.bottomRightCorner(q, q).norm()});
    };
    auto upper_violation = [&](const RowMat& m) {
        const RowMat d = m - identity(n);
        return std::max({d.topLeftCorner(p, p).norm(), d.bottomLeftCorner(q, p).norm(), d.bottomRightCorner(q, q).norm()});
    };
    for (std::size_t j = 0; j < fj.k_grid.count; ++j) {
        rep.triangularity = std::max({rep.triangularity, lower_violation(fj.line_Vh_plus[j]),
                                      upper_violation(fj.line_Vh_minus[j])});
    }
    for (std::size_t j = 0; j < fj.circle.size(); ++j) {
        if (fj.circle_sign[j] < 0)
            rep.triangularity = std::max({rep.triangularity, lower_violation(fj.circle_Vh_plus[j]),
                                          lower_violation(fj.circle_V[j])});
        else
            rep.triangularity = std::max({rep.triangularity, upper_violation(fj.circle_Vh_minus[j]),
                                          upper_violation(fj.circle_V[j])});
    }
    return rep;
}

// =============================================================================
// Operators
// =============================================================================

FocusingOperators::FocusingOperators(const FocusingJump& fj)
    : fj_(fj), nk_(fj.k_grid.count), nc_(fj.circle.size()), line_(fj.k_grid.count) {
    const auto nk = static_cast<Eigen::Index>(nk_);
    const auto nc = static_cast<Eigen::Index>(nc_);
    const double rho = fj.s_infinity;
    sign_.resize(nc);
    for (Eigen::Index j = 0; j < nc; ++j) sign_[j] = fj.circle_sign[static_cast<std::size_t>(j)];

    line_to_circle_.resize(nc, nk);
    parallel_for(nc_, [&](std::size_t i) {
        line_to_circle_.row(static_cast<Eigen::Index>(i)) = line_cauchy_weights(fj.k_grid, fj.circle[i]);
    });

    // Trigonometric coefficients c_m = F g of the counter-clockwise circle density.
    Eigen::MatrixXcd F(nc, nc);
    std::vector<long> modes(nc_);
    for (std::size_t m = 0; m < nc_; ++m) modes[m] = fft_index(m, nc_);
    for (Eigen::Index m = 0; m < nc; ++m)
        for (Eigen::Index j = 0; j < nc; ++j)
            F(m, j) = std::pow(fj.circle[static_cast<std::size_t>(j)] / rho, -modes[static_cast<std::size_t>(m)]) /
                      static_cast<double>(nc_);

    Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(nk, nc);
    for (Eigen::Index l = 0; l < nk; ++l) {
        const double k = fj.k_grid.node(static_cast<std::size_t>(l));
        const bool inside = std::abs(k) < rho;
        for (Eigen::Index m = 0; m < nc; ++m) {
            const long md = modes[static_cast<std::size_t>(m)];
            if (inside && md >= 0) P(l, m) = std::pow(k / rho, static_cast<double>(md));
            else if (!inside && md < 0) P(l, m) = -std::pow(rho / k, static_cast<double>(-md));
        }
    }
    circle_to_line_ = P * F;

    Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(nc, nc);
    for (Eigen::Index i = 0; i < nc; ++i)
        for (Eigen::Index m = 0; m < nc; ++m)
            if (modes[static_cast<std::size_t>(m)] >= 0)
                E(i, m) = std::pow(fj.circle[static_cast<std::size_t>(i)] / rho, modes[static_cast<std::size_t>(m)]);
    circle_self_ = E * F;
    // Minus side: inside for the clockwise upper arc, outside for the counter-clockwise lower arc.
    for (Eigen::Index i = 0; i < nc; ++i)
        if (sign_[i] > 0) circle_self_(i, i) -= 1.0;
}

void FocusingOperators::cauchy_minus(const Eigen::MatrixXcd& fl, const Eigen::MatrixXcd& fc,
                                     Eigen::MatrixXcd& line_out, Eigen::MatrixXcd& circle_out) const {
    const Eigen::MatrixXcd g = sign_.asDiagonal() * fc;
    line_out.resize(fl.rows(), fl.cols());
    for (Eigen::Index c = 0; c < fl.cols(); ++c) line_.apply(fl.col(c).data(), line_out.col(c).data(), Side::Minus);
    line_out.noalias() += circle_to_line_ * g;
    circle_out.noalias() = circle_self_ * g;
    circle_out.noalias() += line_to_circle_ * fl;
}

Eigen::RowVectorXcd FocusingOperators::evaluate(const Eigen::MatrixXcd& fl, const Eigen::MatrixXcd& fc, cplx z) const {
    const double rho = fj_.s_infinity;
    Eigen::RowVectorXcd out = line_cauchy_weights(fj_.k_grid, z) * fl;
    const auto nc = static_cast<Eigen::Index>(nc_);
    const Eigen::MatrixXcd g = sign_.asDiagonal() * fc;
    const bool inside = std::abs(z) < rho;
    Eigen::RowVectorXcd w = Eigen::RowVectorXcd::Zero(nc);
    for (Eigen::Index m = 0; m < nc; ++m) {
        const long md = fft_index(static_cast<std::size_t>(m), nc_);
        if (inside && md < 0) continue;
        if (!inside && md >= 0) continue;
        const cplx factor = inside ? std::pow(z / rho, static_cast<double>(md)) : -std::pow(rho / z, static_cast<double>(-md));
        for (Eigen::Index j = 0; j < nc; ++j)
            w[j] += factor * std::pow(fj_.circle[static_cast<std::size_t>(j)] / rho, -md) / static_cast<double>(nc_);
    }
    out += w * g;
    return out;
}

// =============================================================================
// Solve
// =============================================================================

namespace {

struct Dressed {
    MatrixSeries line_plus, line_minus, circle_plus, circle_minus;
};

Dressed dress(const FocusingJump& fj, double x) {
    Dressed d{fj.line_Vh_plus, fj.line_Vh_minus, fj.circle_Vh_plus, fj.circle_Vh_minus};
    for (std::size_t j = 0; j < fj.k_grid.count; ++j) {
        const double k = fj.k_grid.node(j);
        ad_sigma3_exp_inplace(x * k, fj.p, d.line_plus[j]);
        ad_sigma3_exp_inplace(x * k, fj.p, d.line_minus[j]);
    }
    for (std::size_t j = 0; j < fj.circle.size(); ++j) {
        const cplx z = fj.circle[j];
        ad_sigma3_exp_inplace(x * z, fj.p, d.circle_plus[j]);
        ad_sigma3_exp_inplace(x * z, fj.p, d.circle_minus[j]);
    }
    return d;
}

/// Row-wise products f_j = phi_j * M_j for a density stored as (nodes x n) with per-node matrices.
Eigen::MatrixXcd right_multiply(const Eigen::Ref<const Eigen::MatrixXcd>& phi, const MatrixSeries& m) {
    Eigen::MatrixXcd out(phi.rows(), phi.cols());
    for (Eigen::Index j = 0; j < phi.rows(); ++j) out.row(j) = phi.row(j) * m[static_cast<std::size_t>(j)];
    return out;
}

struct Weights {
    MatrixSeries line_w, line_wm, circle_w, circle_wm;
};

Weights weights_at(const FocusingJump& fj, double x) {
    const int n = fj.p + fj.q;
    const auto d = dress(fj, x);
    Weights w{MatrixSeries(n, n, fj.k_grid.count), MatrixSeries(n, n, fj.k_grid.count),
              MatrixSeries(n, n, fj.circle.size()), MatrixSeries(n, n, fj.circle.size())};
    for (std::size_t j = 0; j < fj.k_grid.count; ++j) {
        w.line_w[j] = RowMat(d.line_plus[j]) - RowMat(d.line_minus[j]);
        w.line_wm[j] = identity(n) - RowMat(d.line_minus[j]);
    }
    for (std::size_t j = 0; j < fj.circle.size(); ++j) {
        w.circle_w[j] = RowMat(d.circle_plus[j]) - RowMat(d.circle_minus[j]);
        w.circle_wm[j] = identity(n) - RowMat(d.circle_minus[j]);
    }
    return w;
}

} // namespace

FocusingSolution focusing_solve(const FocusingOperators& ops, double x, const FocusingOptions& options,
                                const FocusingSolution* warm) {
    const auto& fj = ops.jump();
    const int n = fj.p + fj.q;
    const auto nk = static_cast<Eigen::Index>(ops.line_size());
    const auto nc = static_cast<Eigen::Index>(ops.circle_size());
    const Eigen::Index size = n * (nk + nc);
    const Weights w = weights_at(fj, x);

    ApplyFn apply = [&](const Eigen::VectorXcd& v, Eigen::VectorXcd& y) {
        Eigen::Map<const Eigen::MatrixXcd> ml(v.data(), nk, n);
        Eigen::Map<const Eigen::MatrixXcd> mc(v.data() + n * nk, nc, n);
        const Eigen::MatrixXcd fl = right_multiply(ml, w.line_w);
        const Eigen::MatrixXcd fc = right_multiply(mc, w.circle_w);
        Eigen::MatrixXcd lo, co;
        ops.cauchy_minus(fl, fc, lo, co);
        lo += right_multiply(ml, w.line_wm);
        co += right_multiply(mc, w.circle_wm);
        y.resize(size);
        Eigen::Map<Eigen::MatrixXcd>(y.data(), nk, n) = ml - lo;
        Eigen::Map<Eigen::MatrixXcd>(y.data() + n * nk, nc, n) = mc - co;
    };

    FocusingSolution sol;
    sol.x = x;
    sol.mu_line = MatrixSeries(n, n, ops.line_size());
    sol.mu_circle = MatrixSeries(n, n, ops.circle_size());
    for (std::size_t j = 0; j < ops.line_size(); ++j) sol.mu_line[j].setIdentity();
    for (std::size_t j = 0; j < ops.circle_size(); ++j) sol.mu_circle[j].setIdentity();

    for (int r = 0; r < fj.p; ++r) {
        Eigen::VectorXcd b = Eigen::VectorXcd::Zero(size);
        b.segment(r * nk, nk).setOnes();
        b.segment(n * nk + r * nc, nc).setOnes();
        Eigen::VectorXcd guess = b;
        if (warm) {
            for (int a = 0; a < n; ++a) {
                for (Eigen::Index j = 0; j < nk; ++j) guess[a * nk + j] = warm->mu_line[static_cast<std::size_t>(j)](r, a);
                for (Eigen::Index j = 0; j < nc; ++j)
                    guess[n * nk + a * nc + j] = warm->mu_circle[static_cast<std::size_t>(j)](r, a);
            }
        }
        auto res = gmres_solve(apply, size, b, guess, options.tol, options.restart, options.max_iterations);
        sol.iterations += res.iterations;
        if (!res.converged) {
            std::ostringstream os;
            os << "focusing GMRES stagnated at relative residual " << res.residual << " (x = " << x << ")";
            throw SolverError(os.str(), res.residual);
        }
        sol.residual = std::max(sol.residual, res.residual);
        for (int a = 0; a < n; ++a) {
            for (Eigen::Index j = 0; j < nk; ++j) sol.mu_line[static_cast<std::size_t>(j)](r, a) = res.x[a * nk + j];
            for (Eigen::Index j = 0; j < nc; ++j)
                sol.mu_circle[static_cast<std::size_t>(j)](r, a) = res.x[n * nk + a * nc + j];
        }
    }
    return sol;
}

RowMat window_tail(const FocusingJump& fj, double x) {
    const auto& eta = fj.eta[1];
    const double h = fj.k_grid.step;
    const double a = fj.k_grid.node(0) - 0.5 * h;
    const double b = fj.k_grid.node(fj.k_grid.count - 1) + 0.5 * h;
    const std::size_t panels = static_cast<std::size_t>(std::ceil((b - a) * (1.0 + x))) + 16;
    static gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(16);
    const double width = (b - a) / static_cast<double>(panels);
    RowMat acc = RowMat::Zero(fj.p, fj.q);
    for (std::size_t m = 0; m < panels; ++m) {
        const double lo = a + width * static_cast<double>(m);
        for (std::size_t i = 0; i < 16; ++i) {
            double k = 0.0, wk = 0.0;
            gsl_integration_glfixed_point(lo, lo + width, i, &k, &wk, table);
            acc += (wk * std::exp(-2.0 * kI * x * k)) * eta.block(cplx(k, 0.0));
        }
    }
    return acc / kPi;
}

RowMat focusing_potential(const FocusingOperators& ops, const FocusingSolution& sol) {
    const auto& fj = ops.jump();
    const int n = fj.p + fj.q;
    const Weights w = weights_at(fj, sol.x);
    RowMat acc = RowMat::Zero(n, n);
    for (std::size_t j = 0; j < ops.line_size(); ++j)
        acc += fj.k_grid.step * (RowMat(sol.mu_line[j]) * RowMat(w.line_w[j]));
    const double dth = 2.0 * kPi / static_cast<double>(ops.circle_size());
    for (std::size_t j = 0; j < ops.circle_size(); ++j) {
        const cplx dk = static_cast<double>(fj.circle_sign[j]) * kI * fj.circle[j] * dth;
        acc += dk * (RowMat(sol.mu_circle[j]) * RowMat(w.circle_w[j]));
    }
    return (-1.0 / kPi) * acc.topRightCorner(fj.p, fj.q) + window_tail(fj, sol.x);
}

std::vector<RowMat> focusing_reconstruct_right(const FocusingJump& fj, const std::vector<double>& xs,
                                               const FocusingOptions& options) {
    for (double x : xs)
        if (x < -1e-12) throw InputError("focusing_reconstruct_right: x must be non-negative");
    const FocusingOperators ops(fj);
    std::vector<RowMat> out(xs.size());
    constexpr std::size_t kChunk = 16;
    const std::size_t chunks = (xs.size() + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t c) {
        FocusingSolution prev;
        bool have = false;
        for (std::size_t i = c * kChunk; i < std::min(xs.size(), (c + 1) * kChunk); ++i) {
            auto sol = focusing_solve(ops, xs[i], options, have ? &prev : nullptr);
            out[i] = focusing_potential(ops, sol);
            prev = std::move(sol);
            have = true;
        }
    });
    return out;
}

ScatteringData cutoff_scattering(const JostIntegrator& integ, const Grid1D& k_grid, std::size_t x0_node) {
    const auto& pot = integ.potential();
    const double x0 = pot.grid.node(x0_node);
    ScatteringData sd(k_grid, pot.p, pot.q, pot.sigma);
    parallel_for(k_grid.count, [&](std::size_t j) {
        const double k = k_grid.node(j);
        RowMat s = plus_at(integ, k, x0_node).inverse();
        ad_sigma3_exp_inplace(-x0 * k, pot.p, s);
        sd.set_S(j, s);
    });
    return sd;
}

FocusingSetup prepare_focusing(const PotentialField& potential, const Grid1D& k_grid,
                               const FocusingSetupOptions& options) {
    if (potential.sigma != -1) throw InputError("prepare_focusing: focusing potential required (sigma = -1)");
    FocusingSetup s;
    s.cutoff = select_cutoff(potential, options.cutoff_threshold);
    s.sd_full = forward_scattering(potential, k_grid, options.solver_tol);
    JostIntegrator integ(potential);
    s.sd_cutoff = cutoff_scattering(integ, k_grid, s.cutoff.node);
    s.disc = select_s_infinity(integ, s.sd_full, options.s_infinity);
    const Contour c = build_gamma_hat(s.disc.s_infinity, k_grid, options.circle_nodes, options.ellipse_ratio);
    s.jump = build_focusing_jump(potential, s.sd_full, s.sd_cutoff, s.cutoff.node, c, options.eta);
    const double lo = s.jump.min_eig_line();
    if (!(lo > 0.0)) {
        std::ostringstream os;
        os << "V + V^dagger is not positive definite on the real line (min eigenvalue " << lo << ")";
        throw DataError(os.str());
    }
    return s;
}

PotentialField focusing_reconstruct(const FocusingJump& right, const FocusingJump* left, const Grid1D& x_grid,
                                    const FocusingOptions& options) {
    std::vector<double> right_x, left_x;
    std::vector<std::size_t> right_i, left_i;
    for (std::size_t j = 0; j < x_grid.count; ++j) {
        const double x = x_grid.node(j);
        if (x >= 0.0) {
            right_x.push_back(x);
            right_i.push_back(j);
        } else {
            left_x.push_back(-x);
            left_i.push_back(j);
        }
    }
    if (!left_x.empty() && left == nullptr)
        throw InputError("focusing_reconstruct: x < 0 requested without a left-side jump");
    MatrixSeries out(right.p, right.q, x_grid.count);
    if (!right_x.empty()) {
        const auto vals = focusing_reconstruct_right(right, right_x, options);
        for (std::size_t i = 0; i < vals.size(); ++i) out[right_i[i]] = vals[i];
    }
    if (!left_x.empty()) {
        const auto vals = focusing_reconstruct_right(*left, left_x, options);
        for (std::size_t i = 0; i < vals.size(); ++i) out[left_i[i]] = vals[i];
    }
    return PotentialField(x_grid, right.p, right.q, -1, std::move(out));
}

PotentialField focusing_solve_and_reconstruct(const PotentialField& potential, const Grid1D& k_grid,
                                              const Grid1D& x_grid, const FocusingSetupOptions& setup,
                                              const FocusingOptions& options) {
    bool need_left = false;
    for (std::size_t j = 0; j < x_grid.count; ++j) need_left = need_left || x_grid.node(j) < 0.0;
    const auto right = prepare_focusing(potential, k_grid, setup);
    if (!need_left) return focusing_reconstruct(right.jump, nullptr, x_grid, options);
    const auto left = prepare_focusing(potential.reflected(), k_grid, setup);
    return focusing_reconstruct(right.jump, &left.jump, x_grid, options);
}

// =============================================================================
// Decay probe
// =============================================================================

namespace {

/// Entry-wise densities of a per-node n x n field: (nodes x n^2), entry (a, b) in column a n + b.
Eigen::MatrixXcd entries(const MatrixSeries& m, bool minus_identity, bool negate) {
    const int n = m.rows();
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(m.size()), n * n);
    for (std::size_t j = 0; j < m.size(); ++j) {
        RowMat v = m[j];
        if (minus_identity) v -= identity(n);
        if (negate) v = -v;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) out(static_cast<Eigen::Index>(j), a * n + b) = v(a, b);
    }
    return out;
}

double arc_l2(const FocusingJump& fj, const Eigen::MatrixXcd& fc, int which) {
    const double ds = fj.s_infinity * 2.0 * kPi / static_cast<double>(fj.circle.size());
    double s = 0.0;
    for (Eigen::Index j = 0; j < fc.rows(); ++j)
        if (which == 0 || fj.circle_sign[static_cast<std::size_t>(j)] == which) s += fc.row(j).squaredNorm() * ds;
    return s;
}

double line_l2(const FocusingJump& fj, const Eigen::MatrixXcd& fl) { return fl.squaredNorm() * fj.k_grid.step; }

double h1_squared(const FocusingJump& fj, const MatrixSeries& line, const MatrixSeries& circle) {
    const int n = line.rows();
    MatrixSeries d(n, n, line.size());
    for (std::size_t j = 0; j < line.size(); ++j) d[j] = RowMat(line[j]) - identity(n);
    const double lh = discrete_norms(d, fj.k_grid).h1;
    double total = lh * lh;
    const Eigen::MatrixXcd fc = entries(circle, true, false);
    const std::size_t nc = fj.circle.size();
    const double ds = fj.s_infinity * 2.0 * kPi / static_cast<double>(nc);
    std::vector<cplx> buf(nc);
    for (Eigen::Index c = 0; c < fc.cols(); ++c) {
        for (std::size_t j = 0; j < nc; ++j) buf[j] = fc(static_cast<Eigen::Index>(j), c);
        fft_forward(buf.data(), buf.data(), nc);
        for (std::size_t m = 0; m < nc; ++m) {
            const long md = fft_index(m, nc);
            buf[m] = (nc % 2 == 0 && m == nc / 2) ? 0.0 : buf[m] * kI * static_cast<double>(md) / fj.s_infinity;
        }
        fft_backward(buf.data(), buf.data(), nc);
        for (std::size_t j = 0; j < nc; ++j) {
            total += std::norm(buf[j] / static_cast<double>(nc)) * ds;
            total += std::norm(fc(static_cast<Eigen::Index>(j), c)) * ds;
        }
    }
    return total;
}

} // namespace

DecayTable decay_estimate_probe(const FocusingJump& fj, const std::vector<double>& xs) {
    const FocusingOperators ops(fj);
    const int n = fj.p + fj.q;
    DecayTable table;
    table.h1_minus = std::sqrt(h1_squared(fj, fj.line_Vh_minus, fj.circle_Vh_minus));
    table.h1_plus = std::sqrt(h1_squared(fj, fj.line_Vh_plus, fj.circle_Vh_plus));
    const auto nk = static_cast<Eigen::Index>(fj.k_grid.count);
    const auto nc = static_cast<Eigen::Index>(fj.circle.size());

    for (double x : xs) {
        if (x < 0.0) throw InputError("decay_estimate_probe: x must be non-negative");
        const auto d = dress(fj, x);
        const Weights w = weights_at(fj, x);
        DecayRow row;
        row.x = x;

        const Eigen::MatrixXcd ml_l = entries(d.line_minus, true, false);
        const Eigen::MatrixXcd ml_c = entries(d.circle_minus, true, false);
        const Eigen::MatrixXcd pl_l = entries(d.line_plus, true, false);
        const Eigen::MatrixXcd pl_c = entries(d.circle_plus, true, false);
        Eigen::MatrixXcd lo, co;

        ops.cauchy_minus(ml_l, ml_c, lo, co);
        lo += ml_l;
        co += ml_c;
        row.lhs[0] = std::sqrt(line_l2(fj, lo) + arc_l2(fj, co, -1));

        ops.cauchy_minus(pl_l, pl_c, lo, co);
        row.lhs[1] = std::sqrt(line_l2(fj, lo) + arc_l2(fj, co, 1));
        row.lhs[2] = std::sqrt(arc_l2(fj, ml_c, 1));
        row.lhs[3] = std::sqrt(arc_l2(fj, pl_c, -1));

        // (C_V)^2 I with C_V phi = C-(phi W) + phi w-, applied row by row.
        double sq = 0.0;
        for (int r = 0; r < n; ++r) {
            Eigen::MatrixXcd phl = Eigen::MatrixXcd::Zero(nk, n);
            Eigen::MatrixXcd phc = Eigen::MatrixXcd::Zero(nc, n);
            phl.col(r).setOnes();
            phc.col(r).setOnes();
            for (int pass = 0; pass < 2; ++pass) {
                ops.cauchy_minus(right_multiply(phl, w.line_w), right_multiply(phc, w.circle_w), lo, co);
                lo += right_multiply(phl, w.line_wm);
                co += right_multiply(phc, w.circle_wm);
                phl = lo;
                phc = co;
            }
            sq += line_l2(fj, phl) + arc_l2(fj, phc, 0);
        }
        row.lhs[4] = std::sqrt(sq);

        const double s = std::sqrt(1.0 + x * x);
        const std::array<double, 5> den = {table.h1_minus, table.h1_plus, table.h1_minus, table.h1_plus,
                                           table.h1_minus * table.h1_plus};
        for (int i = 0; i < 5; ++i) {
            row.constant[static_cast<std::size_t>(i)] = den[static_cast<std::size_t>(i)] > 0.0
                                                            ? row.lhs[static_cast<std::size_t>(i)] * s / den[static_cast<std::size_t>(i)]
                                                            : 0.0;
            table.fitted[static_cast<std::size_t>(i)] =
                std::max(table.fitted[static_cast<std::size_t>(i)], row.constant[static_cast<std::size_t>(i)]);
        }
        table.rows.push_back(row);
    }
    return table;
}

} // namespace mnls
