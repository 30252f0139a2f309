#include "mnls/scattering.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mnls/fft.hpp"
#include "mnls/parallel.hpp"

namespace mnls {

namespace {

constexpr double kR15 = 0.38729833462074168852; // sqrt(15)/10
constexpr double kGauss[3] = {0.5 - kR15, 0.5, 0.5 + kR15};

template <int N>
using Mat = std::conditional_t<N == Eigen::Dynamic, RowMat, Eigen::Matrix<cplx, N, N, Eigen::RowMajor>>;

template <int N>
Mat<N> make(int n) {
    if constexpr (N == Eigen::Dynamic) return RowMat::Zero(n, n);
    else return Mat<N>::Zero();
}

template <int N>
Eigen::Map<const Mat<N>> view(const std::vector<cplx>& flat, std::size_t idx, int n) {
    const cplx* ptr = flat.data() + idx * static_cast<std::size_t>(n) * n;
    if constexpr (N == Eigen::Dynamic) return Eigen::Map<const Mat<N>>(ptr, n, n);
    else return Eigen::Map<const Mat<N>>(ptr);
}

/// Left multiply by e^{i a sigma3}: rows [0,p) times e^{ia}, rows [p,n) times e^{-ia}.
template <class M>
void left_phase(M& m, int p, cplx a) {
    const cplx e1 = std::exp(kI * a);
    const cplx e2 = std::exp(-kI * a);
    m.topRows(p) *= e1;
    m.bottomRows(m.rows() - p) *= e2;
}

/// Right multiply by e^{i a sigma3}.
template <class M>
void right_phase(M& m, int p, cplx a) {
    const cplx e1 = std::exp(kI * a);
    const cplx e2 = std::exp(-kI * a);
    m.leftCols(p) *= e1;
    m.rightCols(m.cols() - p) *= e2;
}

template <class M>
M commutator(const M& a, const M& b) {
    return a * b - b * a;
}

/// Sixth-order Magnus exponent on one cell from U at the three Gauss points.
template <int N>
Mat<N> magnus6(const std::vector<cplx>& gu, std::size_t cell, int n, int p, double h, cplx k) {
    Mat<N> a[3];
    for (int i = 0; i < 3; ++i) {
        a[i] = view<N>(gu, 3 * cell + static_cast<std::size_t>(i), n);
        a[i].diagonal().head(p).array() -= kI * k;
        a[i].diagonal().tail(n - p).array() += kI * k;
    }
    const Mat<N> a1 = h * a[1];
    const Mat<N> a2 = (std::sqrt(15.0) * h / 3.0) * (a[2] - a[0]);
    const Mat<N> a3 = (10.0 * h / 3.0) * (a[2] - 2.0 * a[1] + a[0]);
    const Mat<N> c1 = commutator<Mat<N>>(a1, a2);
    const Mat<N> c2 = (-1.0 / 60.0) * commutator<Mat<N>>(a1, (2.0 * a3 + c1).eval());
    return a1 + a3 / 12.0 + commutator<Mat<N>>((-20.0 * a1 - a3 + c1).eval(), (a2 + c2).eval()) / 240.0;
}

std::string k_text(cplx k) {
    std::ostringstream os;
    os << k;
    return os.str();
}

} // namespace

// =============================================================================
// JostIntegrator
// =============================================================================

JostIntegrator::JostIntegrator(const PotentialField& potential) : potential_(potential) {
    const auto& g = potential.grid;
    cells_ = g.count - 1;
    n_ = potential.p + potential.q;
    const double h = g.step;
    const std::size_t nn = static_cast<std::size_t>(n_) * n_;
    auto put = [&](std::vector<cplx>& dst, std::size_t idx, double x) {
        const RowMat u = assemble_U(potential.at(x), potential.sigma).entries();
        std::copy(u.data(), u.data() + nn, dst.begin() + static_cast<long>(idx * nn));
    };
    gauss_u_.resize(3 * cells_ * nn);
    node_u_.resize(g.count * nn);
    if (potential.profile) {
        for (std::size_t j = 0; j < cells_; ++j)
            for (int i = 0; i < 3; ++i) put(gauss_u_, 3 * j + static_cast<std::size_t>(i), g.node(j) + kGauss[i] * h);
    } else {
        // Band-limited values at x_j + c h for every node at once: spectral shift by c h.
        const std::size_t nx = g.count;
        const int p = potential.p;
        const int q = potential.q;
        std::vector<cplx> spec(nx), buf(nx);
        std::vector<RowMat> qs(3 * cells_, RowMat::Zero(p, q));
        const double dxi = 2.0 * kPi / (static_cast<double>(nx) * h);
        for (int r = 0; r < p; ++r) {
            for (int c = 0; c < q; ++c) {
                for (std::size_t j = 0; j < nx; ++j) spec[j] = potential.samples[j](r, c);
                fft_forward(spec.data(), spec.data(), nx);
                for (int i = 0; i < 3; ++i) {
                    const double shift = kGauss[i] * h;
                    for (std::size_t m = 0; m < nx; ++m) {
                        const double xi = dxi * static_cast<double>(fft_index(m, nx));
                        buf[m] = (nx % 2 == 0 && m == nx / 2) ? spec[m] * std::cos(xi * shift)
                                                              : spec[m] * std::exp(kI * xi * shift);
                    }
                    fft_backward(buf.data(), buf.data(), nx);
                    for (std::size_t j = 0; j < cells_; ++j)
                        qs[3 * j + static_cast<std::size_t>(i)](r, c) = buf[j] / static_cast<double>(nx);
                }
            }
        }
        for (std::size_t idx = 0; idx < qs.size(); ++idx) {
            const RowMat u = assemble_U(qs[idx], potential.sigma).entries();
            std::copy(u.data(), u.data() + nn, gauss_u_.begin() + static_cast<long>(idx * nn));
        }
    }
    for (std::size_t j = 0; j < g.count; ++j) {
        const RowMat u = assemble_U(potential.samples[j], potential.sigma).entries();
        std::copy(u.data(), u.data() + nn, node_u_.begin() + static_cast<long>(j * nn));
    }
}

RowMat JostIntegrator::omega(std::size_t j, cplx k) const {
    return magnus6<Eigen::Dynamic>(gauss_u_, j, n_, potential_.p, potential_.grid.step, k);
}

RowMat JostIntegrator::cell_propagator(std::size_t j, cplx k, bool inverse) const {
    RowMat om = omega(j, k);
    if (inverse) om = -om;
    return om.exp();
}

void JostIntegrator::check_resolution(cplx k) const {
    if (std::abs(k) * potential_.grid.step > kPi / 4.0) {
        std::ostringstream os;
        os << "x-step " << potential_.grid.step << " too coarse for k = " << k_text(k)
           << " (|k| h exceeds pi/4)";
        throw ResolutionError(os.str(), std::abs(k));
    }
}

std::size_t JostPair::slot(std::size_t j) const {
    auto it = std::lower_bound(stored.begin(), stored.end(), j);
    if (it == stored.end() || *it != j) throw InputError("x-node not stored in JostPair");
    return static_cast<std::size_t>(it - stored.begin());
}

// =============================================================================
// Real-k sweep
// =============================================================================

namespace {

struct SweepOut {
    JostPair* jost;
    bool plus;
};

template <int N>
void sweep_k(const JostIntegrator& integ, std::size_t ik, SweepOut out) {
    JostPair& J = *out.jost;
    const auto& pot = integ.potential();
    const int n = integ.n();
    const int p = pot.p;
    const double k = J.k_grid.node(ik);
    const std::size_t cells = integ.cells();
    const double h = pot.grid.step;
    const auto& gu = integ.gauss_u_flat();
    const auto& nu = integ.node_u_flat();

    Mat<N> psi = make<N>(n);
    psi.setIdentity();
    left_phase(psi, p, -pot.grid.start * k);
    Mat<N> sint = make<N>(n);

    std::vector<Mat<N>> cell_E;
    if (out.plus) cell_E.resize(cells);

    auto integrand = [&](std::size_t j) {
        Mat<N> f = view<N>(nu, j, n) * psi;
        left_phase(f, p, pot.grid.node(j) * k);
        return f;
    };
    std::size_t next = 0;
    auto store_minus = [&](std::size_t j) {
        while (next < J.stored.size() && J.stored[next] == j) {
            Mat<N> m = psi;
            right_phase(m, p, pot.grid.node(j) * k);
            J.m_minus[next][ik] = m;
            ++next;
        }
    };
    store_minus(0);
    sint += 0.5 * integrand(0);
    for (std::size_t j = 0; j < cells; ++j) {
        const Mat<N> E = magnus6<N>(gu, j, n, p, h, k).exp();
        psi = (E * psi).eval();
        if (out.plus) cell_E[j] = E;
        sint += (j + 1 == cells ? 0.5 : 1.0) * integrand(j + 1);
        store_minus(j + 1);
    }
    sint *= h;
    sint.diagonal().array() += 1.0;
    const double xmax = pot.grid.node(cells);
    Mat<N> smatch = psi;
    left_phase(smatch, p, xmax * k);
    J.s_matching[ik] = smatch;
    J.s_integral[ik] = sint;

    if (!out.plus) return;
    Mat<N> psip = make<N>(n);
    psip.setIdentity();
    left_phase(psip, p, -xmax * k);
    std::size_t slot = J.stored.size();
    auto store_plus = [&](std::size_t j) {
        while (slot > 0 && J.stored[slot - 1] == j) {
            --slot;
            Mat<N> m = psip;
            right_phase(m, p, pot.grid.node(j) * k);
            J.m_plus[slot][ik] = m;
        }
    };
    store_plus(cells);
    for (std::size_t j = cells; j-- > 0;) {
        psip = cell_E[j].partialPivLu().solve(psip).eval();
        store_plus(j);
    }
}

template <int N>
void sweep_all(const JostIntegrator& integ, SweepOut out) {
    parallel_for(out.jost->k_grid.count, [&](std::size_t ik) { sweep_k<N>(integ, ik, out); });
}

} // namespace

JostPair solve_jost(const PotentialField& potential, const Grid1D& k_grid, const JostOptions& options) {
    JostIntegrator integ(potential);
    integ.check_resolution(std::max(std::abs(k_grid.start), std::abs(k_grid.back())));
    const int n = integ.n();
    const std::size_t nx = potential.grid.count;

    JostPair J;
    J.x_grid = potential.grid;
    J.k_grid = k_grid;
    J.p = potential.p;
    J.q = potential.q;
    if (options.store_stride == 0) {
        J.stored = {0, nx - 1};
    } else {
        for (std::size_t j = 0; j < nx; j += options.store_stride) J.stored.push_back(j);
        if (J.stored.back() != nx - 1) J.stored.push_back(nx - 1);
    }
    J.m_minus.assign(J.stored.size(), MatrixSeries(n, n, k_grid.count));
    if (options.compute_plus) J.m_plus.assign(J.stored.size(), MatrixSeries(n, n, k_grid.count));
    J.s_integral = MatrixSeries(n, n, k_grid.count);
    J.s_matching = MatrixSeries(n, n, k_grid.count);

    SweepOut out{&J, options.compute_plus};
    switch (n) {
    case 2: sweep_all<2>(integ, out); break;
    case 3: sweep_all<3>(integ, out); break;
    case 4: sweep_all<4>(integ, out); break;
    default: sweep_all<Eigen::Dynamic>(integ, out); break;
    }
    return J;
}

// =============================================================================
// Scattering matrix and reflection coefficient
// =============================================================================

ScatteringData::ScatteringData(Grid1D k_grid, int p, int q, int sigma)
    : k_grid(k_grid), p(p), q(q), sigma(sigma), A(p, p, k_grid.count), B(p, q, k_grid.count),
      C(q, p, k_grid.count), D(q, q, k_grid.count) {}

BlockMatrix ScatteringData::S(std::size_t j) const {
    BlockMatrix s(p, q);
    s.m11() = A[j];
    s.m12() = B[j];
    s.m21() = C[j];
    s.m22() = D[j];
    return s;
}

void ScatteringData::set_S(std::size_t j, const RowMat& s) {
    A[j] = s.topLeftCorner(p, p);
    B[j] = s.topRightCorner(p, q);
    C[j] = s.bottomLeftCorner(q, p);
    D[j] = s.bottomRightCorner(q, q);
}

ScatteringData scattering_matrix(const JostPair& jost, const PotentialField& potential, double solver_tol) {
    if (!(jost.x_grid == potential.grid) || jost.p != potential.p || jost.q != potential.q)
        throw InputError("scattering_matrix: Jost data and potential use different grids");
    ScatteringData sd(jost.k_grid, jost.p, jost.q, potential.sigma);
    double gap = 0.0;
    std::size_t worst = 0;
    for (std::size_t j = 0; j < jost.k_grid.count; ++j) {
        const RowMat sm = jost.s_matching[j];
        const double d = (sm - RowMat(jost.s_integral[j])).norm();
        if (d > gap) {
            gap = d;
            worst = j;
        }
        sd.set_S(j, sm);
    }
    sd.consistency_gap = gap;
    if (gap > 10.0 * solver_tol) {
        std::ostringstream os;
        os << "integral and matching scattering matrices differ by " << gap << " at k = "
           << jost.k_grid.node(worst) << " (limit " << 10.0 * solver_tol << "); refine the x-grid";
        throw ConsistencyError(os.str(), gap);
    }
    return sd;
}

ScatteringData forward_scattering(const PotentialField& potential, const Grid1D& k_grid, double solver_tol) {
    JostOptions opt;
    opt.compute_plus = false;
    return scattering_matrix(solve_jost(potential, k_grid, opt), potential, solver_tol);
}

Reflection reflection_coefficient(const ScatteringData& sd) {
    const std::size_t nk = sd.k_grid.count;
    std::vector<double> detd(nk);
    double dmin = INFINITY;
    for (std::size_t j = 0; j < nk; ++j) {
        detd[j] = std::abs(RowMat(sd.D[j]).determinant());
        dmin = std::min(dmin, detd[j]);
    }
    if (dmin <= 1e-10) {
        std::size_t lo = nk;
        std::size_t hi = 0;
        for (std::size_t j = 0; j < nk; ++j) {
            if (detd[j] <= 1e-10) {
                lo = std::min(lo, j);
                hi = std::max(hi, j);
            }
        }
        const double klo = sd.k_grid.node(lo > 0 ? lo - 1 : lo);
        const double khi = sd.k_grid.node(hi + 1 < nk ? hi + 1 : hi);
        std::ostringstream os;
        os << "det D vanishes on the real grid in [" << klo << ", " << khi
           << "]; use the focusing contour path";
        throw SpectralSingularity(os.str(), klo, khi);
    }
    Reflection out;
    out.R = MatrixSeries(sd.p, sd.q, nk);
    for (std::size_t j = 0; j < nk; ++j) {
        const RowMat D = sd.D[j];
        const RowMat R = RowMat(sd.B[j]) * D.inverse();
        out.R[j] = R;
        const RowMat A = sd.A[j];
        if (std::abs(A.determinant()) > 1e-6) {
            const RowMat lhs = RowMat(sd.C[j]) * A.inverse();
            out.adjoint_residual = std::max(out.adjoint_residual,
                                            (lhs - static_cast<double>(sd.sigma) * R.adjoint()).norm());
        }
    }
    return out;
}

SymmetryReport symmetry_report(const ScatteringData& sd) {
    SymmetryReport rep;
    rep.min_abs_det_D = INFINITY;
    const RowMat s3 = sigma3(sd.p, sd.q);
    for (std::size_t j = 0; j < sd.k_grid.count; ++j) {
        const RowMat S = sd.S(j).entries();
        rep.det_residual = std::max(rep.det_residual, std::abs(S.determinant() - 1.0));
        const RowMat Si = S.inverse();
        const RowMat rhs = sd.sigma == 1 ? RowMat(s3 * S.adjoint() * s3) : RowMat(S.adjoint());
        rep.symmetry_residual = std::max(rep.symmetry_residual, (Si - rhs).norm());
        const RowMat A = sd.A[j];
        const RowMat B = sd.B[j];
        const RowMat C = sd.C[j];
        const RowMat D = sd.D[j];
        const double dd = std::abs(D.determinant());
        rep.min_abs_det_D = std::min(rep.min_abs_det_D, dd);
        if (sd.sigma == 1) {
            const double da = std::abs(A.determinant());
            const cplx bb = (RowMat::Identity(sd.p, sd.p) + B * B.adjoint()).determinant();
            const cplx cc = (RowMat::Identity(sd.q, sd.q) + C * C.adjoint()).determinant();
            rep.modulus_residual = std::max(rep.modulus_residual, std::abs(da * da - bb));
            rep.d_modulus_residual = std::max(rep.d_modulus_residual, std::abs(dd * dd - cc));
        }
    }
    return rep;
}

// =============================================================================
// Complex wavenumbers
// =============================================================================

UpperColumns upper_columns(const JostIntegrator& integ, cplx k, std::size_t x_node) {
    if (k.imag() < 0.0) throw InputError("upper_columns: k must lie in the closed upper half-plane");
    integ.check_resolution(k);
    const auto& pot = integ.potential();
    const int p = pot.p;
    const int n = integ.n();
    const std::size_t cells = integ.cells();
    if (x_node > cells) throw InputError("upper_columns: x-node outside grid");
    const double h = pot.grid.step;
    const cplx fwd = std::exp(kI * h * k);

    UpperColumns out;
    RowMat m1 = RowMat::Zero(n, p);
    m1.topRows(p).setIdentity();
    for (std::size_t j = 0; j < cells; ++j) {
        if (j == x_node) out.m1_minus = m1;
        m1 = (integ.cell_propagator(j, k) * m1 * fwd).eval();
    }
    if (x_node == cells) out.m1_minus = m1;
    out.A = m1.topRows(p);

    RowMat m2 = RowMat::Zero(n, n - p);
    m2.bottomRows(n - p).setIdentity();
    for (std::size_t j = cells; j-- > x_node;) {
        m2 = (integ.cell_propagator(j, k, true) * m2 * fwd).eval();
    }
    out.m2_plus = m2;
    return out;
}

RowMat lower_D(const JostIntegrator& integ, cplx k) {
    if (k.imag() > 0.0) throw InputError("lower_D: k must lie in the closed lower half-plane");
    integ.check_resolution(k);
    const auto& pot = integ.potential();
    const int p = pot.p;
    const int n = integ.n();
    const cplx fwd = std::exp(-kI * pot.grid.step * k);
    RowMat m2 = RowMat::Zero(n, n - p);
    m2.bottomRows(n - p).setIdentity();
    for (std::size_t j = 0; j < integ.cells(); ++j) m2 = (integ.cell_propagator(j, k) * m2 * fwd).eval();
    return m2.bottomRows(n - p);
}

RowMat plus_at(const JostIntegrator& integ, double k, std::size_t x_node) {
    integ.check_resolution(k);
    const auto& pot = integ.potential();
    const int n = integ.n();
    const std::size_t cells = integ.cells();
    if (x_node > cells) throw InputError("plus_at: x-node outside grid");
    RowMat T = RowMat::Identity(n, n);
    for (std::size_t j = cells; j-- > x_node;) T = (T * integ.cell_propagator(j, k)).eval();
    RowMat m = T.inverse();
    const double d = pot.grid.node(cells) - pot.grid.node(x_node);
    m.leftCols(pot.p) *= std::exp(-kI * d * k);
    m.rightCols(n - pot.p) *= std::exp(kI * d * k);
    return m;
}

// =============================================================================
// Lipschitz probe
// =============================================================================

LipschitzResult lipschitz_probe(const std::vector<std::pair<PotentialField, PotentialField>>& pairs,
                                const Grid1D& k_grid, double solver_tol) {
    LipschitzResult out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [q1, q2] = pairs[i];
        if (!(q1.grid == q2.grid)) throw InputError("lipschitz_probe: pair on different grids");
        MatrixSeries dq(q1.p, q1.q, q1.grid.count);
        for (std::size_t j = 0; j < q1.grid.count; ++j) dq[j] = q1.samples[j] - q2.samples[j];
        const double den = discrete_norms(dq, q1.grid).h11;
        double ratio = 0.0;
        if (den > 0.0) {
            const auto r1 = reflection_coefficient(forward_scattering(q1, k_grid, solver_tol)).R;
            const auto r2 = reflection_coefficient(forward_scattering(q2, k_grid, solver_tol)).R;
            MatrixSeries dr(q1.p, q1.q, k_grid.count);
            for (std::size_t j = 0; j < k_grid.count; ++j) dr[j] = r1[j] - r2[j];
            ratio = discrete_norms(dr, k_grid).h11 / den;
        }
        out.ratios.push_back(ratio);
        if (ratio > out.max_ratio) {
            out.max_ratio = ratio;
            out.argmax = i;
        }
    }
    return out;
}

} // namespace mnls
