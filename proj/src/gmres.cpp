#include "mnls/gmres.hpp"

#include <unsupported/Eigen/IterativeSolvers>

#include <cmath>

namespace mnls {
class MatrixFreeOperator;
}

namespace Eigen::internal {
template <>
struct traits<mnls::MatrixFreeOperator> : public Eigen::internal::traits<Eigen::SparseMatrix<std::complex<double>>> {};
} // namespace Eigen::internal

namespace mnls {

class MatrixFreeOperator : public Eigen::EigenBase<MatrixFreeOperator> {
public:
    using Scalar = cplx;
    using RealScalar = double;
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

    MatrixFreeOperator(const ApplyFn& f, Eigen::Index n) : f_(&f), n_(n) {}

    [[nodiscard]] Eigen::Index rows() const { return n_; }
    [[nodiscard]] Eigen::Index cols() const { return n_; }

    template <typename Rhs>
    Eigen::Product<MatrixFreeOperator, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
        return Eigen::Product<MatrixFreeOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
    }

    void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const { (*f_)(x, y); }

private:
    const ApplyFn* f_;
    Eigen::Index n_;
};

} // namespace mnls

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<mnls::MatrixFreeOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<mnls::MatrixFreeOperator, Rhs,
                                generic_product_impl<mnls::MatrixFreeOperator, Rhs>> {
    using Scalar = typename Product<mnls::MatrixFreeOperator, Rhs>::Scalar;

    template <typename Dest>
    static void scaleAndAddTo(Dest& dst, const mnls::MatrixFreeOperator& lhs, const Rhs& rhs, const Scalar& alpha) {
        Eigen::VectorXcd x = rhs;
        Eigen::VectorXcd y(x.size());
        lhs.apply(x, y);
        dst += alpha * y;
    }
};
} // namespace Eigen::internal

namespace mnls {

GmresResult gmres_solve(const ApplyFn& apply, Eigen::Index size, const Eigen::VectorXcd& b,
                        const Eigen::VectorXcd& x0, double tol, int restart, int max_iterations) {
    MatrixFreeOperator op(apply, size);
    Eigen::GMRES<MatrixFreeOperator, Eigen::IdentityPreconditioner> solver;
    solver.compute(op);
    solver.set_restart(static_cast<int>(std::min<Eigen::Index>(restart, size)));
    solver.setMaxIterations(max_iterations);
    solver.setTolerance(tol);
    GmresResult out;
    if (x0.size() == size) out.x = solver.solveWithGuess(b, x0);
    else out.x = solver.solve(b);
    out.iterations = solver.iterations();
    Eigen::VectorXcd ax(size);
    apply(out.x, ax);
    const double bn = b.norm();
    out.residual = (b - ax).norm() / (bn > 0.0 ? bn : 1.0);
    out.converged = solver.info() == Eigen::Success || out.residual <= tol;
    return out;
}

double resolvent_norm_estimate(const ApplyFn& apply, const ApplyFn& apply_adjoint, Eigen::Index size, double tol,
                               int power_steps) {
    // Power iteration on (A A*)^-1: v <- A*^-1 A^-1 v.
    Eigen::VectorXcd v = Eigen::VectorXcd::Ones(size);
    v.normalize();
    double est = 0.0;
    for (int it = 0; it < power_steps; ++it) {
        const auto w = gmres_solve(apply, size, v, {}, tol).x;
        const auto u = gmres_solve(apply_adjoint, size, w, {}, tol).x;
        const double nu = u.norm();
        if (!(nu > 0.0)) break;
        const double next = std::sqrt(nu);
        v = u / nu;
        if (std::abs(next - est) <= 1e-6 * next) {
            est = next;
            break;
        }
        est = next;
    }
    return est;
}

} // namespace mnls
