#include "mnls/pde.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

#include "mnls/fft.hpp"

namespace mnls {

RowMat nonlinear_step(const RowMat& Q, double dt, int sigma) {
    const double a = -2.0 * static_cast<double>(sigma) * dt;
    if (Q.rows() == 1) return std::exp(kI * (a * Q.squaredNorm())) * Q;
    const RowMat H = Q * Q.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(H);
    const Eigen::VectorXcd phase = (kI * a * eig.eigenvalues().cast<cplx>()).array().exp();
    const Eigen::MatrixXcd& V = eig.eigenvectors();
    return RowMat(V * phase.asDiagonal() * V.adjoint()) * Q;
}

namespace {

/// Component-major copy of the samples: comps[c * n + j] for entry c = r * q + s.
class Components {
public:
    explicit Components(const PotentialField& f)
        : p_(f.p), q_(f.q), n_(f.grid.count), data_(static_cast<std::size_t>(f.p * f.q) * f.grid.count) {
        for (std::size_t j = 0; j < n_; ++j)
            for (int r = 0; r < p_; ++r)
                for (int s = 0; s < q_; ++s) data_[index(r, s) * n_ + j] = f.samples[j](r, s);
    }

    void write(PotentialField& f) const {
        for (std::size_t j = 0; j < n_; ++j)
            for (int r = 0; r < p_; ++r)
                for (int s = 0; s < q_; ++s) f.samples[j](r, s) = data_[index(r, s) * n_ + j];
    }

    void multiply(const std::vector<cplx>& mult) {
        const double scale = 1.0 / static_cast<double>(n_);
        for (std::size_t c = 0; c < components(); ++c) {
            cplx* v = data_.data() + c * n_;
            fft_forward(v, v, n_);
            for (std::size_t m = 0; m < n_; ++m) v[m] *= mult[m] * scale;
            fft_backward(v, v, n_);
        }
    }

    void nonlinear(double dt, int sigma) {
        RowMat Q(p_, q_);
        for (std::size_t j = 0; j < n_; ++j) {
            for (int r = 0; r < p_; ++r)
                for (int s = 0; s < q_; ++s) Q(r, s) = data_[index(r, s) * n_ + j];
            const RowMat out = nonlinear_step(Q, dt, sigma);
            for (int r = 0; r < p_; ++r)
                for (int s = 0; s < q_; ++s) data_[index(r, s) * n_ + j] = out(r, s);
        }
    }

    [[nodiscard]] double sum_sq() const {
        double acc = 0.0;
        for (const auto& z : data_) acc += std::norm(z);
        return acc;
    }

private:
    [[nodiscard]] std::size_t index(int r, int s) const { return static_cast<std::size_t>(r * q_ + s); }
    [[nodiscard]] std::size_t components() const { return static_cast<std::size_t>(p_ * q_); }

    int p_;
    int q_;
    std::size_t n_;
    std::vector<cplx> data_;
};

std::vector<cplx> multiplier(const Grid1D& grid, double dt) {
    const std::size_t n = grid.count;
    std::vector<cplx> out(n);
    const double dxi = 2.0 * kPi / grid.length();
    for (std::size_t m = 0; m < n; ++m) {
        const double xi = dxi * static_cast<double>(fft_index(m, n));
        out[m] = std::exp(-kI * (xi * xi * dt));
    }
    return out;
}

std::size_t step_count(double T, double dt) {
    if (!(dt > 0.0)) throw InputError("propagate: dt must be positive");
    const double ratio = std::abs(T) / dt;
    const double steps = std::round(ratio);
    if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, steps))
        throw InputError("propagate: T/dt is not an integer");
    return static_cast<std::size_t>(steps);
}

PotentialField strip(const PotentialField& f) {
    PotentialField out = f;
    out.profile = {};
    return out;
}

} // namespace

PotentialField linear_step(const PotentialField& field, double dt) {
    field.grid.require_power_of_two("linear_step");
    PotentialField out = strip(field);
    Components c(field);
    c.multiply(multiplier(field.grid, dt));
    c.write(out);
    return out;
}

double l2_norm(const PotentialField& field) {
    double acc = 0.0;
    for (std::size_t j = 0; j < field.grid.count; ++j) acc += RowMat(field.samples[j]).squaredNorm();
    return std::sqrt(field.grid.step * acc);
}

PotentialField propagate(const PotentialField& field, double T, double dt, ConservationLog* log) {
    field.grid.require_power_of_two("propagate");
    const std::size_t steps = step_count(T, dt);
    const double h = T < 0.0 ? -dt : dt;
    PotentialField out = strip(field);
    Components c(field);
    const double n0 = std::sqrt(c.sum_sq());
    double drift = 0.0;
    if (steps > 0) {
        const auto half = multiplier(field.grid, 0.5 * h);
        const auto full = multiplier(field.grid, h);
        c.multiply(half);
        for (std::size_t s = 0; s < steps; ++s) {
            c.nonlinear(h, field.sigma);
            c.multiply(s + 1 == steps ? half : full);
            if (n0 > 0.0) drift = std::max(drift, std::abs(std::sqrt(c.sum_sq()) - n0) / n0);
        }
    }
    c.write(out);
    if (log) {
        if (log->steps == 0) log->l2_initial = l2_norm(field);
        log->steps += steps;
        log->l2_final = l2_norm(out);
        log->max_drift = std::max(log->max_drift, drift);
        log->stability_warning = log->stability_warning || drift > kStabilityDrift;
    }
    return out;
}

void advance(SplitStepState& state, double T, ConservationLog* log) {
    if (state.order != 2) throw InputError("advance: only Strang splitting (order 2) is available");
    state.field = propagate(state.field, T, state.dt, log);
    state.t += T;
}

std::vector<PotentialField> propagate_snapshots(const PotentialField& field, const std::vector<double>& times,
                                                double dt, ConservationLog* log) {
    std::vector<PotentialField> out;
    out.reserve(times.size());
    SplitStepState state{strip(field), 0.0, dt, 2};
    for (double t : times) {
        if (t < state.t - 1e-12) throw InputError("propagate_snapshots: times must be ascending");
        advance(state, t - state.t, log);
        out.push_back(state.field);
    }
    return out;
}

} // namespace mnls
