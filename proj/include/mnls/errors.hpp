#pragma once

#include <stdexcept>
#include <string>

namespace mnls {

/// Failure category; maps onto CLI exit codes 2 (input), 3 (solver), 1 (tolerance).
enum class ErrorKind { Input, Solver, Tolerance };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct InputError : Error {
    explicit InputError(const std::string& w) : Error(ErrorKind::Input, w) {}
};

/// Grid or profile does not cover what the computation needs.
struct WindowError : Error {
    explicit WindowError(const std::string& w) : Error(ErrorKind::Input, w) {}
};

/// Step too coarse for the requested wavenumbers.
struct ResolutionError : Error {
    ResolutionError(const std::string& w, double k) : Error(ErrorKind::Input, w), k(k) {}
    double k;
};

struct FormatError : Error {
    explicit FormatError(const std::string& w) : Error(ErrorKind::Input, w) {}
};

struct SolverError : Error {
    SolverError(const std::string& w, double residual = 0.0)
        : Error(ErrorKind::Solver, w), residual(residual) {}
    double residual;
};

/// The two scattering-matrix formulas disagree.
struct ConsistencyError : Error {
    ConsistencyError(const std::string& w, double gap) : Error(ErrorKind::Solver, w), gap(gap) {}
    double gap;
};

/// det D nearly vanishes on the real grid; carries the offending k-interval.
struct SpectralSingularity : Error {
    SpectralSingularity(const std::string& w, double k_lo, double k_hi)
        : Error(ErrorKind::Solver, w), k_lo(k_lo), k_hi(k_hi) {}
    double k_lo;
    double k_hi;
};

/// Input data violate a structural property (e.g. positive definiteness of v + v†).
struct DataError : Error {
    explicit DataError(const std::string& w) : Error(ErrorKind::Solver, w) {}
};

struct ContourError : Error {
    explicit ContourError(const std::string& w) : Error(ErrorKind::Solver, w) {}
};

struct ToleranceFailure : Error {
    explicit ToleranceFailure(const std::string& w) : Error(ErrorKind::Tolerance, w) {}
};

[[nodiscard]] inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Input: return 2;
    case ErrorKind::Solver: return 3;
    case ErrorKind::Tolerance: return 1;
    }
    return 3;
}

} // namespace mnls
