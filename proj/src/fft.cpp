#include "mnls/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace mnls {

namespace {

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        auto* a = fftw_alloc_complex(n);
        auto* b = fftw_alloc_complex(n);
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), a, b, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(a);
        fftw_free(b);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

void run(const std::complex<double>* in, std::complex<double>* out, std::size_t n, int sign) {
    fftw_plan plan = cache().get(n, sign);
    auto* src = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in));
    auto* dst = reinterpret_cast<fftw_complex*>(out);
    if (in == out) {
        std::vector<std::complex<double>> tmp(in, in + n);
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(tmp.data()), dst);
    } else {
        fftw_execute_dft(plan, src, dst);
    }
}

} // namespace

void fft_forward(const std::complex<double>* in, std::complex<double>* out, std::size_t n) {
    run(in, out, n, FFTW_FORWARD);
}

void fft_backward(const std::complex<double>* in, std::complex<double>* out, std::size_t n) {
    run(in, out, n, FFTW_BACKWARD);
}

} // namespace mnls
