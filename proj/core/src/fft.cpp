#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace psd::detail {
namespace {

// Planner calls are not thread-safe in FFTW; execution of an existing plan is.
// ESTIMATE + UNALIGNED keeps the chosen codelets independent of the buffer
// address, so repeated runs are bit-identical.
class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(int n, int sign) {
        std::lock_guard lock(mu_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        fftw_complex* buf = fftw_alloc_complex(static_cast<size_t>(n));
        fftw_plan p = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buf);
        plans_.emplace(key, p);
        return p;
    }

private:
    std::mutex mu_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

void run(Eigen::VectorXcd& v, int sign) {
    if (v.size() == 0) return;
    fftw_plan p = cache().get(static_cast<int>(v.size()), sign);
    auto* data = reinterpret_cast<fftw_complex*>(v.data());
    fftw_execute_dft(p, data, data);
}

}  // namespace

void fft_forward(Eigen::VectorXcd& v) { run(v, FFTW_FORWARD); }
void fft_inverse(Eigen::VectorXcd& v) { run(v, FFTW_BACKWARD); }

}  // namespace psd::detail
