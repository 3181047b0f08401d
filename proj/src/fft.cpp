#include "pmt/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace pmt::fft {

namespace {

std::mutex plan_mutex;
std::map<std::pair<Extents, int>, fftw_plan> plan_cache;

fftw_plan get_plan(const Extents& dims, int sign) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto key = std::make_pair(dims, sign);
    auto it = plan_cache.find(key);
    if (it != plan_cache.end()) return it->second;

    std::vector<int> n(dims.begin(), dims.end());
    // planning clobbers the buffer, so plan on a scratch array once
    std::int64_t size = flat_size(dims);
    fftw_complex* scratch = fftw_alloc_complex(static_cast<std::size_t>(size));
    fftw_plan p = fftw_plan_dft(static_cast<int>(n.size()), n.data(), scratch, scratch, sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    plan_cache.emplace(std::move(key), p);
    return p;
}

} // namespace

void forward(std::complex<double>* data, const Extents& dims) {
    fftw_plan p = get_plan(dims, FFTW_FORWARD);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data), reinterpret_cast<fftw_complex*>(data));
}

void inverse(std::complex<double>* data, const Extents& dims) {
    fftw_plan p = get_plan(dims, FFTW_BACKWARD);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data), reinterpret_cast<fftw_complex*>(data));
}

std::int64_t next_fast_size(std::int64_t n) {
    while (true) {
        std::int64_t m = n;
        for (int f : {2, 3, 5})
            while (m % f == 0) m /= f;
        if (m == 1) return n;
        ++n;
    }
}

} // namespace pmt::fft
