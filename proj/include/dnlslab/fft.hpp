#pragma once

#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace dnlslab {
namespace fft {

// Shared FFTW plans per size. Plans are created with FFTW_ESTIMATE (timing-free,
// so planning is deterministic) and FFTW_UNALIGNED (so they can execute on any
// caller buffer via fftw_execute_dft). Plan creation is serialized; execution on
// distinct buffers is thread-safe per FFTW's documentation.
class Engine {
public:
    static Engine& instance() {
        static Engine e;
        return e;
    }

    void forward(const std::complex<double>* in, std::complex<double>* out, int n) { execute(n, in, out, true); }
    void backward(const std::complex<double>* in, std::complex<double>* out, int n) { execute(n, in, out, false); }

private:
    struct Plans {
        fftw_plan fwd = nullptr;
        fftw_plan bwd = nullptr;
        std::vector<std::complex<double>> scratch_in, scratch_out;
    };

    Engine() = default;
    ~Engine() {
        for (auto& [n, p] : plans_) {
            fftw_destroy_plan(p.fwd);
            fftw_destroy_plan(p.bwd);
        }
    }
    Engine(const Engine&) = delete;

    Plans& plans_for(int n) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        Plans p;
        p.scratch_in.resize(n);
        p.scratch_out.resize(n);
        auto* si = reinterpret_cast<fftw_complex*>(p.scratch_in.data());
        auto* so = reinterpret_cast<fftw_complex*>(p.scratch_out.data());
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        p.fwd = fftw_plan_dft_1d(n, si, so, FFTW_FORWARD, flags);
        p.bwd = fftw_plan_dft_1d(n, si, so, FFTW_BACKWARD, flags);
        if (!p.fwd || !p.bwd) throw std::runtime_error("fft: planning failed");
        return plans_.emplace(n, std::move(p)).first->second;
    }

    void execute(int n, const std::complex<double>* in, std::complex<double>* out, bool fwd) {
        if (n <= 0) throw std::invalid_argument("fft: size must be positive");
        Plans& p = plans_for(n);
        auto* pi = const_cast<fftw_complex*>(reinterpret_cast<const fftw_complex*>(in));
        auto* po = reinterpret_cast<fftw_complex*>(out);
        fftw_execute_dft(fwd ? p.fwd : p.bwd, pi, po);
    }

    std::mutex mutex_;
    std::map<int, Plans> plans_;
};

// out[k] = sum_j in[j] e^{-2pi i jk/n}
inline void dft(const std::vector<std::complex<double>>& in, std::vector<std::complex<double>>& out) {
    out.resize(in.size());
    Engine::instance().forward(in.data(), out.data(), static_cast<int>(in.size()));
}

// out[j] = sum_k in[k] e^{+2pi i jk/n}   (unnormalized)
inline void idft(const std::vector<std::complex<double>>& in, std::vector<std::complex<double>>& out) {
    out.resize(in.size());
    Engine::instance().backward(in.data(), out.data(), static_cast<int>(in.size()));
}

// Smallest even 5-smooth integer >= n; FFTW is fast on these.
inline int good_size(int n) {
    auto smooth = [](int m) {
        for (int p : {2, 3, 5})
            while (m % p == 0) m /= p;
        return m == 1;
    };
    int m = n + (n % 2);
    while (!(m % 2 == 0 && smooth(m))) m += 2;
    return m;
}

}  // namespace fft
}  // namespace dnlslab
