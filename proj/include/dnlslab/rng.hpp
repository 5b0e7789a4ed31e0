#pragma once

#include <cmath>
#include <cstdint>

namespace dnlslab {

// SplitMix64. Hand-rolled so streams are bit-identical across platforms and
// stdlib versions (std::uniform_real_distribution is not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // log-uniform in [lo,hi], lo > 0
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

    int sign() { return (next_u64() & 1) ? 1 : -1; }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // standard normal (Box-Muller; consumes two uniforms)
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Derive an independent deterministic substream (for per-task RNGs in
    // worker pools; results must not depend on the thread count).
    Rng fork(std::uint64_t stream) const {
        Rng r(state_ ^ (0xd1342543de82ef95ULL * (stream + 1)));
        r.next_u64();
        return r;
    }

private:
    std::uint64_t state_;
};

}  // namespace dnlslab
