#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dnlslab/fft.hpp"

namespace dnlslab {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Periodic box [-L/2, L/2) with M equispaced nodes, standing in for the line.
// Frequencies xi_k = 2*pi*k/L, k in {-M/2, ..., M/2-1}; array index j carries
// mode k = j < M/2 ? j : j - M (FFTW layout).
struct SpectralGrid {
    int modes = 0;
    double length = 0.0;

    double spacing() const { return length / modes; }
    double x_min() const { return -0.5 * length; }
    double node(int j) const { return x_min() + j * spacing(); }
    int mode_of_index(int j) const { return j < modes / 2 ? j : j - modes; }
    int index_of_mode(int k) const { return k >= 0 ? k : k + modes; }
    double freq_of_mode(int k) const { return 2.0 * kPi * k / length; }
    double freq(int j) const { return freq_of_mode(mode_of_index(j)); }
    double max_freq() const { return freq_of_mode(modes / 2 - 1); }

    friend bool operator==(const SpectralGrid& a, const SpectralGrid& b) {
        return a.modes == b.modes && a.length == b.length;
    }
    friend bool operator!=(const SpectralGrid& a, const SpectralGrid& b) { return !(a == b); }
};

inline SpectralGrid make_grid(int modes, double length) {
    if (modes < 8) throw std::invalid_argument("make_grid: need at least 8 modes");
    if (modes % 2 != 0) throw std::invalid_argument("make_grid: mode count must be even");
    if (!(length > 0.0) || !std::isfinite(length)) throw std::invalid_argument("make_grid: length must be positive");
    return SpectralGrid{modes, length};
}

enum class Rep { physical, fourier };

// Complex state on a grid, in either representation. Value type; all
// operations return new fields.
struct Field {
    SpectralGrid grid;
    std::vector<cplx> values;
    Rep rep = Rep::physical;

    Field() = default;
    Field(const SpectralGrid& g, std::vector<cplx> v, Rep r) : grid(g), values(std::move(v)), rep(r) {
        if (static_cast<int>(values.size()) != grid.modes)
            throw std::invalid_argument("Field: value count does not match grid");
    }

    static Field zero(const SpectralGrid& g, Rep r = Rep::physical) {
        return Field(g, std::vector<cplx>(g.modes, cplx(0.0, 0.0)), r);
    }
    // sample f(x) at the nodes
    static Field from_function(const SpectralGrid& g, const std::function<cplx(double)>& f) {
        std::vector<cplx> v(g.modes);
        for (int j = 0; j < g.modes; ++j) v[j] = f(g.node(j));
        return Field(g, std::move(v), Rep::physical);
    }

    bool finite() const {
        for (const cplx& z : values)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        return true;
    }
};

// Discrete analogue of the paper's transform: hat(f)(xi_k) = h * sum_j f(x_j) e^{-i xi_k x_j},
// inverse f(x_j) = (1/L) * sum_k hat(f)(xi_k) e^{+i xi_k x_j}. With x_min = -L/2 the
// node-offset phase is exactly (-1)^k. This scaling makes Lambda_2(1; f) = ||f||_2^2
// hold without stray 2*pi factors.
inline Field transform(const Field& f, Rep direction) {
    if (!f.finite()) throw std::invalid_argument("transform: non-finite values");
    if (f.rep == direction) throw std::invalid_argument("transform: field already in requested representation");
    const int M = f.grid.modes;
    std::vector<cplx> out(M);
    if (direction == Rep::fourier) {
        fft::dft(f.values, out);
        const double h = f.grid.spacing();
        for (int j = 0; j < M; ++j) out[j] *= (j % 2 == 0) ? h : -h;
        return Field(f.grid, std::move(out), Rep::fourier);
    }
    std::vector<cplx> tmp(M);
    for (int j = 0; j < M; ++j) tmp[j] = (j % 2 == 0) ? f.values[j] : -f.values[j];
    fft::idft(tmp, out);
    const double inv_l = 1.0 / f.grid.length;
    for (cplx& z : out) z *= inv_l;
    return Field(f.grid, std::move(out), Rep::physical);
}

inline Field to_fourier(const Field& f) { return f.rep == Rep::fourier ? f : transform(f, Rep::fourier); }
inline Field to_physical(const Field& f) { return f.rep == Rep::physical ? f : transform(f, Rep::physical); }

// Fourier multiplier operator: symbol evaluated at the grid frequencies.
struct Multiplier {
    std::function<cplx(double)> symbol;
    std::string label;

    cplx operator()(double xi) const { return symbol(xi); }
};

inline Multiplier operator*(const Multiplier& a, const Multiplier& b) {
    return Multiplier{[sa = a.symbol, sb = b.symbol](double xi) { return sa(xi) * sb(xi); },
                      a.label + "*" + b.label};
}

inline Multiplier identity_multiplier() {
    return Multiplier{[](double) { return cplx(1.0, 0.0); }, "1"};
}

// d/dx, symbol i*xi
inline Multiplier derivative_multiplier() {
    return Multiplier{[](double xi) { return cplx(0.0, xi); }, "d/dx"};
}

// <xi>^s = (1+|xi|)^s
inline Multiplier weight_multiplier(double s) {
    return Multiplier{[s](double xi) { return cplx(std::pow(1.0 + std::abs(xi), s), 0.0); },
                      "<xi>^" + std::to_string(s)};
}

// The I-operator symbol m: 1 on |xi|<=N, (|xi|/N)^(s-1) on |xi|>=2N, and on
// (N,2N) the explicit C^2 bridge m = exp(q(log2(|xi|/N)) * (s-1) * ln(|xi|/N))
// with q the quintic smoothstep. Even, monotone nonincreasing, values in (0,1].
inline double i_multiplier_value(double xi, double N, double s) {
    const double a = std::abs(xi) / N;
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return std::pow(a, s - 1.0);
    const double t = std::log2(a);
    const double q = ((6.0 * t - 15.0) * t + 10.0) * t * t * t;
    return std::exp(q * (s - 1.0) * std::log(a));
}

inline Multiplier i_multiplier(double N, double s) {
    if (!(N >= 1.0)) throw std::invalid_argument("i_multiplier: need N >= 1");
    if (!(s > 2.0 / 3.0 && s < 1.0)) throw std::invalid_argument("i_multiplier: need s in (2/3, 1)");
    return Multiplier{[N, s](double xi) { return cplx(i_multiplier_value(xi, N, s), 0.0); },
                      "I[N=" + std::to_string(N) + ",s=" + std::to_string(s) + "]"};
}

// Pointwise multiplication of the spectrum by symbol(xi_k). The Nyquist mode
// -M/2 has no positive partner and is zeroed afterwards.
inline Field apply_multiplier(const Multiplier& mult, const Field& f) {
    Field g = to_fourier(f);
    const int M = g.grid.modes;
    for (int j = 0; j < M; ++j) {
        cplx s = mult.symbol(g.grid.freq(j));
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw std::runtime_error("apply_multiplier: symbol not finite at xi=" + std::to_string(g.grid.freq(j)));
        g.values[j] *= s;
    }
    g.values[g.grid.index_of_mode(-M / 2)] = 0.0;
    return f.rep == Rep::physical ? to_physical(g) : g;
}

inline double box_integral_abs_pow(const Field& f, int p) {
    const Field g = to_physical(f);
    double acc = 0.0;
    for (const cplx& z : g.values) acc += std::pow(std::abs(z), p);
    return acc * g.grid.spacing();
}

// L^p norm by rectangle quadrature over the box; p = 0 stands for infinity
// (grid max, a lower bound on the true sup).
inline double lebesgue_norm(const Field& f, int p) {
    if (!f.finite()) throw std::invalid_argument("lebesgue_norm: non-finite values");
    if (p == 0) {
        const Field g = to_physical(f);
        double m = 0.0;
        for (const cplx& z : g.values) m = std::max(m, std::abs(z));
        return m;
    }
    if (p != 2 && p != 4 && p != 6) throw std::invalid_argument("lebesgue_norm: p must be 2, 4, 6 or 0 (=inf)");
    return std::pow(box_integral_abs_pow(f, p), 1.0 / p);
}

inline double linf_norm(const Field& f) { return lebesgue_norm(f, 0); }

// ||<xi>^s fhat||_2 in the chosen convention
inline double sobolev_norm(const Field& f, double s) {
    return lebesgue_norm(apply_multiplier(weight_multiplier(s), f), 2);
}

inline double mass(const Field& f) {
    double n2 = lebesgue_norm(f, 2);
    return n2 * n2;
}

// Spectral zero-padding to a finer grid over the same box (hat values are
// grid-independent in this convention). Drops the source Nyquist mode.
inline Field upsample(const Field& f, int big_modes) {
    const Field g = to_fourier(f);
    const int M = g.grid.modes;
    if (big_modes < M) throw std::invalid_argument("upsample: target grid smaller than source");
    SpectralGrid big{big_modes, g.grid.length};
    std::vector<cplx> v(big_modes, cplx(0.0, 0.0));
    for (int k = -M / 2 + 1; k < M / 2; ++k) v[big.index_of_mode(k)] = g.values[g.grid.index_of_mode(k)];
    Field out(big, std::move(v), Rep::fourier);
    return f.rep == Rep::physical ? to_physical(out) : out;
}

// Spectral truncation back to a coarser grid (modes outside it are discarded).
inline Field downsample(const Field& f, const SpectralGrid& small) {
    const Field g = to_fourier(f);
    if (small.modes > g.grid.modes) throw std::invalid_argument("downsample: target grid larger than source");
    if (small.length != g.grid.length) throw std::invalid_argument("downsample: box length mismatch");
    std::vector<cplx> v(small.modes, cplx(0.0, 0.0));
    for (int k = -small.modes / 2 + 1; k < small.modes / 2; ++k)
        v[small.index_of_mode(k)] = g.values[g.grid.index_of_mode(k)];
    Field out(small, std::move(v), Rep::fourier);
    return f.rep == Rep::physical ? to_physical(out) : out;
}

// Pointwise product of 2..5 fields, computed on a zero-padded grid of
// ceil((d+1)/2) times the modes so the truncated result is alias-free.
inline Field dealiased_product(const std::vector<Field>& fields) {
    if (fields.size() < 2 || fields.size() > 5)
        throw std::invalid_argument("dealiased_product: need 2 to 5 fields");
    const SpectralGrid& g = fields.front().grid;
    for (const Field& f : fields)
        if (f.grid != g) throw std::invalid_argument("dealiased_product: mismatched grids");
    const int d = static_cast<int>(fields.size());
    const int big = fft::good_size(((d + 1) / 2 + (d + 1) % 2) * g.modes);
    Field prod = Field::zero(SpectralGrid{big, g.length});
    std::fill(prod.values.begin(), prod.values.end(), cplx(1.0, 0.0));
    for (const Field& f : fields) {
        Field up = to_physical(upsample(f, big));
        for (int j = 0; j < big; ++j) prod.values[j] *= up.values[j];
    }
    return to_physical(downsample(prod, g));
}

inline Field conj_field(const Field& f) {
    Field g = to_physical(f);
    for (cplx& z : g.values) z = std::conj(z);
    return g;
}

inline Field operator+(const Field& a, const Field& b) {
    if (a.grid != b.grid || a.rep != b.rep) throw std::invalid_argument("Field+: mismatch");
    Field out = a;
    for (int j = 0; j < a.grid.modes; ++j) out.values[j] += b.values[j];
    return out;
}
inline Field operator-(const Field& a, const Field& b) {
    if (a.grid != b.grid || a.rep != b.rep) throw std::invalid_argument("Field-: mismatch");
    Field out = a;
    for (int j = 0; j < a.grid.modes; ++j) out.values[j] -= b.values[j];
    return out;
}
inline Field operator*(const cplx& c, const Field& a) {
    Field out = a;
    for (cplx& z : out.values) z *= c;
    return out;
}

inline cplx box_integral(const Field& f) {
    const Field g = to_physical(f);
    cplx acc(0.0, 0.0);
    for (const cplx& z : g.values) acc += z;
    return acc * g.grid.spacing();
}

// int |f|^6 computed alias-free: pointwise on a 4x zero-padded grid, where the
// rectangle rule is exact for the degree-6 product of band-limited inputs.
inline double sextic_integral(const Field& f) {
    const Field up = to_physical(upsample(f, fft::good_size(4 * f.grid.modes)));
    double acc = 0.0;
    for (const cplx& z : up.values) acc += std::pow(std::norm(z), 3);
    return acc * up.grid.spacing();
}

// F(x_j) = int_{x_min}^{x_j} |f|^2 dy via the spectral antiderivative of
// (|f|^2 - mean) plus the exact linear ramp mean*(x - x_min). F at the right
// edge equals ||f||_2^2 by construction.
inline std::vector<double> cumulative_abs2_integral(const Field& f) {
    const Field g = to_physical(f);
    const int M = g.grid.modes;
    std::vector<cplx> rho(M);
    for (int j = 0; j < M; ++j) rho[j] = cplx(std::norm(g.values[j]), 0.0);
    Field rho_hat = to_fourier(Field(g.grid, std::move(rho), Rep::physical));
    const double mean = rho_hat.values[0].real() / g.grid.length;
    Field anti = rho_hat;
    anti.values[0] = 0.0;
    for (int j = 1; j < M; ++j) {
        double xi_j = g.grid.freq(j);
        anti.values[j] = (j == M / 2) ? cplx(0.0, 0.0) : anti.values[j] / cplx(0.0, xi_j);
    }
    Field a = to_physical(anti);
    std::vector<double> F(M);
    for (int j = 0; j < M; ++j)
        F[j] = mean * (g.grid.node(j) - g.grid.x_min()) + a.values[j].real() - a.values[0].real();
    return F;
}

// trapezoid fallback for cross-checking the spectral antiderivative
inline std::vector<double> cumulative_abs2_integral_trapezoid(const Field& f) {
    const Field g = to_physical(f);
    const int M = g.grid.modes;
    const double h = g.grid.spacing();
    std::vector<double> F(M, 0.0);
    for (int j = 1; j < M; ++j)
        F[j] = F[j - 1] + 0.5 * h * (std::norm(g.values[j - 1]) + std::norm(g.values[j]));
    return F;
}

// g(x) = e^{i coeff F(x)} f(x) with F the cumulative |f|^2 integral; the
// modulus is preserved pointwise and phase_twist(.,c) inverts phase_twist(.,-c).
inline Field phase_twist(const Field& f, double coeff) {
    Field g = to_physical(f);
    std::vector<double> F = cumulative_abs2_integral(g);
    for (int j = 0; j < g.grid.modes; ++j)
        g.values[j] *= std::exp(cplx(0.0, coeff * F[j]));
    return g;
}

// Relative |f|^2 mass in the outer `fraction` of the box on each side.
inline double relative_tail_mass(const Field& f, double fraction = 1.0 / 16.0) {
    const Field g = to_physical(f);
    const int M = g.grid.modes;
    const int w = std::max(1, static_cast<int>(fraction * M));
    double tail = 0.0, total = 0.0;
    for (int j = 0; j < M; ++j) {
        double a = std::norm(g.values[j]);
        total += a;
        if (j < w || j >= M - w) tail += a;
    }
    return total > 0.0 ? tail / total : 0.0;
}

}  // namespace dnlslab
