#include <catch2/catch_amalgamated.hpp>

#include "dnlslab/grid.hpp"
#include "dnlslab/rng.hpp"
#include "test_util.hpp"

using namespace dnlslab;
using namespace dnlslab::testutil;
using Catch::Approx;

TEST_CASE("make_grid frequencies and spacing") {
    SpectralGrid g = make_grid(8, 2.0 * kPi);
    std::vector<double> freqs;
    for (int j = 0; j < 8; ++j) freqs.push_back(g.freq(j));
    std::sort(freqs.begin(), freqs.end());
    for (int k = -4; k <= 3; ++k) CHECK(freqs[k + 4] == Approx(static_cast<double>(k)).margin(1e-15));

    SpectralGrid h = make_grid(256, 100.0);
    CHECK(h.spacing() == Approx(100.0 / 256));
    CHECK(h.spacing() * h.modes == 100.0);  // exact for power-of-two mode counts
    CHECK(h.freq_of_mode(1) == Approx(2.0 * kPi / 100.0));

    CHECK_THROWS_AS(make_grid(7, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(4, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(128, -1.0), std::invalid_argument);
}

TEST_CASE("transform: plane wave, zero field, round trip") {
    SpectralGrid g = make_grid(64, 2.0 * kPi);
    double xi1 = g.freq_of_mode(1);
    Field f = Field::from_function(g, [xi1](double x) { return std::exp(cplx(0.0, xi1 * x)); });
    Field fh = to_fourier(f);
    for (int j = 0; j < g.modes; ++j) {
        if (g.mode_of_index(j) == 1)
            CHECK(std::abs(fh.values[j] - cplx(g.length, 0.0)) < 1e-12 * g.length);
        else
            CHECK(std::abs(fh.values[j]) < 1e-12 * g.length);
    }

    Field z = Field::zero(g);
    CHECK(lebesgue_norm(to_fourier(z), 2) == 0.0);

    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Field r = random_field(g, rng);
        Field rt = to_physical(to_fourier(r));
        double num = 0.0, den = 0.0;
        for (int j = 0; j < g.modes; ++j) {
            num += std::norm(rt.values[j] - r.values[j]);
            den += std::norm(r.values[j]);
        }
        CHECK(std::sqrt(num) <= 1e-13 * std::sqrt(den));
    }

    CHECK_THROWS(transform(f, Rep::physical));  // already physical
}

TEST_CASE("discrete Plancherel in the Lambda convention") {
    SpectralGrid g = make_grid(128, 37.5);
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        Field f = random_field(g, rng);
        double m2 = mass(f);
        Field fh = to_fourier(f);
        double spec = 0.0;
        for (const cplx& z : fh.values) spec += std::norm(z);
        spec /= g.length;
        CHECK(std::abs(m2 - spec) <= 1e-12 * m2);
    }
}

TEST_CASE("apply_multiplier: derivative, identity, I above band") {
    SpectralGrid g = make_grid(64, 2.0 * kPi);
    double xi3 = g.freq_of_mode(3);
    Field f = Field::from_function(g, [xi3](double x) { return std::exp(cplx(0.0, xi3 * x)); });
    Field df = apply_multiplier(derivative_multiplier(), f);
    for (int j = 0; j < g.modes; ++j)
        CHECK(std::abs(df.values[j] - cplx(0.0, xi3) * f.values[j]) < 1e-12);

    Rng rng(3);
    Field r = random_field(g, rng);
    Field same = apply_multiplier(identity_multiplier(), r);
    for (int j = 0; j < g.modes; ++j) CHECK(std::abs(same.values[j] - r.values[j]) < 1e-13);

    // N above the grid band: m = 1 on every active mode
    Field sm = apply_multiplier(i_multiplier(2.0 * g.max_freq(), 0.75), r);
    for (int j = 0; j < g.modes; ++j) CHECK(std::abs(sm.values[j] - r.values[j]) <= 1e-14 * linf_norm(r));

    Multiplier bad{[](double xi) { return cplx(1.0 / (xi - xi), 0.0); }, "nan"};
    CHECK_THROWS(apply_multiplier(bad, r));
}

TEST_CASE("i_multiplier values, evenness, interpolation bracket, monotonicity") {
    const double N = 16.0, s = 0.75;
    Multiplier m = i_multiplier(N, s);
    CHECK(m(8.0).real() == 1.0);
    CHECK(m(16.0).real() == 1.0);
    CHECK(m(64.0).real() == Approx(std::pow(4.0, -0.25)).epsilon(1e-14));
    CHECK(m(64.0).real() == Approx(0.70710678118654752).epsilon(1e-12));

    Rng rng(5);
    double prev_xi = N, prev_m = 1.0;
    std::vector<double> xs;
    for (int i = 0; i < 1000; ++i) xs.push_back(rng.uniform(N, 2.0 * N));
    std::sort(xs.begin(), xs.end());
    for (double x : xs) {
        double v = m(x).real();
        CHECK(v <= 1.0);
        CHECK(v >= std::pow(x / N, s - 1.0) - 1e-15);
        CHECK(m(-x).real() == v);  // even
        CHECK(v <= prev_m + 1e-15);  // nonincreasing
        prev_m = v;
        prev_xi = x;
    }
    (void)prev_xi;
    // C^0 matching at the ends of the bridge
    CHECK(m(N * (1 + 1e-9)).real() == Approx(1.0).margin(1e-8));
    CHECK(m(2 * N * (1 - 1e-9)).real() == Approx(std::pow(2.0, s - 1.0)).margin(1e-8));
    CHECK_THROWS(i_multiplier(0.5, 0.75));
    CHECK_THROWS(i_multiplier(8.0, 0.5));
}

TEST_CASE("weight multiplier and sobolev norm") {
    CHECK(weight_multiplier(0.0)(5.0).real() == 1.0);
    CHECK(weight_multiplier(1.0)(3.0).real() == 4.0);
    CHECK(weight_multiplier(0.5)(8.0).real() == Approx(3.0));

    SpectralGrid g = make_grid(64, 4.0 * kPi);
    CHECK(sobolev_norm(Field::zero(g), 1.3) == 0.0);

    double xi2 = g.freq_of_mode(2);
    cplx c(0.7, -0.4);
    Field pw = Field::from_function(g, [xi2, c](double x) { return c * std::exp(cplx(0.0, xi2 * x)); });
    for (double s : {0.0, 0.75, 1.0, 2.0})
        CHECK(sobolev_norm(pw, s) ==
              Approx(std::abs(c) * std::sqrt(g.length) * std::pow(1.0 + xi2, s)).epsilon(1e-12));

    // Gaussian H^1 norm against the continuum quadrature oracle. The weight
    // (1+|xi|)^2 has a kink at xi = 0, so the frequency-lattice sum differs
    // from the line integral at O(L^-2); the smooth components (mass and
    // derivative term) match the continuum closed forms to 1e-10.
    SpectralGrid gg = make_grid(512, 100.0);
    Field gauss = Field::from_function(gg, [](double x) { return cplx(std::exp(-x * x), 0.0); });
    auto integrand = [](double xi) { return std::pow(1.0 + xi, 2) * kPi * std::exp(-xi * xi / 2.0); };
    int n = 40000;
    double hq = 60.0 / n, acc = integrand(0.0) + integrand(60.0);
    for (int i = 1; i < n; ++i) acc += integrand(i * hq) * (i % 2 ? 4.0 : 2.0);
    double oracle = std::sqrt(2.0 * (acc * hq / 3.0) / (2.0 * kPi));  // both half-lines
    CHECK(oracle == Approx(std::sqrt(std::sqrt(2.0 * kPi) + 2.0)).epsilon(1e-10));  // closed form
    CHECK(sobolev_norm(gauss, 1.0) == Approx(oracle).epsilon(5e-4));
    CHECK(lebesgue_norm(gauss, 2) == Approx(std::pow(kPi / 2.0, 0.25)).epsilon(1e-10));
    CHECK(lebesgue_norm(apply_multiplier(derivative_multiplier(), gauss), 2) ==
          Approx(std::sqrt(std::sqrt(kPi / 2.0))).epsilon(1e-10));
}

TEST_CASE("lebesgue norms") {
    SpectralGrid g = make_grid(128, 25.0);
    cplx c(0.3, 0.4);
    Field cf = Field::from_function(g, [c](double) { return c; });
    CHECK(lebesgue_norm(cf, 2) == Approx(0.5 * std::sqrt(25.0)).epsilon(1e-13));
    CHECK(linf_norm(cf) == Approx(0.5).epsilon(1e-13));

    SpectralGrid gg = make_grid(256, 60.0);
    Field gauss = Field::from_function(gg, [](double x) { return cplx(std::exp(-x * x), 0.0); });
    CHECK(lebesgue_norm(gauss, 6) == Approx(std::pow(std::sqrt(kPi / 6.0), 1.0 / 6.0)).epsilon(1e-8));
    CHECK(lebesgue_norm(gauss, 4) == Approx(std::pow(std::sqrt(kPi / 4.0), 0.25)).epsilon(1e-8));
    CHECK_THROWS_AS(lebesgue_norm(gauss, 3), std::invalid_argument);
}

TEST_CASE("multiplier composition") {
    SpectralGrid g = make_grid(64, 10.0);
    Rng rng(23);
    Field f = random_field(g, rng);
    Multiplier m1 = weight_multiplier(0.6);
    Multiplier m2 = i_multiplier(4.0, 0.8);
    Field a = apply_multiplier(m1, apply_multiplier(m2, f));
    Field b = apply_multiplier(m1 * m2, f);
    for (int j = 0; j < g.modes; ++j) CHECK(std::abs(a.values[j] - b.values[j]) <= 1e-13 * (1.0 + std::abs(b.values[j])));
}

TEST_CASE("dealiased product: plane waves, quintic power oracle, grid mismatch") {
    SpectralGrid g = make_grid(96, 2.0 * kPi);
    auto wave = [&](int k) {
        double xik = g.freq_of_mode(k);
        return Field::from_function(g, [xik](double x) { return std::exp(cplx(0.0, xik * x)); });
    };
    Field p = dealiased_product({wave(5), wave(-3)});
    Field ph = to_fourier(p);
    for (int j = 0; j < g.modes; ++j) {
        cplx expect = g.mode_of_index(j) == 2 ? cplx(g.length, 0.0) : cplx(0.0, 0.0);
        CHECK(std::abs(ph.values[j] - expect) < 1e-11 * g.length);
    }

    // quintic power of a band-limited field vs computation on an 8x grid
    Rng rng(9);
    Field f = random_field(g, rng, 1.0);
    Field trunc = Field::zero(g, Rep::fourier);
    Field fh = to_fourier(f);
    for (int k = -g.modes / 6; k <= g.modes / 6; ++k)
        trunc.values[g.index_of_mode(k)] = fh.values[g.index_of_mode(k)];
    Field base = to_physical(trunc);
    Field quint = dealiased_product({base, base, base, base, base});

    Field up = to_physical(upsample(base, 8 * g.modes));
    for (cplx& z : up.values) {
        cplx v = z;
        z = v * v * v * v * v;
    }
    Field oracle = to_physical(downsample(up, g));
    for (int j = 0; j < g.modes; ++j)
        CHECK(std::abs(quint.values[j] - oracle.values[j]) <= 1e-12 * (1.0 + linf_norm(oracle)));

    SpectralGrid other = make_grid(64, 2.0 * kPi);
    CHECK_THROWS_AS(dealiased_product({f, Field::zero(other)}), std::invalid_argument);
    CHECK_THROWS_AS(dealiased_product({f}), std::invalid_argument);
}

TEST_CASE("I-smoothing: contraction on H^1 and N^{1-s} gain from H^s") {
    SpectralGrid g = make_grid(256, 50.0);
    const double s = 0.75;
    Rng rng(31);
    double global_max_c = 0.0, global_min_c = 1e9;
    for (double N : {8.0, 16.0, 32.0, 64.0}) {
        Multiplier Iop = i_multiplier(N, s);
        double max_c = 0.0;
        for (int trial = 0; trial < 25; ++trial) {
            Field f = random_field(g, rng);
            Field If = apply_multiplier(Iop, f);
            double h1_if = sobolev_norm(If, 1.0);
            double h1_f = sobolev_norm(f, 1.0);
            CHECK(h1_if <= h1_f * (1.0 + 1e-12));
            double c = h1_if / (std::pow(N, 1.0 - s) * sobolev_norm(f, s));
            max_c = std::max(max_c, c);
        }
        CHECK(max_c < 1.5);
        global_max_c = std::max(global_max_c, max_c);
        global_min_c = std::min(global_min_c, max_c);
    }
    CHECK(global_max_c / global_min_c < 2.0);  // bounded across the N sweep
}

TEST_CASE("cumulative integral: spectral vs trapezoid, right-edge value") {
    SpectralGrid g = make_grid(256, 80.0);
    Field f = Field::from_function(g, [](double x) {
        return cplx(std::exp(-0.1 * x * x), 0.3 * std::exp(-0.2 * (x - 3) * (x - 3)));
    });
    auto F = cumulative_abs2_integral(f);
    auto Ft = cumulative_abs2_integral_trapezoid(f);
    // trapezoid is the O(h^2) cross-check of the spectral antiderivative
    const double tol = 0.05 * g.spacing() * g.spacing() * mass(f);
    for (int j = 0; j < g.modes; j += 7) CHECK(F[j] == Approx(Ft[j]).margin(tol));
    CHECK(F[g.modes - 1] == Approx(Ft[g.modes - 1]).margin(tol));
    CHECK(F.front() == 0.0);
    // monotone for |f|^2 >= 0 up to spectral ringing
    for (int j = 1; j < g.modes; ++j) CHECK(F[j] >= F[j - 1] - 1e-9);

    // refinement: trapezoid converges to the spectral answer at second order
    SpectralGrid g2 = make_grid(1024, 80.0);
    Field f2 = Field::from_function(g2, [](double x) {
        return cplx(std::exp(-0.1 * x * x), 0.3 * std::exp(-0.2 * (x - 3) * (x - 3)));
    });
    auto F2 = cumulative_abs2_integral(f2);
    auto Ft2 = cumulative_abs2_integral_trapezoid(f2);
    double err_coarse = 0.0, err_fine = 0.0;
    for (int j = 0; j < g.modes; ++j) err_coarse = std::max(err_coarse, std::abs(F[j] - Ft[j]));
    for (int j = 0; j < g2.modes; ++j) err_fine = std::max(err_fine, std::abs(F2[j] - Ft2[j]));
    CHECK(err_fine < err_coarse / 8.0);  // ~16x for O(h^2) at 4x refinement
}

TEST_CASE("phase twist preserves modulus and inverts") {
    SpectralGrid g = make_grid(128, 60.0);
    Rng rng(41);
    Field f = random_smooth_field(g, rng, 1.3);
    Field tw = phase_twist(f, -1.0);
    for (int j = 0; j < g.modes; ++j)
        CHECK(std::abs(std::abs(tw.values[j]) - std::abs(f.values[j])) <= 1e-14 * linf_norm(f));
    Field back = phase_twist(tw, 1.0);
    for (int j = 0; j < g.modes; ++j) CHECK(std::abs(back.values[j] - f.values[j]) <= 1e-12 * linf_norm(f));
}
