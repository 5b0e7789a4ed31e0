#include <catch2/catch_amalgamated.hpp>

#include "dnlslab/conserved.hpp"
#include "dnlslab/derive.hpp"
#include "dnlslab/lambda.hpp"
#include "test_util.hpp"

using namespace dnlslab;
using namespace dnlslab::testutil;
using Catch::Approx;

namespace {

Field sparse_field(const SpectralGrid& g, Rng& rng, int max_abs_mode) {
    std::vector<cplx> hat(g.modes, cplx(0.0, 0.0));
    for (int k = -max_abs_mode; k <= max_abs_mode; ++k)
        hat[g.index_of_mode(k)] = cplx(rng.normal(), rng.normal());
    return to_physical(Field(g, std::move(hat), Rep::fourier));
}

// random separable symbol: per-slot powers and m-factors plus at most one
// pair node (with its complement rewriting exercised implicitly)
SymbolExpr random_separable_symbol(Rng& rng, int order) {
    SymbolExpr e = SymbolExpr::zero(order);
    int terms = 1 + static_cast<int>(rng.below(2));
    for (int t = 0; t < terms; ++t) {
        std::vector<LinearForm> polys;
        std::vector<MFactor> mfs;
        for (int j = 1; j <= order; ++j) {
            int pw = static_cast<int>(rng.below(3));
            if (pw == 1) polys.push_back(xi(j, order));
            if (rng.below(3) == 0) mfs.push_back(MFactor{xi(j, order), 1});
        }
        if (rng.below(2) == 0) {
            int a = 1 + static_cast<int>(rng.below(order));
            int b = 1 + static_cast<int>(rng.below(order));
            if (a != b) {
                LinearForm pair{std::vector<int>(order, 0)};
                pair.c[a - 1] = pair.c[b - 1] = 1;
                if (rng.below(2)) polys.push_back(pair);
                else mfs.push_back(MFactor{pair, 1});
            }
        }
        Coeff c = Coeff::i_power(Rational(static_cast<long long>(rng.below(9)) - 4, 1 + rng.below(3)),
                                 static_cast<int>(rng.below(4)));
        e.add_term(c, std::move(polys), std::move(mfs));
    }
    return e;
}

}  // namespace

TEST_CASE("direct_lambda reproduces the basic closed forms") {
    SpectralGrid g = make_grid(64, 21.0);
    Rng rng(1);
    SymbolExpr one2 = SymbolExpr::zero(2).add_term(Coeff(Rational(1)), {});
    for (int t = 0; t < 20; ++t) {
        Field f = random_field(g, rng);
        cplx v = direct_lambda(one2, {f, f}, alternating_pattern(2));
        CHECK(std::abs(v - cplx(mass(f), 0.0)) <= 1e-12 * mass(f));
    }

    SymbolExpr x1x2 = SymbolExpr::zero(2).add_term(Coeff(Rational(1)), {xi(1, 2), xi(2, 2)});
    Field f = random_field(g, rng);
    double dnorm = lebesgue_norm(apply_multiplier(derivative_multiplier(), f), 2);
    cplx v = direct_lambda(x1x2, {f, f}, alternating_pattern(2));
    CHECK(std::abs(v - cplx(-dnorm * dnorm, 0.0)) <= 1e-12 * dnorm * dnorm);

    cplx c(0.4, -0.2);
    Field cf = Field::from_function(g, [c](double) { return c; });
    SymbolExpr one4 = SymbolExpr::zero(4).add_term(Coeff(Rational(1)), {});
    cplx v4 = direct_lambda(one4, std::vector<Field>(4, cf), alternating_pattern(4));
    CHECK(std::abs(v4 - cplx(std::pow(std::abs(c), 4) * g.length, 0.0)) < 1e-12 * g.length);
}

TEST_CASE("cost bound is reported as an error") {
    SpectralGrid g = make_grid(512, 100.0);
    Rng rng(3);
    Field f = random_field(g, rng);
    SymbolExpr one8 = SymbolExpr::zero(8).add_term(Coeff(Rational(1)), {});
    LambdaContext ctx;
    ctx.term_budget = 1e6;
    CHECK_THROWS_AS(direct_lambda(one8, std::vector<Field>(8, f), alternating_pattern(8), ctx),
                    std::runtime_error);
}

TEST_CASE("compile_plan: flat, nested, and non-separable terms") {
    // m1^2 xi1^2 xi3 of M4: fully pointwise, no internal nodes
    SymbolTerm flat;
    flat.coeff = Coeff(Rational(1));
    flat.polys = {xi(1, 4), xi(1, 4), xi(3, 4)};
    flat.mfactors = {MFactor{xi(1, 4), 2}};
    auto plan_flat = compile_plan(flat, 4);
    REQUIRE(plan_flat.has_value());
    CHECK(plan_flat->nodes.empty());
    CHECK(plan_flat->root_leaves.size() == 4);

    // m_a m_b m_c m_{def} xi_{ac} xi_e with (a,b,c,d,e,f) = (1,2,3,4,5,6)
    SymbolTerm nested;
    nested.coeff = Coeff(Rational(1));
    nested.polys = {xi_sum({1, 3}, 6), xi(5, 6)};
    nested.mfactors = {MFactor{xi(1, 6), 1}, MFactor{xi(2, 6), 1}, MFactor{xi(3, 6), 1},
                       MFactor{xi_sum({4, 5, 6}, 6), 1}};
    auto plan_nested = compile_plan(nested, 6);
    REQUIRE(plan_nested.has_value());
    CHECK(!plan_nested->nodes.empty());

    // the xi_{12} xi_{13} xi_{14} m1 m2 m3 m4 term admits no laminar rewriting
    SymbolTerm hard;
    hard.coeff = Coeff(Rational(1));
    hard.polys = {xi_sum({1, 2}, 4), xi_sum({1, 3}, 4), xi_sum({1, 4}, 4)};
    hard.mfactors = {MFactor{xi(1, 4), 1}, MFactor{xi(2, 4), 1}, MFactor{xi(3, 4), 1}, MFactor{xi(4, 4), 1}};
    CHECK(!compile_plan(hard, 4).has_value());
}

TEST_CASE("planned vs direct on random tuples and separable symbols (n = 2, 4)") {
    SpectralGrid g = make_grid(32, 17.0);
    Rng rng(5);
    LambdaContext ctx;
    ctx.m = i_multiplier(6.0, 0.75);
    for (int n : {2, 4}) {
        for (int rep = 0; rep < 25; ++rep) {
            std::vector<Field> fields;
            for (int s = 0; s < n; ++s) fields.push_back(random_field(g, rng));
            SymbolExpr e = random_separable_symbol(rng, n);
            cplx a = planned_lambda(e, fields, alternating_pattern(n), ctx);
            cplx b = direct_lambda(e, fields, alternating_pattern(n), ctx);
            CHECK(std::abs(a - b) <= 1e-10 * (1.0 + std::abs(b)));
        }
    }
}

TEST_CASE("planned vs direct on sparse-support fields (n = 6, 8)") {
    SpectralGrid g = make_grid(32, 17.0);
    Rng rng(7);
    LambdaContext ctx;
    ctx.m = i_multiplier(4.0, 0.8);
    for (int n : {6, 8}) {
        for (int rep = 0; rep < 4; ++rep) {
            std::vector<Field> fields;
            for (int s = 0; s < n; ++s) fields.push_back(sparse_field(g, rng, n == 6 ? 7 : 3));
            SymbolExpr e = random_separable_symbol(rng, n);
            cplx a = planned_lambda(e, fields, alternating_pattern(n), ctx);
            cplx b = direct_lambda(e, fields, alternating_pattern(n), ctx);
            CHECK(std::abs(a - b) <= 1e-10 * (1.0 + std::abs(b)));
        }
    }
}

TEST_CASE("derived M6 evaluates identically through plans and direct sums") {
    IncrementDerivation d = derive_energy_increment(DeriveMode::with_m);
    SpectralGrid g = make_grid(64, 20.0);
    Rng rng(11);
    LambdaContext ctx;
    ctx.m = i_multiplier(3.0, 0.75);
    Field f = sparse_field(g, rng, 8);  // Gaussian-type spectrum, 17 active modes
    {
        Field env = Field::from_function(g, [](double) { return cplx(1.0, 0.0); });
        (void)env;
        Field fh = to_fourier(f);
        for (int k = -8; k <= 8; ++k) {
            int j = g.index_of_mode(k);
            fh.values[j] *= std::exp(-0.08 * k * k);
        }
        f = to_physical(fh);
    }
    std::vector<Field> fields(6, f);
    cplx a = planned_lambda(d.M6_template, fields, alternating_pattern(6), ctx);
    cplx b = direct_lambda(d.M6_template, fields, alternating_pattern(6), ctx);
    CHECK(std::abs(a - b) <= 1e-10 * (1.0 + std::abs(b)));
    // canonical and template forms agree numerically as well
    cplx c = planned_lambda(d.M6, fields, alternating_pattern(6), ctx);
    CHECK(std::abs(a - c) <= 1e-9 * (1.0 + std::abs(a)));

    CHECK(std::abs(planned_lambda(d.M6_template, std::vector<Field>(6, Field::zero(g)),
                                   alternating_pattern(6), ctx)) == 0.0);
}

TEST_CASE("M8 vanishes when N exceeds the grid bandwidth") {
    IncrementDerivation d = derive_energy_increment(DeriveMode::with_m);
    SpectralGrid g = make_grid(32, 10.0);
    Rng rng(13);
    LambdaContext ctx;
    ctx.m = i_multiplier(8.0 * g.max_freq(), 0.75);  // m = 1 on every reachable sum
    Field f = random_smooth_field(g, rng, 0.8);
    cplx v = lambda_on_solution(d.M8_template, f, ctx);
    CHECK(std::abs(v) < 1e-11);
    cplx v4 = lambda_on_solution(d.M4_template, f, ctx);
    CHECK(std::abs(v4) < 1e-11);
}

TEST_CASE("lambda_on_solution: energy identity, plane wave, realness") {
    SpectralGrid g = make_grid(128, 40.0);
    Rng rng(17);
    Field f = random_smooth_field(g, rng, 1.2);

    // E(f) via Lambda forms vs the quadrature definition
    EnergyBreakdown eb = energy_E(f);
    CHECK(eb.discrepancy <= 1e-10);

    // plane wave c e^{ikx}: E = |c|^2 k^2 L + (1/2) k |c|^4 L
    double k = g.freq_of_mode(3);
    cplx c(0.6, 0.3);
    Field pw = Field::from_function(g, [k, c](double x) { return c * std::exp(cplx(0.0, k * x)); });
    EnergyBreakdown epw = energy_E(pw);
    double a2 = std::norm(c);
    CHECK(epw.kinetic == Approx(a2 * k * k * g.length).epsilon(1e-12));
    CHECK(epw.quartic == Approx(0.5 * k * a2 * a2 * g.length).epsilon(1e-12));
    CHECK(epw.discrepancy <= 1e-12);

    // real-valued field: Lambda_2(xi1 xi2) has a tiny imaginary part
    Field realf = Field::from_function(g, [](double x) { return cplx(std::exp(-0.05 * x * x), 0.0); });
    SymbolExpr x1x2 = SymbolExpr::zero(2).add_term(Coeff(Rational(1)), {xi(1, 2), xi(2, 2)});
    cplx v = lambda_on_solution(x1x2, realf);
    CHECK(std::abs(v.imag()) <= 1e-12 * (1.0 + std::abs(v.real())));

    // realness of the derived increment integrands on a single field
    IncrementDerivation d = derive_energy_increment(DeriveMode::with_m);
    LambdaContext ctx;
    ctx.m = i_multiplier(2.0, 0.75);
    for (const SymbolExpr* e : {&d.M4_template, &d.M6_template, &d.M8_template}) {
        cplx w = lambda_on_solution(*e, f, ctx);
        CHECK(std::abs(w.imag()) <= 1e-10 * (1.0 + std::abs(w.real())));
    }
}

TEST_CASE("hyperplane and symmetrization invariance of Lambda values") {
    SpectralGrid g = make_grid(32, 12.0);
    Rng rng(19);
    Field f = random_field(g, rng);
    std::vector<Field> fields(4, f);

    // canonicalization does not change the value
    SymbolExpr e = SymbolExpr::zero(4);
    e.add_term(Coeff(Rational(1, 3)), {xi_sum({1, 2, 3}, 4), xi(2, 4)}, {MFactor{xi_sum({2, 3}, 4), 1}});
    LambdaContext ctx;
    ctx.m = i_multiplier(2.0, 0.8);
    cplx a = direct_lambda(e, fields, alternating_pattern(4), ctx);
    cplx b = direct_lambda(canonicalize(e), fields, alternating_pattern(4), ctx);
    CHECK(std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a)));

    // symmetrization invariance for the single-field pattern
    cplx s = direct_lambda(symmetrize(e), fields, alternating_pattern(4), ctx);
    CHECK(std::abs(a - s) <= 1e-10 * (1.0 + std::abs(a)));
}

TEST_CASE("Simpson integration: constants exact, quartic error decays at fourth order") {
    std::vector<cplx> vals(21, cplx(3.7, -1.2));
    TimeIntegral ti = simpson_integrate(vals, 0.01);
    CHECK(std::abs(ti.value - cplx(3.7, -1.2) * 0.2) < 1e-15);
    CHECK(ti.has_estimate);
    CHECK(ti.error_estimate < 1e-15);

    auto quartic_err = [](int count) {
        double dt = 1.0 / (count - 1);
        std::vector<cplx> v(count);
        for (int i = 0; i < count; ++i) {
            double t = i * dt;
            v[i] = cplx(t * t * t * t, 0.0);
        }
        return std::abs(simpson_integrate(v, dt).value - cplx(0.2, 0.0));
    };
    double e1 = quartic_err(11), e2 = quartic_err(21);
    CHECK(e1 / e2 == Approx(16.0).margin(2.0));

    CHECK_THROWS(simpson_integrate(std::vector<cplx>(4), 0.1));
    CHECK_THROWS(simpson_integrate(std::vector<cplx>(2), 0.1));
}
