#include <catch2/catch_amalgamated.hpp>

#include "dnlslab/rng.hpp"
#include "dnlslab/symbol.hpp"

using namespace dnlslab;

namespace {

SymbolExpr expr1(int order, const Coeff& c, std::vector<LinearForm> polys, std::vector<MFactor> mfs = {}) {
    SymbolExpr e = SymbolExpr::zero(order);
    e.add_term(c, std::move(polys), std::move(mfs));
    return e;
}

SymbolExpr random_expr(Rng& rng, int order) {
    SymbolExpr e = SymbolExpr::zero(order);
    int terms = 1 + static_cast<int>(rng.below(3));
    for (int t = 0; t < terms; ++t) {
        Coeff c = Coeff::i_power(Rational(static_cast<long long>(rng.below(11)) - 5, 1 + rng.below(3)),
                                 static_cast<int>(rng.below(4)));
        std::vector<LinearForm> polys;
        int np = static_cast<int>(rng.below(3));
        for (int p = 0; p < np; ++p) {
            LinearForm f{std::vector<int>(order, 0)};
            for (int i = 0; i < order; ++i) f.c[i] = static_cast<int>(rng.below(5)) - 2;
            polys.push_back(f);
        }
        std::vector<MFactor> mfs;
        if (rng.below(2)) {
            LinearForm a{std::vector<int>(order, 0)};
            for (int i = 0; i < order; ++i) a.c[i] = static_cast<int>(rng.below(3)) - 1;
            if (!a.is_zero()) mfs.push_back(MFactor{a, 1 + static_cast<int>(rng.below(2))});
        }
        e.add_term(c, std::move(polys), std::move(mfs));
    }
    return e;
}

bool same_canonical(const SymbolExpr& a, const SymbolExpr& b) {
    SymbolExpr ca = canonicalize(a), cb = canonicalize(b);
    if (ca.terms.size() != cb.terms.size()) return false;
    for (size_t i = 0; i < ca.terms.size(); ++i)
        if (term_string(ca.terms[i]) != term_string(cb.terms[i])) return false;
    return true;
}

}  // namespace

TEST_CASE("canonicalize: hyperplane relations") {
    // xi_{1234} = 0 on Gamma_4
    CHECK(is_zero(expr1(4, Coeff(Rational(1)), {xi_sum({1, 2, 3, 4}, 4)})));
    // xi_{12} + xi_{34} = 0 on Gamma_4
    SymbolExpr e = SymbolExpr::zero(4);
    e.add_term(Coeff(Rational(1)), {xi_sum({1, 2}, 4)});
    e.add_term(Coeff(Rational(1)), {xi_sum({3, 4}, 4)});
    CHECK(is_zero(e));
    // m(xi_{123}) = m(xi_4) (hyperplane + evenness)
    SymbolExpr a = expr1(4, Coeff(Rational(1)), {}, {MFactor{xi_sum({1, 2, 3}, 4), 1}});
    SymbolExpr b = expr1(4, Coeff(Rational(1)), {}, {MFactor{xi(4, 4), 1}});
    CHECK(equals(a, b));
}

TEST_CASE("canonicalize is idempotent on random expressions") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        int order = 2 * (1 + static_cast<int>(rng.below(3)));
        SymbolExpr e = random_expr(rng, order);
        SymbolExpr c1 = canonicalize(e);
        CHECK(same_canonical(c1, canonicalize(c1)));
    }
}

TEST_CASE("equals: the Lemma conservation factorizations") {
    SymbolExpr lhs = SymbolExpr::zero(4);
    lhs.add_term(Coeff(Rational(1)), {xi(1, 4), xi(1, 4), xi(3, 4)});
    lhs.add_term(Coeff(Rational(1)), {xi(2, 4), xi(2, 4), xi(4, 4)});
    lhs.add_term(Coeff(Rational(1)), {xi(3, 4), xi(3, 4), xi(1, 4)});
    lhs.add_term(Coeff(Rational(1)), {xi(4, 4), xi(4, 4), xi(2, 4)});
    SymbolExpr rhs = expr1(4, Coeff(Rational(-1)), {xi_sum({1, 2}, 4), xi_sum({1, 3}, 4), xi_sum({1, 4}, 4)});
    CHECK(equals(lhs, rhs));

    SymbolExpr lhs2 = SymbolExpr::zero(4);
    lhs2.add_term(Coeff(Rational(-1)), {xi(1, 4), xi(1, 4)});
    lhs2.add_term(Coeff(Rational(1)), {xi(2, 4), xi(2, 4)});
    lhs2.add_term(Coeff(Rational(-1)), {xi(3, 4), xi(3, 4)});
    lhs2.add_term(Coeff(Rational(1)), {xi(4, 4), xi(4, 4)});
    SymbolExpr rhs2 = expr1(4, Coeff(Rational(-2)), {xi_sum({1, 2}, 4), xi_sum({1, 4}, 4)});
    CHECK(equals(lhs2, rhs2));
}

TEST_CASE("equals on Gamma_2") {
    SymbolExpr x1 = expr1(2, Coeff(Rational(1)), {xi(1, 2)});
    SymbolExpr x2 = expr1(2, Coeff(Rational(1)), {xi(2, 2)});
    CHECK(equals(x1, scale(x2, Coeff(Rational(-1)))));
    CHECK(!equals(x1, x2));
    CHECK_THROWS(equals(x1, SymbolExpr::zero(4)));
}

TEST_CASE("elongation") {
    SymbolExpr x1x2 = expr1(2, Coeff(Rational(1)), {xi(1, 2), xi(2, 2)});
    CHECK(equals(elongate(x1x2, 1, 2), expr1(4, Coeff(Rational(1)), {xi_sum({1, 2, 3}, 4), xi(4, 4)})));
    CHECK(equals(elongate(x1x2, 2, 2), expr1(4, Coeff(Rational(1)), {xi(1, 4), xi_sum({2, 3, 4}, 4)})));

    SymbolExpr msq = expr1(2, Coeff(Rational(1)), {}, {MFactor{xi(1, 2), 2}});
    SymbolExpr expect = expr1(6, Coeff(Rational(1)), {}, {MFactor{xi_sum({1, 2, 3, 4, 5}, 6), 2}});
    CHECK(equals(elongate(msq, 1, 4), expect));

    CHECK_THROWS_AS(elongate(x1x2, 1, 3), std::invalid_argument);
    CHECK_THROWS_AS(elongate(x1x2, 5, 2), std::invalid_argument);
}

TEST_CASE("symmetrize: examples and projection property") {
    // xi_2 + xi_3 on Gamma_4 symmetrizes to (1/2) xi_{1234} = 0
    SymbolExpr e = SymbolExpr::zero(4);
    e.add_term(Coeff(Rational(1)), {xi(2, 4)});
    e.add_term(Coeff(Rational(1)), {xi(3, 4)});
    CHECK(symmetrize(e).terms.empty());

    SymbolExpr x1 = expr1(2, Coeff(Rational(1)), {xi(1, 2)});
    CHECK(equals(symmetrize(x1), x1));

    // xi2^2 - xi3^2 + xi4^2 - xi5^2 on Gamma_6 -> -(2/3)(xi1^2 - xi2^2 + ... - xi6^2)
    SymbolExpr f = SymbolExpr::zero(6);
    f.add_term(Coeff(Rational(1)), {xi(2, 6), xi(2, 6)});
    f.add_term(Coeff(Rational(-1)), {xi(3, 6), xi(3, 6)});
    f.add_term(Coeff(Rational(1)), {xi(4, 6), xi(4, 6)});
    f.add_term(Coeff(Rational(-1)), {xi(5, 6), xi(5, 6)});
    SymbolExpr alt = SymbolExpr::zero(6);
    for (int j = 1; j <= 6; ++j)
        alt.add_term(Coeff(Rational(j % 2 == 1 ? 1 : -1)), {xi(j, 6), xi(j, 6)});
    CHECK(equals(symmetrize(f), scale(alt, Coeff(Rational(-2, 3)))));

    Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        SymbolExpr r = random_expr(rng, 4);
        SymbolExpr s1 = symmetrize(r);
        CHECK(same_canonical(s1, symmetrize(s1)));
    }
}

TEST_CASE("differentiation law components") {
    // input 1 at order 2
    SymbolExpr one = expr1(2, Coeff(Rational(1)), {});
    DiffLaw d = differentiate_law(one);
    CHECK(d.same.terms.empty());
    SymbolExpr expect2 = SymbolExpr::zero(4);
    expect2.add_term(Coeff::i_power(Rational(-1), 1), {xi(2, 4)});
    expect2.add_term(Coeff::i_power(Rational(-1), 1), {xi(3, 4)});
    CHECK(equals(d.plus2, expect2));
    CHECK(d.plus4.terms.empty());

    // input xi1 xi2: the order-4 component is -i(xi_{123} xi4 xi2 + xi1 xi_{234} xi3)
    SymbolExpr x1x2 = expr1(2, Coeff(Rational(1)), {xi(1, 2), xi(2, 2)});
    DiffLaw dk = differentiate_law(x1x2);
    SymbolExpr mid = SymbolExpr::zero(4);
    mid.add_term(Coeff::i_power(Rational(-1), 1), {xi_sum({1, 2, 3}, 4), xi(4, 4), xi(2, 4)});
    mid.add_term(Coeff::i_power(Rational(-1), 1), {xi(1, 4), xi_sum({2, 3, 4}, 4), xi(3, 4)});
    CHECK(equals(dk.plus2, mid));

    // input m1 xi1 m2 xi2: m-factors elongate along with the polynomials
    SymbolExpr em = expr1(2, Coeff(Rational(1)), {xi(1, 2), xi(2, 2)},
                          {MFactor{xi(1, 2), 1}, MFactor{xi(2, 2), 1}});
    DiffLaw dm = differentiate_law(em);
    SymbolExpr midm = SymbolExpr::zero(4);
    midm.add_term(Coeff::i_power(Rational(-1), 1), {xi_sum({1, 2, 3}, 4), xi(4, 4), xi(2, 4)},
                  {MFactor{xi_sum({1, 2, 3}, 4), 1}, MFactor{xi(4, 4), 1}});
    midm.add_term(Coeff::i_power(Rational(-1), 1), {xi(1, 4), xi_sum({2, 3, 4}, 4), xi(3, 4)},
                  {MFactor{xi(1, 4), 1}, MFactor{xi_sum({2, 3, 4}, 4), 1}});
    CHECK(equals(dm.plus2, midm));
}

TEST_CASE("restrict_m_to_one") {
    SymbolExpr e = expr1(2, Coeff(Rational(1)), {xi(1, 2), xi(1, 2)}, {MFactor{xi(1, 2), 2}});
    CHECK(equals(restrict_m_to_one(e), expr1(2, Coeff(Rational(1)), {xi(1, 2), xi(1, 2)})));
    CHECK(restrict_m_to_one(SymbolExpr::zero(4)).terms.empty());
}

TEST_CASE("eval_symbol: plug-in values and hyperplane guard") {
    SymbolExpr x1x2 = expr1(2, Coeff(Rational(1)), {xi(1, 2), xi(2, 2)});
    Multiplier m = identity_multiplier();
    CHECK(std::abs(eval_symbol(x1x2, {5.0, -5.0}, m) - cplx(-25.0, 0.0)) < 1e-12);
    CHECK_THROWS_AS(eval_symbol(x1x2, {5.0, -4.0}, m), std::invalid_argument);

    SymbolExpr withm = expr1(2, Coeff::i_power(Rational(1, 2), 1), {xi(1, 2)}, {MFactor{xi_sum({1, 2}, 2), 1}});
    // on Gamma_2 the m-argument is zero: m(0) = 1 exactly for Eq.-(mul) multipliers
    cplx v = eval_symbol(canonicalize(withm), {3.0, -3.0}, i_multiplier(2.0, 0.75));
    CHECK(std::abs(v - cplx(0.0, 1.5)) < 1e-12);
}

TEST_CASE("eval of symmetrize equals explicit permutation averaging") {
    Rng rng(99);
    Multiplier m = i_multiplier(4.0, 0.8);
    for (int trial = 0; trial < 1000; ++trial) {
        int order = 4;
        SymbolExpr e = random_expr(rng, order);
        SymbolExpr se = symmetrize(e);
        std::vector<double> pt(order);
        double sum = 0.0;
        for (int i = 0; i + 1 < order; ++i) {
            pt[i] = rng.uniform(-8.0, 8.0);
            sum += pt[i];
        }
        pt[order - 1] = -sum;

        // explicit average over odd x even position permutations
        std::vector<int> odd = {1, 3}, even = {2, 4};
        cplx avg(0.0, 0.0);
        int count = 0;
        std::sort(odd.begin(), odd.end());
        do {
            std::sort(even.begin(), even.end());
            do {
                std::vector<double> perm(order);
                std::vector<int> sigma = {0, odd[0], even[0], odd[1], even[1]};
                for (int i = 1; i <= order; ++i) perm[i - 1] = pt[sigma[i] - 1];
                avg += eval_symbol(e, perm, m);
                ++count;
            } while (std::next_permutation(even.begin(), even.end()));
        } while (std::next_permutation(odd.begin(), odd.end()));
        avg /= static_cast<double>(count);

        cplx direct = eval_symbol(se, pt, m);
        CHECK(std::abs(direct - avg) <= 1e-12 * (1.0 + std::abs(avg)));
    }
}

TEST_CASE("printer produces stable canonical lines") {
    SymbolExpr e = expr1(4, Coeff::i_power(Rational(-1, 2), 1), {xi(1, 4), xi(1, 4), xi(3, 4)},
                         {MFactor{xi(1, 4), 2}});
    CHECK(expr_string(canonicalize(e)) == "-1/2*i * x1^2 * x3 * m(x1)^2");
}
