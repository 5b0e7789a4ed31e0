#pragma once

#include <algorithm>
#include <complex>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "dnlslab/grid.hpp"
#include "dnlslab/rational.hpp"

namespace dnlslab {

// ---------------------------------------------------------------------------
// Exact multipliers of order n on the hyperplane Gamma_n = {xi_1+...+xi_n = 0}:
// rational-coefficient polynomials in xi_1..xi_n times opaque even m(.)-factors.
// Everything below is exact; no floating point enters before eval_symbol.
// ---------------------------------------------------------------------------

// c_1*xi_1 + ... + c_n*xi_n, integer coefficients.
struct LinearForm {
    std::vector<int> c;

    int order() const { return static_cast<int>(c.size()); }
    bool is_zero() const {
        return std::all_of(c.begin(), c.end(), [](int v) { return v == 0; });
    }

    // Rewrite modulo xi_n = -(xi_1+...+xi_{n-1}); last coefficient becomes 0.
    LinearForm reduced() const {
        LinearForm r = *this;
        int last = r.c.back();
        if (last != 0) {
            for (int& v : r.c) v -= last;
            r.c.back() = 0;
        }
        return r;
    }

    // Make the leading nonzero coefficient positive; returns the sign pulled out.
    int sign_normalize() {
        for (int v : c) {
            if (v > 0) return 1;
            if (v < 0) {
                for (int& w : c) w = -w;
                return -1;
            }
        }
        return 1;
    }

    double dot(const std::vector<double>& xi) const {
        double acc = 0.0;
        for (size_t i = 0; i < c.size(); ++i) acc += c[i] * xi[i];
        return acc;
    }

    friend bool operator==(const LinearForm& a, const LinearForm& b) { return a.c == b.c; }
    friend bool operator<(const LinearForm& a, const LinearForm& b) { return a.c < b.c; }
};

// unit form xi_i (1-based position)
inline LinearForm xi(int i, int order) {
    LinearForm f{std::vector<int>(order, 0)};
    f.c.at(i - 1) = 1;
    return f;
}

// xi_S = sum over 1-based positions in S
inline LinearForm xi_sum(std::initializer_list<int> s, int order) {
    LinearForm f{std::vector<int>(order, 0)};
    for (int i : s) f.c.at(i - 1) += 1;
    return f;
}

inline LinearForm lf(std::initializer_list<int> coeffs) { return LinearForm{std::vector<int>(coeffs)}; }

// m(arg)^power with the argument stored sign-normalized (m is even).
struct MFactor {
    LinearForm arg;
    int power = 1;

    friend bool operator==(const MFactor& a, const MFactor& b) { return a.power == b.power && a.arg == b.arg; }
    friend bool operator<(const MFactor& a, const MFactor& b) {
        if (a.arg.c != b.arg.c) return a.arg.c < b.arg.c;
        return a.power < b.power;
    }
};

// coeff * prod(poly factors) * prod(m-factors)
struct SymbolTerm {
    Coeff coeff;
    std::vector<LinearForm> polys;
    std::vector<MFactor> mfactors;
};

struct SymbolExpr {
    int order = 2;
    std::vector<SymbolTerm> terms;

    static SymbolExpr zero(int order) { return SymbolExpr{order, {}}; }

    SymbolExpr& add_term(const Coeff& c, std::vector<LinearForm> polys, std::vector<MFactor> mfs = {}) {
        for (const LinearForm& p : polys)
            if (p.order() != order) throw std::invalid_argument("SymbolExpr: poly factor order mismatch");
        for (const MFactor& m : mfs)
            if (m.arg.order() != order) throw std::invalid_argument("SymbolExpr: m-factor order mismatch");
        terms.push_back(SymbolTerm{c, std::move(polys), std::move(mfs)});
        return *this;
    }
};

inline SymbolExpr scale(const SymbolExpr& e, const Coeff& c) {
    SymbolExpr out = e;
    for (SymbolTerm& t : out.terms) t.coeff = t.coeff * c;
    return out;
}

inline SymbolExpr operator+(const SymbolExpr& a, const SymbolExpr& b) {
    if (a.order != b.order) throw std::invalid_argument("SymbolExpr+: order mismatch");
    SymbolExpr out = a;
    out.terms.insert(out.terms.end(), b.terms.begin(), b.terms.end());
    return out;
}

inline SymbolExpr operator-(const SymbolExpr& a, const SymbolExpr& b) {
    return a + scale(b, Coeff(Rational(-1)));
}

namespace detail {

using MSetKey = std::vector<std::pair<std::vector<int>, int>>;   // (arg coeffs, power), sorted
using TermKey = std::pair<MSetKey, std::vector<int>>;            // (m-multiset, monomial exponents)

// Canonical m-multiset: arguments reduced mod the hyperplane and
// sign-normalized (m even). Arguments that reduce to zero are m(0) = 1 for
// every Eq.-(mul)-type multiplier and are dropped.
inline MSetKey canonical_mset(const std::vector<MFactor>& mfs) {
    std::map<std::vector<int>, int> acc;
    for (const MFactor& m : mfs) {
        if (m.power <= 0) throw std::invalid_argument("MFactor: power must be positive");
        LinearForm a = m.arg.reduced();
        if (a.is_zero()) continue;
        a.sign_normalize();
        acc[a.c] += m.power;
    }
    return MSetKey(acc.begin(), acc.end());
}

}  // namespace detail

// Canonical form: polynomial part expanded into monomials of xi_1..xi_{n-1}
// (xi_n eliminated via the hyperplane relation), identical terms merged, zero
// coefficients dropped, m-arguments reduced and sign-normalized. Equality of
// canonical forms is a sound and complete identity test for such expressions
// on Gamma_n, with m treated as an arbitrary even function.
inline SymbolExpr canonicalize(const SymbolExpr& e) {
    const int n = e.order;
    std::map<detail::TermKey, Coeff> acc;
    for (const SymbolTerm& t : e.terms) {
        if (t.coeff.is_zero()) continue;
        for (const LinearForm& p : t.polys)
            if (p.order() != n) throw std::invalid_argument("canonicalize: term order mismatch");
        detail::MSetKey mkey = detail::canonical_mset(t.mfactors);

        // expand the product of reduced linear factors into monomials
        std::map<std::vector<int>, Coeff> poly;
        poly[std::vector<int>(n, 0)] = t.coeff;
        bool dead = false;
        for (const LinearForm& p : t.polys) {
            LinearForm r = p.reduced();
            if (r.is_zero()) {
                dead = true;
                break;
            }
            std::map<std::vector<int>, Coeff> next;
            for (const auto& [expo, c] : poly) {
                for (int i = 0; i + 1 < n; ++i) {
                    if (r.c[i] == 0) continue;
                    std::vector<int> e2 = expo;
                    e2[i] += 1;
                    Coeff add = c * Coeff(Rational(r.c[i]));
                    auto it = next.find(e2);
                    if (it == next.end())
                        next.emplace(std::move(e2), add);
                    else
                        it->second += add;
                }
            }
            poly = std::move(next);
        }
        if (dead) continue;
        for (const auto& [expo, c] : poly) {
            if (c.is_zero()) continue;
            detail::TermKey key{mkey, expo};
            auto it = acc.find(key);
            if (it == acc.end())
                acc.emplace(std::move(key), c);
            else
                it->second += c;
        }
    }

    SymbolExpr out = SymbolExpr::zero(n);
    for (const auto& [key, c] : acc) {
        if (c.is_zero()) continue;
        SymbolTerm t;
        t.coeff = c;
        for (int i = 0; i + 1 < n; ++i)
            for (int rep = 0; rep < key.second[i]; ++rep) t.polys.push_back(xi(i + 1, n));
        for (const auto& [argc, pow] : key.first) t.mfactors.push_back(MFactor{LinearForm{argc}, pow});
        out.terms.push_back(std::move(t));
    }
    return out;
}

inline bool is_zero(const SymbolExpr& e) { return canonicalize(e).terms.empty(); }

inline bool equals(const SymbolExpr& a, const SymbolExpr& b) {
    if (a.order != b.order) throw std::invalid_argument("equals: order mismatch");
    return is_zero(a - b);
}

// Elongation X^k_j: replace xi_j by xi_j + ... + xi_{j+k} and advance the
// indices after j, producing a multiplier of order n+k.
inline SymbolExpr elongate(const SymbolExpr& e, int j, int k) {
    if (k <= 0 || k % 2 != 0) throw std::invalid_argument("elongate: k must be a positive even integer");
    if (j < 1 || j > e.order) throw std::invalid_argument("elongate: index out of range");
    const int n = e.order;
    auto map_form = [&](const LinearForm& f) {
        LinearForm g{std::vector<int>(n + k, 0)};
        for (int i = 1; i <= n; ++i) {
            if (i < j)
                g.c[i - 1] = f.c[i - 1];
            else if (i == j)
                for (int d = 0; d <= k; ++d) g.c[j - 1 + d] = f.c[j - 1];
            else
                g.c[i - 1 + k] = f.c[i - 1];
        }
        return g;
    };
    SymbolExpr out = SymbolExpr::zero(n + k);
    for (const SymbolTerm& t : e.terms) {
        SymbolTerm s;
        s.coeff = t.coeff;
        for (const LinearForm& p : t.polys) s.polys.push_back(map_form(p));
        for (const MFactor& m : t.mfactors) s.mfactors.push_back(MFactor{map_form(m.arg), m.power});
        out.terms.push_back(std::move(s));
    }
    return out;
}

// Average over all permutations of the odd positions crossed with all
// permutations of the even positions; Lambda_n evaluation is invariant.
inline SymbolExpr symmetrize(const SymbolExpr& e) {
    const int n = e.order;
    std::vector<int> odd, even;
    for (int i = 1; i <= n; ++i) (i % 2 ? odd : even).push_back(i);

    SymbolExpr out = SymbolExpr::zero(n);
    std::vector<int> podd = odd, peven = even;
    long long count = 0;
    std::sort(podd.begin(), podd.end());
    do {
        std::sort(peven.begin(), peven.end());
        std::vector<int> sigma(n + 1, 0);
        for (size_t i = 0; i < odd.size(); ++i) sigma[odd[i]] = podd[i];
        do {
            for (size_t i = 0; i < even.size(); ++i) sigma[even[i]] = peven[i];
            ++count;
            auto map_form = [&](const LinearForm& f) {
                LinearForm g{std::vector<int>(n, 0)};
                for (int i = 1; i <= n; ++i) g.c[sigma[i] - 1] = f.c[i - 1];
                return g;
            };
            for (const SymbolTerm& t : e.terms) {
                SymbolTerm s;
                s.coeff = t.coeff;
                for (const LinearForm& p : t.polys) s.polys.push_back(map_form(p));
                for (const MFactor& m : t.mfactors) s.mfactors.push_back(MFactor{map_form(m.arg), m.power});
                out.terms.push_back(std::move(s));
            }
        } while (std::next_permutation(peven.begin(), peven.end()));
    } while (std::next_permutation(podd.begin(), podd.end()));

    return canonicalize(scale(out, Coeff(Rational(1, count))));
}

// Drop every m-factor ("all the m_i, m_{ij}, etc. terms are equal to 1").
inline SymbolExpr restrict_m_to_one(const SymbolExpr& e) {
    SymbolExpr out = e;
    for (SymbolTerm& t : out.terms) t.mfactors.clear();
    return canonicalize(out);
}

struct DiffLaw {
    SymbolExpr same;    // order n
    SymbolExpr plus2;   // order n+2
    SymbolExpr plus4;   // order n+4
};

namespace detail {

// The differentiation law for d/dt Lambda_n(M_n; w(t)) when the state obeys
// w_t = i w_xx + cubic + quintic with cubic = -w wbar_x w (present iff
// `cubic`) and quintic = quintic_coeff * |w|^4 w at odd slots (conjugated at
// even slots). Returns the three bracket multipliers with the overall factors
// of i folded into the coefficients, so that
//   d/dt Lambda_n(M) = Lambda_n(same) + Lambda_{n+2}(plus2) + Lambda_{n+4}(plus4).
inline DiffLaw differentiate_generic(const SymbolExpr& e, bool cubic, const Coeff& quintic_coeff) {
    const int n = e.order;
    if (n % 2 != 0) throw std::invalid_argument("differentiate: order must be even");

    SymbolExpr same = SymbolExpr::zero(n);
    for (int j = 1; j <= n; ++j) {
        Coeff c = Coeff::i_power(Rational(1), 1) * Coeff(Rational(j % 2 == 0 ? 1 : -1));
        for (const SymbolTerm& t : e.terms) {
            SymbolTerm s = t;
            s.coeff = s.coeff * c;
            s.polys.push_back(xi(j, n));
            s.polys.push_back(xi(j, n));
            same.terms.push_back(std::move(s));
        }
    }

    SymbolExpr plus2 = SymbolExpr::zero(n + 2);
    if (cubic) {
        const Coeff minus_i = Coeff::i_power(Rational(-1), 1);
        for (int j = 1; j <= n; ++j) {
            SymbolExpr el = elongate(e, j, 2);
            for (SymbolTerm& t : el.terms) {
                t.coeff = t.coeff * minus_i;
                t.polys.push_back(xi(j + 1, n + 2));
                plus2.terms.push_back(std::move(t));
            }
        }
    }

    SymbolExpr plus4 = SymbolExpr::zero(n + 4);
    if (!quintic_coeff.is_zero()) {
        for (int j = 1; j <= n; ++j) {
            Coeff c = quintic_coeff * Coeff(Rational(j % 2 == 1 ? 1 : -1));
            SymbolExpr el = elongate(e, j, 4);
            for (SymbolTerm& t : el.terms) {
                t.coeff = t.coeff * c;
                plus4.terms.push_back(std::move(t));
            }
        }
    }

    return DiffLaw{canonicalize(same), canonicalize(plus2), canonicalize(plus4)};
}

}  // namespace detail

// The paper's differentiation law for the gauged flow
// w_t = i w_xx - w wbar_x w + (i/2) |w|^4 w.
inline DiffLaw differentiate_law(const SymbolExpr& e) {
    return detail::differentiate_generic(e, true, Coeff::i_power(Rational(1, 2), 1));
}

// Analogue for the quintic flow v_t = i v_xx + i*lambda |v|^4 v (no cubic term).
inline DiffLaw differentiate_law_quintic(const SymbolExpr& e, const Rational& lambda) {
    return detail::differentiate_generic(e, false, Coeff::i_power(lambda, 1));
}

// Plug-in numeric evaluation at a point of Gamma_n, with m(.) sampled from a
// concrete multiplier.
inline cplx eval_symbol(const SymbolExpr& e, const std::vector<double>& xi_v, const Multiplier& m) {
    if (static_cast<int>(xi_v.size()) != e.order) throw std::invalid_argument("eval_symbol: arity mismatch");
    double sum = 0.0, amax = 0.0;
    for (double x : xi_v) {
        sum += x;
        amax = std::max(amax, std::abs(x));
    }
    if (std::abs(sum) > 1e-9 * std::max(amax, 1e-300) && amax > 0.0)
        throw std::invalid_argument("eval_symbol: point not on the zero-sum hyperplane");
    cplx total(0.0, 0.0);
    for (const SymbolTerm& t : e.terms) {
        cplx v(t.coeff.re().to_double(), t.coeff.im().to_double());
        for (const LinearForm& p : t.polys) v *= p.dot(xi_v);
        for (const MFactor& mf : t.mfactors) {
            cplx mv = m.symbol(mf.arg.dot(xi_v));
            for (int q = 0; q < mf.power; ++q) v *= mv;
        }
        total += v;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Printing (transcript format: one canonical term per line).
// ---------------------------------------------------------------------------

inline std::string form_string(const LinearForm& f) {
    std::string s;
    for (int i = 0; i < f.order(); ++i) {
        int c = f.c[i];
        if (c == 0) continue;
        if (!s.empty() && c > 0) s += "+";
        if (c == -1)
            s += "-";
        else if (c != 1)
            s += std::to_string(c) + "*";
        s += "x" + std::to_string(i + 1);
    }
    return s.empty() ? "0" : s;
}

inline std::string term_string(const SymbolTerm& t) {
    std::string s = t.coeff.str();
    auto first_nonzero = [](const std::vector<int>& c) {
        for (size_t i = 0; i < c.size(); ++i)
            if (c[i] != 0) return i;
        return c.size();
    };
    std::map<std::pair<size_t, std::vector<int>>, int> expo;
    for (const LinearForm& p : t.polys) expo[{first_nonzero(p.c), p.c}] += 1;
    for (const auto& [key, pow] : expo) {
        const std::vector<int>& c = key.second;
        LinearForm f{c};
        bool unit = std::count(c.begin(), c.end(), 0) == static_cast<int>(c.size()) - 1 &&
                    std::find(c.begin(), c.end(), 1) != c.end();
        s += " * " + (unit ? form_string(f) : "(" + form_string(f) + ")");
        if (pow > 1) s += "^" + std::to_string(pow);
    }
    std::vector<MFactor> mfs = t.mfactors;
    std::sort(mfs.begin(), mfs.end(), [&](const MFactor& a, const MFactor& b) {
        size_t sa = a.arg.c.size() - std::count(a.arg.c.begin(), a.arg.c.end(), 0);
        size_t sb = b.arg.c.size() - std::count(b.arg.c.begin(), b.arg.c.end(), 0);
        if (sa != sb) return sa < sb;
        if (first_nonzero(a.arg.c) != first_nonzero(b.arg.c)) return first_nonzero(a.arg.c) < first_nonzero(b.arg.c);
        return a.arg.c < b.arg.c;
    });
    for (const MFactor& m : mfs) {
        s += " * m(" + form_string(m.arg) + ")";
        if (m.power > 1) s += "^" + std::to_string(m.power);
    }
    return s;
}

inline std::string expr_string(const SymbolExpr& e) {
    if (e.terms.empty()) return "0";
    std::string s;
    for (size_t i = 0; i < e.terms.size(); ++i) {
        if (i) s += "\n";
        s += term_string(e.terms[i]);
    }
    return s;
}

}  // namespace dnlslab
