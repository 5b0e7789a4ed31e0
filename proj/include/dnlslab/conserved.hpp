#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dnlslab/grid.hpp"
#include "dnlslab/lambda.hpp"

namespace dnlslab {

// ---------------------------------------------------------------------------
// Scalar functionals: mass, the gauged-DNLS energy E, the modified energy
// E_N = E(If), the quintic energy H, the Gagliardo-Nirenberg and coercivity
// certificates.
// ---------------------------------------------------------------------------

inline constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;
inline constexpr double kGnSharpConstant = 4.0 / (kPi * kPi);  // sharp 1D L6 Gagliardo-Nirenberg

struct EnergyBreakdown {
    double kinetic = 0.0;      // int |f_x|^2
    double quartic = 0.0;      // -(1/2) Im int f fbar f d_x(fbar)
    double total = 0.0;        // kinetic + quartic
    double lambda_form = 0.0;  // -Lambda_2(xi1 xi2; f) + (1/8) Lambda_4(xi_{13-24}; f)
    double discrepancy = 0.0;  // |total - lambda_form| / (1 + |total|)
};

inline SymbolExpr kinetic_symbol() {
    // -xi1*xi2 on Gamma_2, so Lambda_2 of it equals +||f_x||_2^2
    return SymbolExpr::zero(2).add_term(Coeff(Rational(-1)), {xi(1, 2), xi(2, 2)});
}

inline SymbolExpr quartic_energy_symbol() {
    return SymbolExpr::zero(4).add_term(Coeff(Rational(1, 8)), {lf({1, -1, 1, -1})});
}

// E(f) = int f_x fbar_x - (1/2) Im int f fbar f d_x(fbar), with the quartic
// integrand formed alias-free so the quadrature form matches the Lambda form
// for arbitrary (also spectrally rough) fields.
inline EnergyBreakdown energy_E(const Field& f) {
    EnergyBreakdown out;
    Field fx = apply_multiplier(derivative_multiplier(), f);
    double kin = lebesgue_norm(fx, 2);
    out.kinetic = kin * kin;
    Field fxbar = conj_field(fx);
    Field quart = dealiased_product({to_physical(f), conj_field(f), to_physical(f), fxbar});
    out.quartic = -0.5 * box_integral(quart).imag();
    out.total = out.kinetic + out.quartic;

    cplx l2 = planned_lambda(kinetic_symbol(), {f, f}, alternating_pattern(2));
    cplx l4 = planned_lambda(quartic_energy_symbol(), {f, f, f, f}, alternating_pattern(4));
    out.lambda_form = (l2 + l4).real();
    out.discrepancy = std::abs(out.total - out.lambda_form) / (1.0 + std::abs(out.total));
    return out;
}

// E_N(f) = E(If)
inline EnergyBreakdown energy_EN(const Field& f, double N, double s) {
    return energy_E(apply_multiplier(i_multiplier(N, s), f));
}

// H(f, lambda) = int |f_x|^2 - (lambda/6) int |f|^6 (the Remark's display; the
// conserved functional of the quintic flow with coupling lambda is
// energy_H(f, 2*lambda), see quintic_invariant below). Cross-checked against
// -Lambda_2(xi1 xi2; f) - (lambda/6) Lambda_6(1; f).
struct QuinticEnergy {
    double kinetic = 0.0;
    double sextic = 0.0;  // int |f|^6 (alias-free)
    double value = 0.0;
    double lambda_form = 0.0;
    double discrepancy = 0.0;
};

inline QuinticEnergy energy_H_breakdown(const Field& f, double lambda) {
    QuinticEnergy out;
    double kin = lebesgue_norm(apply_multiplier(derivative_multiplier(), f), 2);
    out.kinetic = kin * kin;
    out.sextic = sextic_integral(f);
    out.value = out.kinetic - lambda / 6.0 * out.sextic;

    cplx l2 = planned_lambda(kinetic_symbol(), {f, f}, alternating_pattern(2));
    SymbolExpr one6 = SymbolExpr::zero(6).add_term(Coeff(Rational(1)), {});
    cplx l6 = lambda_on_solution(one6, f);
    out.lambda_form = l2.real() - lambda / 6.0 * l6.real();
    out.discrepancy = std::abs(out.value - out.lambda_form) / (1.0 + std::abs(out.value));
    return out;
}

inline double energy_H(const Field& f, double lambda) { return energy_H_breakdown(f, lambda).value; }

// The functional conserved by i v_t + v_xx + lambda |v|^4 v = 0, i.e.
// ||v_x||^2 - (lambda/3) int |v|^6; the symbolic pipeline derives the 1/3.
inline double quintic_invariant(const Field& f, double lambda) { return energy_H(f, 2.0 * lambda); }

// ||g||_6^6 / (||g||_2^4 ||g_x||_2^2); at most 4/pi^2 by the sharp
// Gagliardo-Nirenberg inequality.
inline double gn_ratio(const Field& g) {
    double n2 = lebesgue_norm(g, 2);
    double n6 = lebesgue_norm(g, 6);
    double nd = lebesgue_norm(apply_multiplier(derivative_multiplier(), g), 2);
    double den = n2 * n2 * n2 * n2 * nd * nd;
    if (den == 0.0) throw std::invalid_argument("gn_ratio: zero denominator (constant or zero field)");
    return std::pow(n6, 6) / den;
}

struct GagliardoCertificate {
    double C = 0.0;                  // measured ||f_x||_2 / E(f)^{1/2}
    bool pass = false;               // iff E(f) > 0
    double energy = 0.0;             // E(f)
    double mass_error = 0.0;         // | ||g||_2 - ||f||_2 |
    double identity_residual = 0.0;  // relative residual of E(f) = ||g_x||^2 - (1/16)||g||_6^6
};

// Lemma gagliardo: with g = exp(i(1/4) int_{-inf}^x |f|^2) f the energy
// factorizes as E(f) = ||g_x||_2^2 - (1/16) ||g||_6^6, and the sharp GN
// inequality makes E positive definite under ||f||_2 < sqrt(2*pi).
inline GagliardoCertificate gagliardo_certificate(const Field& f) {
    double nf2 = lebesgue_norm(f, 2);
    if (!(nf2 < kSqrt2Pi)) throw std::invalid_argument("gagliardo_certificate: smallness ||f||_2 < sqrt(2 pi) violated");
    GagliardoCertificate out;
    Field g = phase_twist(f, 0.25);
    double ng2 = lebesgue_norm(g, 2);
    out.mass_error = std::abs(ng2 - nf2);
    double ngx = lebesgue_norm(apply_multiplier(derivative_multiplier(), g), 2);
    double ng6 = lebesgue_norm(g, 6);
    double split = ngx * ngx - std::pow(ng6, 6) / 16.0;
    out.energy = energy_E(f).total;
    out.identity_residual = std::abs(out.energy - split) / (1.0 + std::abs(out.energy));
    out.pass = out.energy > 0.0;
    double nfx = lebesgue_norm(apply_multiplier(derivative_multiplier(), f), 2);
    out.C = out.pass ? nfx / std::sqrt(out.energy) : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace dnlslab
