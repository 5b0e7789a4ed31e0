#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dnlslab {

// Exact rational on int64 with overflow checks. The symbolic layer never
// produces large numerators (denominators stay below a few thousand), so a
// checked fixed-width type is enough; any overflow throws instead of
// silently wrapping.
class Rational {
public:
    Rational() = default;
    Rational(long long num) : num_(num), den_(1) {}
    Rational(long long num, long long den) : num_(num), den_(den) { normalize(); }

    long long num() const { return num_; }
    long long den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_one() const { return num_ == 1 && den_ == 1; }
    int sign() const { return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0); }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend Rational operator-(const Rational& a) { return Rational(checked(-static_cast<__int128>(a.num_)), a.den_, raw_tag{}); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        __int128 n = static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_;
        __int128 d = static_cast<__int128>(a.den_) * b.den_;
        return make(n, d);
    }
    friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
    friend Rational operator*(const Rational& a, const Rational& b) {
        __int128 n = static_cast<__int128>(a.num_) * b.num_;
        __int128 d = static_cast<__int128>(a.den_) * b.den_;
        return make(n, d);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("Rational: division by zero");
        __int128 n = static_cast<__int128>(a.num_) * b.den_;
        __int128 d = static_cast<__int128>(a.den_) * b.num_;
        return make(n, d);
    }

    Rational& operator+=(const Rational& b) { return *this = *this + b; }
    Rational& operator-=(const Rational& b) { return *this = *this - b; }
    Rational& operator*=(const Rational& b) { return *this = *this * b; }
    Rational& operator/=(const Rational& b) { return *this = *this / b; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
    }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    struct raw_tag {};
    Rational(long long n, long long d, raw_tag) : num_(n), den_(d) {}

    static long long checked(__int128 v) {
        if (v > INT64_MAX || v < INT64_MIN) throw std::overflow_error("Rational: int64 overflow");
        return static_cast<long long>(v);
    }
    static Rational make(__int128 n, __int128 d) {
        if (d == 0) throw std::domain_error("Rational: zero denominator");
        if (d < 0) { n = -n; d = -d; }
        __int128 an = n < 0 ? -n : n;
        __int128 g = gcd128(an, d);
        if (g > 1) { n /= g; d /= g; }
        return Rational(checked(n), checked(d), raw_tag{});
    }
    static __int128 gcd128(__int128 a, __int128 b) {
        while (b != 0) { __int128 t = a % b; a = b; b = t; }
        return a == 0 ? 1 : a;
    }
    void normalize() {
        if (den_ == 0) throw std::domain_error("Rational: zero denominator");
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        long long g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
        if (num_ == 0) den_ = 1;
    }

    long long num_ = 0;
    long long den_ = 1;
};

// Coefficient of a symbol term: a Gaussian rational re + im*i. Multiplier
// coefficients in the derivation are always on one axis (a rational times a
// power of i, tracked mod 4), but sums of mixed-parity terms need the full
// Gaussian closure.
class Coeff {
public:
    Coeff() = default;
    Coeff(long long n) : re_(n) {}
    Coeff(const Rational& re) : re_(re) {}
    Coeff(const Rational& re, const Rational& im) : re_(re), im_(im) {}

    // q * i^p with p mod 4
    static Coeff i_power(const Rational& q, int p) {
        p = ((p % 4) + 4) % 4;
        switch (p) {
            case 0: return Coeff(q);
            case 1: return Coeff(Rational(0), q);
            case 2: return Coeff(-q);
            default: return Coeff(Rational(0), -q);
        }
    }
    static Coeff i() { return i_power(Rational(1), 1); }

    const Rational& re() const { return re_; }
    const Rational& im() const { return im_; }
    bool is_zero() const { return re_.is_zero() && im_.is_zero(); }

    friend Coeff operator-(const Coeff& a) { return Coeff(-a.re_, -a.im_); }
    friend Coeff operator+(const Coeff& a, const Coeff& b) { return Coeff(a.re_ + b.re_, a.im_ + b.im_); }
    friend Coeff operator-(const Coeff& a, const Coeff& b) { return Coeff(a.re_ - b.re_, a.im_ - b.im_); }
    friend Coeff operator*(const Coeff& a, const Coeff& b) {
        return Coeff(a.re_ * b.re_ - a.im_ * b.im_, a.re_ * b.im_ + a.im_ * b.re_);
    }
    friend Coeff operator/(const Coeff& a, const Coeff& b) {
        Rational n2 = b.re_ * b.re_ + b.im_ * b.im_;
        if (n2.is_zero()) throw std::domain_error("Coeff: division by zero");
        return Coeff((a.re_ * b.re_ + a.im_ * b.im_) / n2, (a.im_ * b.re_ - a.re_ * b.im_) / n2);
    }
    Coeff& operator+=(const Coeff& b) { return *this = *this + b; }
    Coeff& operator*=(const Coeff& b) { return *this = *this * b; }

    friend bool operator==(const Coeff& a, const Coeff& b) { return a.re_ == b.re_ && a.im_ == b.im_; }
    friend bool operator!=(const Coeff& a, const Coeff& b) { return !(a == b); }

    // Prints on-axis values as q or q*i, general values as (re)+(im)i.
    std::string str() const {
        if (im_.is_zero()) return re_.str();
        if (re_.is_zero()) return im_.str() + "*i";
        return "(" + re_.str() + "+" + im_.str() + "*i)";
    }

private:
    Rational re_;
    Rational im_;
};

}  // namespace dnlslab
