#pragma once

// Exact arithmetic in Q and Q(sqrt d).  Elements are a + b*w over the
// integral basis {1, w}: w = sqrt d when d = 2,3 mod 4, w = (1+sqrt d)/2
// when d = 1 mod 4.  A radicand of 0 denotes Q itself.

#include <gmpxx.h>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "interval.hpp"

namespace petersson {

class FieldElement {
public:
    FieldElement() = default;
    FieldElement(long d, const mpq_class& a, const mpq_class& b = 0) : a_(a), b_(b), d_(d) {
        a_.canonicalize();
        b_.canonicalize();
        if (d_ == 0 && b_ != 0) throw ValidationError("rational element with a w-coordinate");
    }

    const mpq_class& a() const { return a_; }
    const mpq_class& b() const { return b_; }
    long radicand() const { return d_; }
    bool half() const { return d_ != 0 && ((d_ % 4) + 4) % 4 == 1; }
    bool is_zero() const { return a_ == 0 && b_ == 0; }
    bool is_rational() const { return b_ == 0; }
    bool is_integral() const { return a_.get_den() == 1 && b_.get_den() == 1; }

    // x = u + v*sqrt(d)
    mpq_class u() const { return half() ? mpq_class(a_ + b_ / 2) : a_; }
    mpq_class v() const { return half() ? mpq_class(b_ / 2) : b_; }

    FieldElement conj() const {
        if (half()) return {d_, a_ + b_, -b_};
        return {d_, a_, -b_};
    }
    mpq_class trace() const {
        if (d_ == 0) return a_;
        return half() ? mpq_class(2 * a_ + b_) : mpq_class(2 * a_);
    }
    mpq_class norm() const {
        if (d_ == 0) return a_;
        if (half()) return a_ * a_ + a_ * b_ + b_ * b_ * quarter(1 - d_);
        return a_ * a_ - d_ * b_ * b_;
    }

    friend FieldElement operator+(const FieldElement& x, const FieldElement& y) {
        long d = unify(x, y);
        return {d, x.a_ + y.a_, x.b_ + y.b_};
    }
    friend FieldElement operator-(const FieldElement& x, const FieldElement& y) {
        long d = unify(x, y);
        return {d, x.a_ - y.a_, x.b_ - y.b_};
    }
    FieldElement operator-() const { return {d_, -a_, -b_}; }
    friend FieldElement operator*(const FieldElement& x, const FieldElement& y) {
        long d = unify(x, y);
        mpq_class bb = x.b_ * y.b_;
        mpq_class a = x.a_ * y.a_;
        mpq_class b = x.a_ * y.b_ + x.b_ * y.a_;
        if (bb != 0) {
            if (((d % 4) + 4) % 4 == 1) {
                a += bb * quarter(d - 1);
                b += bb;
            } else {
                a += bb * d;
            }
        }
        return {d, a, b};
    }
    friend FieldElement operator/(const FieldElement& x, const FieldElement& y) {
        if (y.is_zero()) throw ValidationError("division by zero in field");
        if (y.b_ == 0) {
            long d = unify(x, y);
            return {d, x.a_ / y.a_, x.b_ / y.a_};
        }
        FieldElement num = x * y.conj();
        mpq_class n = y.norm();
        return {num.d_, num.a_ / n, num.b_ / n};
    }
    FieldElement& operator+=(const FieldElement& o) { return *this = *this + o; }
    FieldElement& operator-=(const FieldElement& o) { return *this = *this - o; }
    FieldElement& operator*=(const FieldElement& o) { return *this = *this * o; }
    FieldElement& operator/=(const FieldElement& o) { return *this = *this / o; }

    friend bool operator==(const FieldElement& x, const FieldElement& y) {
        return x.a_ == y.a_ && x.b_ == y.b_ && (x.b_ == 0 || x.d_ == y.d_);
    }
    friend bool operator!=(const FieldElement& x, const FieldElement& y) { return !(x == y); }

    FieldElement pow(long e) const {
        if (e < 0) return FieldElement(d_, 1) / pow(-e);
        FieldElement r(d_, 1), base = *this;
        while (e) {
            if (e & 1) r *= base;
            base *= base;
            e >>= 1;
        }
        return r;
    }

    // exact sign of sigma_j(x), j in {1,2}; sigma_1 takes sqrt d > 0
    int sign(int j = 1) const {
        if (d_ == 0 || b_ == 0) return sgn(a_);
        mpq_class U = u(), V = v();
        if (j == 2) V = -V;
        int su = sgn(U), sv = sgn(V);
        if (su >= 0 && sv >= 0) return (su || sv) ? 1 : 0;
        if (su <= 0 && sv <= 0) return -1;
        int c = cmp(mpq_class(U * U), mpq_class(V * V * d_));
        return su > 0 ? c : -c;
    }

    // floor(sigma_1(x)) exactly
    mpz_class floor1() const {
        if (b_ == 0) {
            mpz_class q;
            mpz_fdiv_q(q.get_mpz_t(), a_.get_num_mpz_t(), a_.get_den_mpz_t());
            return q;
        }
        double approx = u().get_d() + v().get_d() * std::sqrt(static_cast<double>(d_));
        mpz_class n(std::floor(approx));
        while ((*this - FieldElement(d_, mpq_class(n))).sign(1) < 0) --n;
        while ((*this - FieldElement(d_, mpq_class(n + 1))).sign(1) >= 0) ++n;
        return n;
    }

    // Rough double value of sigma_j(x); decisions never use this.
    double approx(int j = 1) const {
        if (d_ == 0) return a_.get_d();
        double s = std::sqrt(static_cast<double>(d_));
        return u().get_d() + (j == 1 ? 1 : -1) * v().get_d() * s;
    }

    std::string str() const {
        if (b_ == 0) return a_.get_str();
        std::string s;
        if (a_ != 0) s = a_.get_str();
        mpq_class b = b_;
        if (b < 0) {
            s += "-";
            b = -b;
        } else if (!s.empty()) {
            s += "+";
        }
        if (b != 1) s += b.get_str() + "*";
        return s + "w";
    }

private:
    static mpq_class quarter(long n) {
        mpq_class q(n, 4);
        q.canonicalize();
        return q;
    }
    static long unify(const FieldElement& x, const FieldElement& y) {
        if (x.d_ == y.d_) return x.d_;
        if (x.d_ == 0) return y.d_;
        if (y.d_ == 0) return x.d_;
        throw ValidationError("elements of different fields combined");
    }

    mpq_class a_{0}, b_{0};
    long d_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const FieldElement& x) { return os << x.str(); }

struct TotallyRealField {
    int r = 1;
    long d = 0;          // radicand, 0 for Q
    mpz_class disc{1};   // d_F
    FieldElement eps;    // fundamental unit (r = 2), eps > 1
    int eps_norm = 1;
    FieldElement d_gen;  // canonical generator of the different
    bool d_gen_totally_positive = true;
    mpq_class sqrt_d_lo, sqrt_d_hi;

    bool half() const { return r == 2 && d % 4 == 1; }
    FieldElement element(const mpq_class& a, const mpq_class& b = 0) const {
        if (r == 1 && b != 0) throw ValidationError("Q has no w coordinate");
        return {r == 1 ? 0 : d, a, b};
    }
    FieldElement one() const { return element(1); }
    FieldElement zero() const { return element(0); }
    FieldElement w() const { return element(0, 1); }
    FieldElement sqrt_d() const { return half() ? element(-1, 2) : element(0, 1); }
    // generator of the totally positive units
    FieldElement eps_plus() const { return eps_norm == -1 ? eps * eps : eps; }
    FieldElement adopt(const FieldElement& x) const {
        if (x.radicand() == (r == 1 ? 0 : d)) return x;
        if (x.is_rational()) return element(x.a());
        throw ValidationError("element belongs to a different field");
    }
};

inline bool is_squarefree(long n) {
    if (n < 1) return false;
    for (long p = 2; p * p <= n; ++p)
        if (n % (p * p) == 0) return false;
    return true;
}

inline bool is_totally_positive(const TotallyRealField& F, const FieldElement& x) {
    return x.sign(1) > 0 && (F.r == 1 || x.sign(2) > 0);
}

// Unit u with x*u in canonical form: sigma_1 > 0, totally positive when
// some associate is, and |sigma_1/sigma_2| reduced into [1, eps_+^2).
inline FieldElement canonical_associate(const TotallyRealField& F, FieldElement x) {
    x = F.adopt(x);
    if (x.is_zero()) return x;
    if (x.sign(1) < 0) x = -x;
    if (F.r == 1) return x;
    if (x.sign(2) < 0 && F.eps_norm == -1) x *= F.eps;
    const FieldElement ep = F.eps_plus();
    // |sigma_1| >= |sigma_2|  <=>  u*v >= 0
    auto wide = [](const FieldElement& y) { return sgn(y.u()) * sgn(y.v()) >= 0; };
    while (!wide(x)) x *= ep;
    while (wide(x / ep)) x /= ep;
    return x;
}

inline bool is_unit(const FieldElement& x) {
    return !x.is_zero() && x.is_integral() && abs(x.norm()) == 1;
}

// x lies in the inverse different iff x*d_gen is integral
inline bool in_inverse_different(const TotallyRealField& F, const FieldElement& x) {
    return (F.adopt(x) * F.d_gen).is_integral();
}

namespace detail {

inline FieldElement fundamental_unit(const TotallyRealField& F) {
    // continued fraction of w; unit candidates p - q*conj(w)
    FieldElement x = F.w();
    const FieldElement wbar = F.w().conj();
    mpz_class p0 = 1, q0 = 0, p1, q1;
    mpz_class a = x.floor1();
    p1 = a;
    q1 = 1;
    for (int it = 0; it < 100000; ++it) {
        FieldElement cand = F.element(mpq_class(p1)) - F.element(mpq_class(q1)) * wbar;
        if (abs(cand.norm()) == 1 && cand.sign(1) > 0 && (cand - F.one()).sign(1) > 0)
            return cand;
        x = F.one() / (x - F.element(mpq_class(a)));
        a = x.floor1();
        mpz_class p2 = a * p1 + p0, q2 = a * q1 + q0;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    throw ResourceError("continued fraction did not produce a unit");
}

}  // namespace detail

inline TotallyRealField make_field(int r, long d = 0) {
    TotallyRealField F;
    if (r == 1) {
        F.r = 1;
        F.d = 0;
        F.disc = 1;
        F.eps = F.element(-1);
        F.eps_norm = -1;
        F.d_gen = F.one();
        F.sqrt_d_lo = F.sqrt_d_hi = 1;
        return F;
    }
    require(r == 2, "degree must be 1 or 2");
    require(d >= 2 && is_squarefree(d), "radicand must be squarefree and >= 2");
    F.r = 2;
    F.d = d;
    F.disc = (d % 4 == 1) ? mpz_class(d) : mpz_class(4 * d);
    // sqrt d to 2^-128 absolute, i.e. better than 2^-100 relative
    mpz_class scaled = mpz_class(d) << 256;
    mpz_class s = isqrt(scaled);
    F.sqrt_d_lo = mpq_class(s, mpz_class(1) << 128);
    F.sqrt_d_hi = mpq_class(s + 1, mpz_class(1) << 128);
    F.sqrt_d_lo.canonicalize();
    F.sqrt_d_hi.canonicalize();
    F.eps = detail::fundamental_unit(F);
    F.eps_norm = F.eps.norm() == 1 ? 1 : -1;
    FieldElement g = F.half() ? F.sqrt_d() : F.element(2) * F.sqrt_d();
    F.d_gen = canonical_associate(F, g);
    F.d_gen_totally_positive = is_totally_positive(F, F.d_gen);
    return F;
}

// Enclosure of sigma_j(x) with relative width <= 2^-60 (exact when rational).
inline Interval embed(const TotallyRealField& F, const FieldElement& x0, int j,
                      mpfr_prec_t prec = Interval::default_prec) {
    require(j >= 1 && j <= F.r, "embedding index out of range");
    FieldElement x = F.adopt(x0);
    if (x.is_rational()) return Interval::from_rational(x.a(), prec);
    for (mpfr_prec_t p = prec;; p *= 2) {
        Interval sd = Interval::from_long(F.d, p).sqrt();
        Interval v = Interval::from_rational(x.v(), p) * sd;
        Interval r = j == 1 ? Interval::from_rational(x.u(), p) + v
                            : Interval::from_rational(x.u(), p) - v;
        if (r.rel_width() <= std::ldexp(1.0, -60)) return r;
        if (p > 1 << 16) throw ResourceError("embedding enclosure did not converge");
    }
}

struct UnitData {
    std::vector<FieldElement> U;
    std::vector<FieldElement> U_plus;
};

inline UnitData unit_class_representatives(const TotallyRealField& F) {
    UnitData out;
    if (F.r == 1) {
        out.U = {F.one(), F.element(-1)};
    } else {
        out.U = {F.one(), F.element(-1), F.eps, -F.eps};
    }
    for (const auto& u : out.U)
        if (is_totally_positive(F, u)) out.U_plus.push_back(u);
    return out;
}

// Parse "a", "a/b", "b*w", "a+b*w", "-w", "3/2-1/2*w".
inline FieldElement parse_element(const TotallyRealField& F, const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    require(!s.empty(), "empty field element");
    mpq_class a = 0, b = 0;
    size_t i = 0;
    while (i < s.size()) {
        int sign = 1;
        if (s[i] == '+' || s[i] == '-') {
            sign = s[i] == '-' ? -1 : 1;
            ++i;
        }
        size_t j = i;
        while (j < s.size() && s[j] != '+' && s[j] != '-') ++j;
        std::string term = s.substr(i, j - i);
        require(!term.empty(), "malformed field element '" + text + "'");
        bool has_w = false;
        if (term.back() == 'w') {
            has_w = true;
            term.pop_back();
            if (!term.empty() && term.back() == '*') term.pop_back();
            if (term.empty()) term = "1";
        }
        mpq_class q;
        try {
            for (char c : term)
                require(std::isdigit(static_cast<unsigned char>(c)) || c == '/',
                        "malformed field element '" + text + "'");
            q = mpq_class(term);
            if (q.get_den() == 0) throw ValidationError("zero denominator in '" + text + "'");
            q.canonicalize();
        } catch (const std::invalid_argument&) {
            throw ValidationError("malformed field element '" + text + "'");
        }
        (has_w ? b : a) += sign * q;
        i = j;
    }
    return F.element(a, b);
}

}  // namespace petersson
