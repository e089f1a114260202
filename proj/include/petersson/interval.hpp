#pragma once

// Closed real intervals with MPFR endpoints and outward rounding.
// Used wherever a yes/no answer depends on a transcendental quantity
// (pi, cube roots, square roots of embeddings).

#include <mpfr.h>
#include <gmpxx.h>

#include <algorithm>
#include <limits>
#include <string>
#include <utility>

#include "errors.hpp"

namespace petersson {

class Interval {
public:
    static constexpr mpfr_prec_t default_prec = 320;

    explicit Interval(mpfr_prec_t prec = default_prec) : prec_(prec) {
        mpfr_init2(lo_, prec);
        mpfr_init2(hi_, prec);
        mpfr_set_zero(lo_, 1);
        mpfr_set_zero(hi_, 1);
    }
    Interval(const Interval& o) : Interval(o.prec_) {
        mpfr_set(lo_, o.lo_, MPFR_RNDD);
        mpfr_set(hi_, o.hi_, MPFR_RNDU);
    }
    Interval(Interval&& o) noexcept : Interval(o.prec_) {
        mpfr_swap(lo_, o.lo_);
        mpfr_swap(hi_, o.hi_);
    }
    Interval& operator=(Interval o) noexcept {
        std::swap(prec_, o.prec_);
        mpfr_swap(lo_, o.lo_);
        mpfr_swap(hi_, o.hi_);
        return *this;
    }
    ~Interval() {
        mpfr_clear(lo_);
        mpfr_clear(hi_);
    }

    static Interval from_rational(const mpq_class& q, mpfr_prec_t prec = default_prec) {
        Interval r(prec);
        mpfr_set_q(r.lo_, q.get_mpq_t(), MPFR_RNDD);
        mpfr_set_q(r.hi_, q.get_mpq_t(), MPFR_RNDU);
        return r;
    }
    static Interval from_bounds(const mpq_class& lo, const mpq_class& hi,
                                mpfr_prec_t prec = default_prec) {
        Interval r(prec);
        mpfr_set_q(r.lo_, lo.get_mpq_t(), MPFR_RNDD);
        mpfr_set_q(r.hi_, hi.get_mpq_t(), MPFR_RNDU);
        return r;
    }
    static Interval from_long(long v, mpfr_prec_t prec = default_prec) {
        return from_rational(mpq_class(v), prec);
    }
    static Interval pi(mpfr_prec_t prec = default_prec) {
        Interval r(prec);
        mpfr_const_pi(r.lo_, MPFR_RNDD);
        mpfr_const_pi(r.hi_, MPFR_RNDU);
        return r;
    }

    mpfr_prec_t prec() const { return prec_; }
    const mpfr_t& lo() const { return lo_; }
    const mpfr_t& hi() const { return hi_; }

    long double lo_ld() const { return mpfr_get_ld(lo_, MPFR_RNDD); }
    long double hi_ld() const { return mpfr_get_ld(hi_, MPFR_RNDU); }
    long double mid_ld() const {
        Interval m(*this);
        mpfr_add(m.lo_, lo_, hi_, MPFR_RNDN);
        mpfr_div_2ui(m.lo_, m.lo_, 1, MPFR_RNDN);
        return mpfr_get_ld(m.lo_, MPFR_RNDN);
    }
    double mid() const { return static_cast<double>(mid_ld()); }

    // upper bound on (hi-lo)/min|x|; infinity when the interval touches 0
    double rel_width() const {
        if (contains_zero()) return std::numeric_limits<double>::infinity();
        mpfr_t w, m;
        mpfr_inits2(prec_, w, m, (mpfr_ptr)nullptr);
        mpfr_sub(w, hi_, lo_, MPFR_RNDU);
        if (mpfr_sgn(lo_) > 0) mpfr_set(m, lo_, MPFR_RNDD);
        else mpfr_neg(m, hi_, MPFR_RNDD);
        mpfr_div(w, w, m, MPFR_RNDU);
        double r = mpfr_get_d(w, MPFR_RNDU);
        mpfr_clears(w, m, (mpfr_ptr)nullptr);
        return r;
    }

    bool contains_zero() const { return mpfr_sgn(lo_) <= 0 && mpfr_sgn(hi_) >= 0; }
    bool certainly_positive() const { return mpfr_sgn(lo_) > 0; }
    bool certainly_negative() const { return mpfr_sgn(hi_) < 0; }
    // a < b for every pair of points
    friend bool certainly_less(const Interval& a, const Interval& b) {
        return mpfr_less_p(a.hi_, b.lo_);
    }
    bool contains(const Interval& o) const {
        return mpfr_lessequal_p(lo_, o.lo_) && mpfr_greaterequal_p(hi_, o.hi_);
    }

    friend Interval operator+(const Interval& a, const Interval& b) {
        Interval r(std::max(a.prec_, b.prec_));
        mpfr_add(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
        mpfr_add(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
        return r;
    }
    friend Interval operator-(const Interval& a, const Interval& b) {
        Interval r(std::max(a.prec_, b.prec_));
        mpfr_sub(r.lo_, a.lo_, b.hi_, MPFR_RNDD);
        mpfr_sub(r.hi_, a.hi_, b.lo_, MPFR_RNDU);
        return r;
    }
    Interval operator-() const {
        Interval r(prec_);
        mpfr_neg(r.lo_, hi_, MPFR_RNDD);
        mpfr_neg(r.hi_, lo_, MPFR_RNDU);
        return r;
    }
    friend Interval operator*(const Interval& a, const Interval& b) {
        mpfr_prec_t p = std::max(a.prec_, b.prec_);
        Interval r(p);
        mpfr_t t;
        mpfr_init2(t, p);
        const mpfr_t* xs[2] = {&a.lo_, &a.hi_};
        const mpfr_t* ys[2] = {&b.lo_, &b.hi_};
        bool first = true;
        for (auto x : xs)
            for (auto y : ys) {
                mpfr_mul(t, *x, *y, MPFR_RNDD);
                if (first || mpfr_less_p(t, r.lo_)) mpfr_set(r.lo_, t, MPFR_RNDD);
                mpfr_mul(t, *x, *y, MPFR_RNDU);
                if (first || mpfr_greater_p(t, r.hi_)) mpfr_set(r.hi_, t, MPFR_RNDU);
                first = false;
            }
        mpfr_clear(t);
        return r;
    }
    friend Interval operator/(const Interval& a, const Interval& b) {
        if (b.contains_zero()) throw ValidationError("interval division by an interval containing 0");
        mpfr_prec_t p = std::max(a.prec_, b.prec_);
        Interval inv(p);
        mpfr_ui_div(inv.lo_, 1, b.hi_, MPFR_RNDD);
        mpfr_ui_div(inv.hi_, 1, b.lo_, MPFR_RNDU);
        return a * inv;
    }

    Interval sqrt() const {
        if (mpfr_sgn(hi_) < 0) throw ValidationError("sqrt of a negative interval");
        Interval r(prec_);
        if (mpfr_sgn(lo_) <= 0) mpfr_set_zero(r.lo_, 1);
        else mpfr_sqrt(r.lo_, lo_, MPFR_RNDD);
        mpfr_sqrt(r.hi_, hi_, MPFR_RNDU);
        return r;
    }
    Interval cbrt() const {
        Interval r(prec_);
        mpfr_cbrt(r.lo_, lo_, MPFR_RNDD);
        mpfr_cbrt(r.hi_, hi_, MPFR_RNDU);
        return r;
    }
    Interval abs() const {
        if (mpfr_sgn(lo_) >= 0) return *this;
        if (mpfr_sgn(hi_) <= 0) return -*this;
        Interval r(prec_);
        mpfr_set_zero(r.lo_, 1);
        if (mpfr_cmpabs(lo_, hi_) > 0) mpfr_neg(r.hi_, lo_, MPFR_RNDU);
        else mpfr_set(r.hi_, hi_, MPFR_RNDU);
        return r;
    }

    std::string str(int digits = 20) const {
        char buf[256];
        mpfr_snprintf(buf, sizeof buf, "[%.*RDg, %.*RUg]", digits, lo_, digits, hi_);
        return buf;
    }

private:
    mpfr_prec_t prec_;
    mpfr_t lo_, hi_;
};

// Integer floor(sqrt(n)) test helper shared by field code.
inline mpz_class isqrt(const mpz_class& n) {
    mpz_class r;
    mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
    return r;
}

}  // namespace petersson
