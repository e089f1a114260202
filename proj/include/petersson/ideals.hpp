#pragma once

// Principal ideals in class-number-one fields, prime splitting,
// valuations, psi(N) and the diagonal indicator T-hat.

#include <gmpxx.h>

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "field.hpp"

namespace petersson {

struct PrincipalIdeal {
    FieldElement gen;  // canonical associate
    mpq_class norm;    // |Nm(gen)|

    friend bool operator==(const PrincipalIdeal& x, const PrincipalIdeal& y) { return x.gen == y.gen; }
    friend bool operator!=(const PrincipalIdeal& x, const PrincipalIdeal& y) { return !(x == y); }
};

inline PrincipalIdeal make_ideal(const TotallyRealField& F, const FieldElement& x) {
    require(!x.is_zero(), "the zero ideal is not supported");
    FieldElement g = canonical_associate(F, x);
    return {g, abs(g.norm())};
}

inline PrincipalIdeal ideal_product(const TotallyRealField& F, const PrincipalIdeal& a,
                                   const PrincipalIdeal& b) {
    return make_ideal(F, a.gen * b.gen);
}

inline bool is_integral_ideal(const PrincipalIdeal& I) { return I.gen.is_integral(); }

// a | b for integral ideals
inline bool divides(const PrincipalIdeal& a, const PrincipalIdeal& b) {
    return (b.gen / a.gen).is_integral();
}

inline std::vector<std::pair<mpz_class, int>> factor_integer(mpz_class n) {
    std::vector<std::pair<mpz_class, int>> out;
    n = abs(n);
    require(n != 0, "cannot factor 0");
    for (mpz_class p = 2; p * p <= n; ++p) {
        if (n % p != 0) continue;
        int e = 0;
        while (n % p == 0) {
            n /= p;
            ++e;
        }
        out.push_back({p, e});
    }
    if (n > 1) out.push_back({n, 1});
    return out;
}

enum class Splitting { inert, split, ramified };

struct PrimeIdeal {
    mpz_class p;
    Splitting kind = Splitting::inert;
    mpz_class root;  // root of w's minimal polynomial mod p (split/ramified); prime = (p, w - root)
    mpz_class norm;
    int e = 1;       // ramification index

    // membership of the integral element a + b w
    bool contains(const FieldElement& y) const {
        mpz_class a = y.a().get_num(), b = y.b().get_num();
        if (kind == Splitting::inert) return a % p == 0 && b % p == 0;
        mpz_class v = a + b * root;
        return mpz_divisible_p(v.get_mpz_t(), p.get_mpz_t()) != 0;
    }
    friend bool operator==(const PrimeIdeal& x, const PrimeIdeal& y) {
        return x.p == y.p && x.kind == y.kind && x.root == y.root;
    }
};

namespace detail {

// minimal polynomial of w: X^2 + c1 X + c0
inline std::pair<mpz_class, mpz_class> minpoly(const TotallyRealField& F) {
    if (F.half()) return {mpz_class(-1), mpz_class(-(F.d - 1) / 4)};
    return {mpz_class(0), mpz_class(-F.d)};
}

inline mpz_class mod(const mpz_class& a, const mpz_class& m) {
    mpz_class r;
    mpz_mod(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
    return r;
}

// square root of a mod odd prime p (Tonelli-Shanks); a must be a residue
inline mpz_class sqrt_mod(const mpz_class& a0, const mpz_class& p) {
    mpz_class a = mod(a0, p);
    if (a == 0) return 0;
    mpz_class q = p - 1;
    unsigned long s = 0;
    while (mpz_even_p(q.get_mpz_t())) {
        q >>= 1;
        ++s;
    }
    mpz_class z = 2;
    while (mpz_legendre(z.get_mpz_t(), p.get_mpz_t()) != -1) ++z;
    mpz_class c, x, t, b;
    mpz_powm(c.get_mpz_t(), z.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
    mpz_class e = (q + 1) / 2;
    mpz_powm(x.get_mpz_t(), a.get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
    mpz_powm(t.get_mpz_t(), a.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
    unsigned long m = s;
    while (t != 1) {
        unsigned long i = 0;
        mpz_class tt = t;
        while (tt != 1) {
            tt = tt * tt % p;
            ++i;
        }
        b = c;
        for (unsigned long k = 0; k + 1 < m - i; ++k) b = b * b % p;
        x = x * b % p;
        c = b * b % p;
        t = t * c % p;
        m = i;
    }
    return x;
}

inline std::vector<mpz_class> minpoly_roots(const TotallyRealField& F, const mpz_class& p) {
    auto [c1, c0] = minpoly(F);
    std::vector<mpz_class> roots;
    if (p == 2) {
        for (int r = 0; r < 2; ++r)
            if (mod(r * r + c1 * r + c0, p) == 0) roots.push_back(r);
        return roots;
    }
    // X = (-c1 +- sqrt(c1^2 - 4 c0)) / 2
    mpz_class disc = mod(c1 * c1 - 4 * c0, p);
    if (disc != 0 && mpz_legendre(disc.get_mpz_t(), p.get_mpz_t()) != 1) return roots;
    mpz_class s = sqrt_mod(disc, p), inv2 = (p + 1) / 2;
    roots.push_back(mod((-c1 + s) * inv2, p));
    mpz_class r2 = mod((-c1 - s) * inv2, p);
    if (r2 != roots[0]) roots.push_back(r2);
    return roots;
}

inline int vp(mpz_class n, const mpz_class& p) {
    if (n == 0) return 1 << 28;
    int e = 0;
    while (mpz_divisible_p(n.get_mpz_t(), p.get_mpz_t())) {
        n /= p;
        ++e;
    }
    return e;
}

}  // namespace detail

inline std::vector<PrimeIdeal> primes_over(const TotallyRealField& F, const mpz_class& p) {
    require(p >= 2 && mpz_probab_prime_p(p.get_mpz_t(), 30) > 0, "not a rational prime");
    if (F.r == 1) return {PrimeIdeal{p, Splitting::inert, 0, p, 1}};
    int k = mpz_kronecker(F.disc.get_mpz_t(), p.get_mpz_t());
    if (k == -1) return {PrimeIdeal{p, Splitting::inert, 0, p * p, 1}};
    auto roots = detail::minpoly_roots(F, p);
    if (k == 0) return {PrimeIdeal{p, Splitting::ramified, roots.at(0), p, 2}};
    return {PrimeIdeal{p, Splitting::split, roots.at(0), p, 1},
            PrimeIdeal{p, Splitting::split, roots.at(1), p, 1}};
}

// v_P(x) for nonzero x in F
inline int valuation(const TotallyRealField& F, const PrimeIdeal& P, const FieldElement& x0) {
    FieldElement x = F.adopt(x0);
    require(!x.is_zero(), "valuation of 0");
    mpz_class den;
    mpz_lcm(den.get_mpz_t(), x.a().get_den_mpz_t(), x.b().get_den_mpz_t());
    int vden = P.e * detail::vp(den, P.p);
    mpz_class a = x.a().get_num() * (den / x.a().get_den());
    mpz_class b = x.b().get_num() * (den / x.b().get_den());
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    int c = detail::vp(g, P.p);
    mpz_class pc;
    mpz_pow_ui(pc.get_mpz_t(), P.p.get_mpz_t(), c);
    a /= pc;
    b /= pc;
    int v = 0;
    if (P.kind == Splitting::inert) {
        v = c;
    } else if (P.kind == Splitting::ramified) {
        v = 2 * c + (detail::mod(a + b * P.root, P.p) == 0 ? 1 : 0);
    } else {
        // Hensel-lift the root far enough to see the full valuation
        FieldElement y = F.element(mpq_class(a), mpq_class(b));
        int K = detail::vp(y.norm().get_num(), P.p) + 1;
        mpz_class pk;
        mpz_pow_ui(pk.get_mpz_t(), P.p.get_mpz_t(), K);
        auto [c1, c0] = detail::minpoly(F);
        mpz_class r = P.root;
        for (int it = 0; it < 2 * K + 2; ++it) {
            mpz_class f = r * r + c1 * r + c0, fp = 2 * r + c1, inv;
            mpz_invert(inv.get_mpz_t(), fp.get_mpz_t(), pk.get_mpz_t());
            r = detail::mod(r - f * inv, pk);
        }
        v = c + std::min(K, detail::vp(detail::mod(a + b * r, pk), P.p));
    }
    return v - vden;
}

inline std::vector<std::pair<PrimeIdeal, int>> factor_ideal(const TotallyRealField& F,
                                                            const PrincipalIdeal& I) {
    require(is_integral_ideal(I), "factor_ideal needs an integral ideal");
    std::vector<std::pair<PrimeIdeal, int>> out;
    if (I.norm == 1) return out;
    for (auto& [p, e] : factor_integer(I.norm.get_num())) {
        (void)e;
        for (auto& P : primes_over(F, p)) {
            int v = valuation(F, P, I.gen);
            if (v > 0) out.push_back({P, v});
        }
    }
    return out;
}

// Calls fn(x, y, element) for every x*g + y*g*w with |sigma_j| <= R_j (doubles
// with a safety margin; callers make exact decisions on the element).
inline void for_each_lattice_point_in_box(const TotallyRealField& F, const FieldElement& g,
                                          const std::vector<double>& R,
                                          const std::function<void(long, long, const FieldElement&)>& fn,
                                          long max_points = 50'000'000) {
    if (F.r == 1) {
        double step = std::abs(g.a().get_d());
        long n = static_cast<long>(std::floor(R[0] / step)) + 1;
        for (long x = -n; x <= n; ++x) fn(x, 0, g * F.element(x));
        return;
    }
    FieldElement gw = g * F.w();
    long double m00 = g.approx(1), m01 = gw.approx(1), m10 = g.approx(2), m11 = gw.approx(2);
    long double det = m00 * m11 - m01 * m10;
    long double i00 = m11 / det, i01 = -m01 / det, i10 = -m10 / det, i11 = m00 / det;
    long double xb = std::fabs(i00) * R[0] + std::fabs(i01) * R[1];
    long double yb = std::fabs(i10) * R[0] + std::fabs(i11) * R[1];
    long ny = static_cast<long>(std::ceil(yb)) + 1;
    long double span = 0;
    for (long y = -ny; y <= ny; ++y) {
        // x range from the two strip constraints |m00 x + m01 y| <= R0, |m10 x + m11 y| <= R1
        long double lo = -xb - 2, hi = xb + 2;
        for (int j = 0; j < 2; ++j) {
            long double a = j == 0 ? m00 : m10, c = (j == 0 ? m01 : m11) * y, Rj = R[j];
            if (std::fabs(a) < 1e-300L) continue;
            long double t1 = (-Rj - c) / a, t2 = (Rj - c) / a;
            lo = std::max(lo, std::min(t1, t2));
            hi = std::min(hi, std::max(t1, t2));
        }
        long x0 = static_cast<long>(std::floor(lo)) - 1, x1 = static_cast<long>(std::ceil(hi)) + 1;
        if (x1 < x0) continue;
        span += x1 - x0 + 1;
        if (span > max_points) throw ResourceError("lattice box enumeration exceeds the point budget");
        for (long x = x0; x <= x1; ++x) fn(x, y, g * F.element(x) + gw * F.element(y));
    }
}

// element of the prime P generating it (class number one); nullopt if none
inline std::optional<FieldElement> prime_generator(const TotallyRealField& F, const PrimeIdeal& P) {
    if (P.kind == Splitting::inert) return F.element(mpq_class(P.p));
    double bound = std::sqrt(P.norm.get_d()) * 1.000001 + 1e-9;
    double eps1 = F.eps.approx(1);
    std::optional<FieldElement> found;
    for_each_lattice_point_in_box(F, F.one(), {bound * eps1, bound}, [&](long, long, const FieldElement& z) {
        if (found || z.is_zero()) return;
        if (abs(z.norm()) == mpq_class(P.norm) && P.contains(z)) found = canonical_associate(F, z);
    });
    return found;
}

inline bool verify_class_number_one(const TotallyRealField& F) {
    if (F.r == 1) return true;
    // primes of norm <= Minkowski bound sqrt(d_F)/2, i.e. 4 Nm^2 <= d_F
    for (mpz_class p = 2; 4 * p * p <= F.disc; ++p) {
        if (!mpz_probab_prime_p(p.get_mpz_t(), 30)) continue;
        for (auto& P : primes_over(F, p)) {
            if (4 * P.norm * P.norm > F.disc) continue;
            if (!prime_generator(F, P)) return false;
        }
    }
    return true;
}

inline bool is_narrow_class_number_one(const TotallyRealField& F) {
    if (F.r == 1) return true;
    if (!verify_class_number_one(F)) throw UnsupportedError("class number is not one");
    return F.eps_norm == -1;
}

struct ClassSolution {
    int t = 1;
    std::vector<PrincipalIdeal> b_list;
    std::vector<FieldElement> eta_list;
};

inline ClassSolution solve_class_equation(const TotallyRealField& F, const PrincipalIdeal& n) {
    if (!verify_class_number_one(F)) throw UnsupportedError("class number is not one");
    FieldElement eta = canonical_associate(F, n.gen);
    if (!is_totally_positive(F, eta))
        throw UnsupportedError("ideal has no totally positive generator (narrow class number > 1)");
    ClassSolution s;
    s.b_list.push_back(make_ideal(F, F.one()));
    s.eta_list.push_back(eta);
    return s;
}

inline mpz_class psi_of_level(const TotallyRealField& F, const PrincipalIdeal& N) {
    require(is_integral_ideal(N), "level must be integral");
    mpz_class psi = 1;
    for (auto& [P, e] : factor_ideal(F, N)) {
        mpz_class q;
        mpz_pow_ui(q.get_mpz_t(), P.norm.get_mpz_t(), e - 1);
        psi *= q * (P.norm + 1);
    }
    return psi;
}

inline std::optional<mpq_class> rational_sqrt(const mpq_class& q) {
    if (q < 0) return std::nullopt;
    if (!mpz_perfect_square_p(q.get_num_mpz_t()) || !mpz_perfect_square_p(q.get_den_mpz_t()))
        return std::nullopt;
    mpz_class n, d;
    mpz_sqrt(n.get_mpz_t(), q.get_num_mpz_t());
    mpz_sqrt(d.get_mpz_t(), q.get_den_mpz_t());
    return mpq_class(n, d);
}

// h with h^2 = t, or nullopt
inline std::optional<FieldElement> field_sqrt(const TotallyRealField& F, const FieldElement& t0) {
    FieldElement t = F.adopt(t0);
    if (F.r == 1) {
        auto s = rational_sqrt(t.a());
        if (!s) return std::nullopt;
        return F.element(*s);
    }
    // h = alpha + beta sqrt d with N = Nm h, T = Tr h: T^2 = Tr t + 2N, T^2 - 4N = 4 beta^2 d
    auto rootN = rational_sqrt(t.norm());
    if (!rootN) return std::nullopt;
    for (int sN : {1, -1}) {
        mpq_class N = sN * *rootN;
        auto T = rational_sqrt(t.trace() + 2 * N);
        if (!T) continue;
        mpq_class b2 = (*T * *T - 4 * N) / (4 * F.d);
        auto beta = rational_sqrt(b2);
        if (!beta) continue;
        for (int sb : {1, -1}) {
            FieldElement h = F.element(*T / 2) + F.element(sb * *beta) * F.sqrt_d();
            if (h * h == t) return h;
        }
    }
    return std::nullopt;
}

struct IndicatorResult {
    int value = 0;
    std::optional<FieldElement> s;  // witness when value = 1
};

// T-hat(m1, m2, n): 1 iff m1 m2 = s^2 * eta u for some u in U with s in the
// inverse different and m1/s, m2/s integral.
inline IndicatorResult main_term_indicator_full(const TotallyRealField& F, const FieldElement& m1,
                                                const FieldElement& m2, const PrincipalIdeal& n) {
    FieldElement a = F.adopt(m1), b = F.adopt(m2);
    require(is_totally_positive(F, a) && is_totally_positive(F, b), "m1, m2 must be totally positive");
    require(in_inverse_different(F, a) && in_inverse_different(F, b), "m1, m2 must lie in the inverse different");
    FieldElement eta = canonical_associate(F, n.gen);
    for (const auto& u : unit_class_representatives(F).U) {
        auto s = field_sqrt(F, a * b / (eta * u));
        if (!s) continue;
        if (in_inverse_different(F, *s) && (a / *s).is_integral() && (b / *s).is_integral())
            return {1, *s};
    }
    return {};
}

inline int main_term_indicator(const TotallyRealField& F, const FieldElement& m1, const FieldElement& m2,
                               const PrincipalIdeal& n) {
    return main_term_indicator_full(F, m1, m2, n).value;
}

}  // namespace petersson
