#pragma once

// Kloosterman sums S(m1, m2; n; c) = sum over s1 s2 = n mod c of
// e(Tr((m1 s1 + m2 s2)/c)), kept exactly as integer counts on the Q-th
// roots of unity.

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numeric>
#include <vector>

#include "ideals.hpp"
#include "parallel.hpp"

namespace petersson {

struct KloostermanValue {
    long Q = 1;
    std::vector<long long> coeffs{1};
    std::complex<long double> approx{1, 0};
    long double err = 0;

    long long pair_count() const { return std::accumulate(coeffs.begin(), coeffs.end(), 0LL); }
    bool is_zero() const;
};

namespace detail {

inline const std::vector<mpz_class>& cyclotomic(long Q) {
    static std::mutex mu;
    static std::map<long, std::vector<mpz_class>> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(Q);
    if (it != cache.end()) return it->second;
    // Phi_Q = prod_{e | Q} (x^e - 1)^{mu(Q/e)}
    auto mobius = [](long n) {
        int m = 1;
        for (long p = 2; p * p <= n; ++p)
            if (n % p == 0) {
                n /= p;
                if (n % p == 0) return 0;
                m = -m;
            }
        return n > 1 ? -m : m;
    };
    std::vector<mpz_class> poly{1};
    std::vector<long> divide_by;
    for (long e = 1; e <= Q; ++e) {
        if (Q % e) continue;
        int m = mobius(Q / e);
        if (m == 1) {
            std::vector<mpz_class> next(poly.size() + e, 0);
            for (size_t i = 0; i < poly.size(); ++i) {
                next[i + e] += poly[i];
                next[i] -= poly[i];
            }
            poly.swap(next);
        } else if (m == -1) {
            divide_by.push_back(e);
        }
    }
    for (long e : divide_by) {
        // exact division by x^e - 1
        size_t n = poly.size() - e;
        std::vector<mpz_class> q(n, 0);
        std::vector<mpz_class> r = poly;
        for (size_t i = r.size(); i-- > static_cast<size_t>(e);) {
            mpz_class c = r[i];
            q[i - e] = c;
            r[i] = 0;
            r[i - e] += c;
        }
        poly.swap(q);
    }
    return cache[Q] = poly;
}

// sum c_a x^a == 0 mod Phi_Q
inline bool vanishes_mod_cyclotomic(std::vector<mpz_class> p, long Q) {
    bool all_zero = true;
    for (auto& c : p)
        if (c != 0) all_zero = false;
    if (all_zero) return true;
    const auto& phi = cyclotomic(Q);
    size_t deg = phi.size() - 1;
    for (size_t i = p.size(); i-- > deg;) {
        if (p[i] == 0) continue;
        mpz_class c = p[i];
        for (size_t j = 0; j <= deg; ++j) p[i - deg + j] -= c * phi[j];
    }
    for (size_t i = 0; i < std::min(deg, p.size()); ++i)
        if (p[i] != 0) return false;
    return true;
}

struct ResidueSystem {
    long A = 1, B = 0, D = 1;  // modulus lattice = Z(A,0) + Z(B,D) in (a,b) coordinates
    long k0 = 0, k1 = 0;       // w^2 = k0 + k1 w

    long size() const { return A * D; }
    static long fmod(__int128 x, long m) {
        __int128 r = x % m;
        return static_cast<long>(r < 0 ? r + m : r);
    }
    void reduce(__int128 x, __int128 y, long& ox, long& oy) const {
        __int128 t = y / D;
        if (y % D < 0) --t;
        y -= t * D;
        x -= t * B;
        ox = fmod(x, A);
        oy = static_cast<long>(y);
    }
    long index(long x, long y) const { return x + A * y; }
    void mul(long x1, long y1, long x2, long y2, long& ox, long& oy) const {
        __int128 bb = static_cast<__int128>(y1) * y2;
        __int128 a = static_cast<__int128>(x1) * x2 + bb * k0;
        __int128 b = static_cast<__int128>(x1) * y2 + static_cast<__int128>(x2) * y1 + bb * k1;
        reduce(a, b, ox, oy);
    }
    void pow(long x, long y, mpz_class e, long& ox, long& oy) const {
        long rx, ry, bx = x, by = y;
        reduce(1, 0, rx, ry);
        while (e > 0) {
            if (mpz_odd_p(e.get_mpz_t())) mul(rx, ry, bx, by, rx, ry);
            mul(bx, by, bx, by, bx, by);
            e >>= 1;
        }
        ox = rx;
        oy = ry;
    }
};

inline ResidueSystem residues_mod(const TotallyRealField& F, const FieldElement& q) {
    require(!q.is_zero() && q.is_integral(), "modulus must be a nonzero integral element");
    ResidueSystem R;
    mpz_class N = mpq_class(abs(q.norm())).get_num();
    if (N > mpz_class(1L << 40)) throw ResourceError("modulus norm too large for residue enumeration");
    if (F.r == 1) {
        R.A = mpz_class(abs(q.a().get_num())).get_si();
        return R;
    }
    if (F.half()) {
        R.k0 = (F.d - 1) / 4;
        R.k1 = 1;
    } else {
        R.k0 = F.d;
    }
    FieldElement qw = q * F.w();
    mpz_class c0 = q.a().get_num(), c1 = q.b().get_num(), e0 = qw.a().get_num(), e1 = qw.b().get_num();
    mpz_class g, x, y;
    mpz_gcdext(g.get_mpz_t(), x.get_mpz_t(), y.get_mpz_t(), c1.get_mpz_t(), e1.get_mpz_t());
    mpz_class Bp = x * c0 + y * e0;
    mpz_class Ap = abs((e1 / g) * c0 - (c1 / g) * e0);
    R.D = g.get_si();
    R.A = Ap.get_si();
    mpz_class B;
    mpz_mod(B.get_mpz_t(), Bp.get_mpz_t(), Ap.get_mpz_t());
    R.B = B.get_si();
    if (mpz_class(R.A) * R.D != N) throw std::logic_error("residue system size mismatch");
    return R;
}

// e(Tr(lin * s)) for s = x + y w is e((a0 x + a1 y)/Q)
struct LinearAngle {
    mpq_class t0, t1;
};

inline LinearAngle linear_angle(const TotallyRealField& F, const FieldElement& lin, const FieldElement& q) {
    // well defined on O/q only if Tr(lin * q O) lies in Z
    if (F.r == 1) {
        require((lin * q).trace().get_den() == 1, "character is not trivial on the modulus");
        return {lin.trace(), 0};
    }
    require((lin * q).trace().get_den() == 1 && (lin * q * F.w()).trace().get_den() == 1,
            "character is not trivial on the modulus (m must lie in the inverse different)");
    return {lin.trace(), (lin * F.w()).trace()};
}

inline mpz_class unit_group_order(const TotallyRealField& F, const FieldElement& q) {
    mpz_class phi = 1;
    auto I = make_ideal(F, q);
    for (auto& [P, e] : factor_ideal(F, I)) {
        mpz_class t;
        mpz_pow_ui(t.get_mpz_t(), P.norm.get_mpz_t(), e - 1);
        phi *= t * (P.norm - 1);
    }
    return phi;
}

}  // namespace detail

inline bool KloostermanValue::is_zero() const {
    std::vector<mpz_class> p;
    for (long long c : coeffs) p.emplace_back(static_cast<long>(c));
    return detail::vanishes_mod_cyclotomic(std::move(p), Q);
}

struct KloostermanOptions {
    long pair_budget = 10'000'000;
    int workers = 1;
    bool allow_unit_fast_path = true;
};

// Sum over s1 s2 = n mod q of e(Tr(lin1 s1 + lin2 s2)).
inline KloostermanValue kloosterman_core(const TotallyRealField& F, const FieldElement& q0, const FieldElement& n0,
                                         const FieldElement& lin1, const FieldElement& lin2,
                                         const KloostermanOptions& opt = {}) {
    FieldElement q = F.adopt(q0), n = F.adopt(n0);
    require(n.is_integral(), "n must be integral");
    auto R = detail::residues_mod(F, q);
    auto a1 = detail::linear_angle(F, F.adopt(lin1), q), a2 = detail::linear_angle(F, F.adopt(lin2), q);
    mpz_class Qz = 1;
    for (const mpq_class* t : {&a1.t0, &a1.t1, &a2.t0, &a2.t1}) mpz_lcm(Qz.get_mpz_t(), Qz.get_mpz_t(), t->get_den_mpz_t());
    if (Qz > 50'000'000) throw ResourceError("root-of-unity order too large");
    const long Q = Qz.get_si();
    auto coef = [&](const mpq_class& t) {
        mpz_class v = t.get_num() * (Qz / t.get_den());
        mpz_class r;
        mpz_mod(r.get_mpz_t(), v.get_mpz_t(), Qz.get_mpz_t());
        return r.get_si();
    };
    const long c10 = coef(a1.t0), c11 = coef(a1.t1), c20 = coef(a2.t0), c21 = coef(a2.t1);
    const long N = R.size();
    long nx, ny;
    R.reduce(n.a().get_num().get_si(), n.b().get_num().get_si(), nx, ny);
    long one_x, one_y;
    R.reduce(1, 0, one_x, one_y);

    mpz_class phi = detail::unit_group_order(F, q);
    bool n_unit = false;
    if (opt.allow_unit_fast_path) {
        long ix, iy, px, py;
        R.pow(nx, ny, phi - 1, ix, iy);
        R.mul(nx, ny, ix, iy, px, py);
        n_unit = px == one_x && py == one_y;
    }
    if (!n_unit && static_cast<double>(N) * N > static_cast<double>(opt.pair_budget))
        throw ResourceError("Kloosterman enumeration exceeds the pair budget");

    int workers = std::max(1, opt.workers);
    long chunks = std::min<long>(N, workers * 4L);
    std::vector<std::vector<long long>> partial(chunks, std::vector<long long>(Q, 0));
    parallel_for(chunks, workers, [&](long ch) {
        auto& acc = partial[ch];
        long lo = N * ch / chunks, hi = N * (ch + 1) / chunks;
        for (long idx = lo; idx < hi; ++idx) {
            long x1 = idx % R.A, y1 = idx / R.A;
            long base = static_cast<long>((static_cast<__int128>(c10) * x1 + static_cast<__int128>(c11) * y1) % Q);
            if (n_unit) {
                long ix, iy, px, py, sx, sy;
                R.pow(x1, y1, phi - 1, ix, iy);
                R.mul(x1, y1, ix, iy, px, py);
                if (px != one_x || py != one_y) continue;
                R.mul(nx, ny, ix, iy, sx, sy);
                long a = static_cast<long>((base + static_cast<__int128>(c20) * sx + static_cast<__int128>(c21) * sy) % Q);
                ++acc[a];
            } else {
                for (long y2 = 0; y2 < R.D; ++y2)
                    for (long x2 = 0; x2 < R.A; ++x2) {
                        long px, py;
                        R.mul(x1, y1, x2, y2, px, py);
                        if (px != nx || py != ny) continue;
                        long a = static_cast<long>((base + static_cast<__int128>(c20) * x2 + static_cast<__int128>(c21) * y2) % Q);
                        ++acc[a];
                    }
            }
        }
    });
    KloostermanValue v;
    v.Q = Q;
    v.coeffs.assign(Q, 0);
    for (auto& p : partial)
        for (long a = 0; a < Q; ++a) v.coeffs[a] += p[a];
    long double re = 0, im = 0, mass = 0;
    const long double two_pi = 6.283185307179586476925286766559L;
    for (long a = 0; a < Q; ++a) {
        if (!v.coeffs[a]) continue;
        long double t = two_pi * a / Q;
        re += v.coeffs[a] * std::cos(t);
        im += v.coeffs[a] * std::sin(t);
        mass += std::fabs(static_cast<long double>(v.coeffs[a]));
    }
    v.approx = {re, im};
    v.err = mass * 1e-17L;
    return v;
}

inline KloostermanValue global_kloosterman(const TotallyRealField& F, const FieldElement& m1, const FieldElement& m2,
                                           const FieldElement& n, const FieldElement& c,
                                           const KloostermanOptions& opt = {}) {
    require(!c.is_zero(), "c must be nonzero");
    require(in_inverse_different(F, m1) && in_inverse_different(F, m2), "m1, m2 must lie in the inverse different");
    FieldElement cc = F.adopt(c);
    return kloosterman_core(F, cc, n, F.adopt(m1) / cc, F.adopt(m2) / cc, opt);
}

// Local factor at the prime P | c: residues mod P^e, character twisted by an
// element iota = 1 mod P^e lying in the prime-to-P part of c.
inline KloostermanValue local_kloosterman(const TotallyRealField& F, const FieldElement& m1, const FieldElement& m2,
                                          const FieldElement& n, const FieldElement& c0, const PrimeIdeal& P,
                                          const KloostermanOptions& opt = {}) {
    FieldElement c = F.adopt(c0);
    require(c.is_integral() && !c.is_zero(), "c must be a nonzero integral element");
    require(in_inverse_different(F, m1) && in_inverse_different(F, m2), "m1, m2 must lie in the inverse different");
    int e = valuation(F, P, c);
    if (e == 0) return {};
    auto pi = prime_generator(F, P);
    if (!pi) throw UnsupportedError("prime ideal is not principal");
    FieldElement q = pi->pow(e);
    FieldElement cp = c / q;
    auto R = detail::residues_mod(F, q);
    std::optional<FieldElement> iota;
    for (long idx = 0; idx < R.size() && !iota; ++idx) {
        FieldElement t = F.r == 1 ? F.element(idx) : F.element(idx % R.A, idx / R.A);
        FieldElement cand = cp * t;
        if (((cand - F.one()) / q).is_integral()) iota = cand;
    }
    if (!iota) throw std::logic_error("no CRT idempotent found");
    return kloosterman_core(F, q, n, F.adopt(m1) * *iota / c, F.adopt(m2) * *iota / c, opt);
}

namespace detail {

inline std::vector<mpz_class> lift(const KloostermanValue& v, long L) {
    std::vector<mpz_class> p(L, 0);
    for (long a = 0; a < v.Q; ++a) p[a * (L / v.Q)] += static_cast<long>(v.coeffs[a]);
    return p;
}

inline std::vector<mpz_class> mul_mod_xL(const std::vector<mpz_class>& x, const std::vector<mpz_class>& y, long L) {
    std::vector<mpz_class> r(L, 0);
    for (long i = 0; i < L; ++i) {
        if (x[i] == 0) continue;
        for (long j = 0; j < L; ++j)
            if (y[j] != 0) r[(i + j) % L] += x[i] * y[j];
    }
    return r;
}

}  // namespace detail

struct ProductIdentity {
    bool holds = false;
    KloostermanValue global;
    std::vector<std::pair<PrimeIdeal, KloostermanValue>> locals;
};

inline ProductIdentity product_identity(const TotallyRealField& F, const FieldElement& m1, const FieldElement& m2,
                                        const FieldElement& n, const FieldElement& c,
                                        const KloostermanOptions& opt = {}) {
    ProductIdentity out;
    out.global = global_kloosterman(F, m1, m2, n, c, opt);
    long L = out.global.Q;
    for (auto& [P, e] : factor_ideal(F, make_ideal(F, c))) {
        (void)e;
        auto loc = local_kloosterman(F, m1, m2, n, c, P, opt);
        L = std::lcm(L, loc.Q);
        out.locals.push_back({P, loc});
    }
    std::vector<mpz_class> prod(L, 0);
    prod[0] = 1;
    for (auto& [P, v] : out.locals) prod = detail::mul_mod_xL(prod, detail::lift(v, L), L);
    auto g = detail::lift(out.global, L);
    for (long i = 0; i < L; ++i) g[i] -= prod[i];
    out.holds = detail::vanishes_mod_cyclotomic(std::move(g), L);
    return out;
}

inline bool check_product_identity(const TotallyRealField& F, const FieldElement& m1, const FieldElement& m2,
                                   const FieldElement& n, const FieldElement& c, const KloostermanOptions& opt = {}) {
    return product_identity(F, m1, m2, n, c, opt).holds;
}

// |S| <= Nm(n) Nm(c); exact on the integer pair count when that already suffices
inline bool check_weil_type_bound(const TotallyRealField& F, const FieldElement& m1, const FieldElement& m2,
                                  const FieldElement& n, const FieldElement& c, const KloostermanOptions& opt = {}) {
    require(!F.adopt(n).is_zero(), "the bound needs n != 0");
    auto v = global_kloosterman(F, m1, m2, n, c, opt);
    mpq_class bound = abs(F.adopt(n).norm()) * abs(F.adopt(c).norm());
    if (mpq_class(static_cast<long>(v.pair_count())) <= bound) return true;
    return static_cast<double>(std::abs(v.approx) - v.err) <= bound.get_d();
}

// S(m1, m2; 1; s) != 0, decided in Z[zeta_Q]
inline bool nonvanishing_lemma_check(const TotallyRealField& F, const FieldElement& m1, const FieldElement& m2,
                                     long s_tilde, const KloostermanOptions& opt = {}) {
    require(s_tilde >= 1 && is_squarefree(s_tilde), "s~ must be a squarefree positive integer");
    return !global_kloosterman(F, m1, m2, F.one(), F.element(s_tilde), opt).is_zero();
}

// theta angle: Tr(x) mod 1 in [0, 1)
inline mpq_class theta_angle(const FieldElement& x) {
    mpq_class t = x.trace();
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), t.get_num_mpz_t(), t.get_den_mpz_t());
    return t - fl;
}

// Image of a value with Q a power of p under zeta -> 1 in F_p.
inline long residue_at_one_mod(const KloostermanValue& v, long p) {
    long Q = v.Q;
    while (Q % p == 0) Q /= p;
    require(Q == 1, "Q must be a power of p");
    long long s = 0;
    for (auto c : v.coeffs) s = (s + c % p + p) % p;
    return static_cast<long>(s);
}

}  // namespace petersson
