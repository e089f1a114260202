#pragma once

// F = Q, level 1 checks against exact cusp form coefficients.
// tau(n) from q * prod (1 - q^n)^24 = q * (sum (-1)^j (2j+1) q^{j(j+1)/2})^8 (Jacobi), done as seven
// sparse-by-dense products in __int128 with overflow detection.

#include <gmpxx.h>

#include <atomic>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "bessel.hpp"
#include "kloosterman.hpp"
#include "parallel.hpp"
#include "traceformula.hpp"

namespace petersson {

struct QExpansion {
    long k = 12;
    long level = 1;
    std::vector<mpz_class> a;  // a[0] unused, a[1..N]

    long size() const { return static_cast<long>(a.size()) - 1; }
    const mpz_class& operator[](long n) const { return a.at(n); }
};

namespace detail {

using i128 = __int128;

inline mpz_class to_mpz(i128 v) {
    bool neg = v < 0;
    unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
    mpz_class hi(static_cast<unsigned long>(u >> 64)), lo(static_cast<unsigned long>(u & ~0UL));
    mpz_class r = (hi << 64) + lo;
    return neg ? mpz_class(-r) : r;
}

// sparse (index, coeff) times dense, truncated to degree < len; parallel by output blocks
inline std::vector<i128> sparse_times_dense(const std::vector<std::pair<long, long>>& sp, const std::vector<i128>& d,
                                            long len, int workers) {
    std::vector<i128> out(len, 0);
    const long block = 4096;
    long nblocks = (len + block - 1) / block;
    std::atomic<bool> overflow{false};
    parallel_for(nblocks, workers, [&](long b) {
        long lo = b * block, hi = std::min(len, lo + block);
        for (long n = lo; n < hi; ++n) {
            i128 acc = 0;
            for (auto [i, c] : sp) {
                if (i > n) break;
                i128 t;
                if (__builtin_mul_overflow(d[n - i], static_cast<i128>(c), &t) || __builtin_add_overflow(acc, t, &acc)) {
                    overflow = true;
                    return;
                }
            }
            out[n] = acc;
        }
    });
    if (overflow) throw ResourceError("coefficient growth exceeds 128-bit accumulation");
    return out;
}

inline std::vector<mpz_class> sigma_series(long e, long N) {
    std::vector<mpz_class> s(N + 1, 0);
    for (long d = 1; d <= N; ++d) {
        mpz_class p;
        mpz_ui_pow_ui(p.get_mpz_t(), d, e);
        for (long m = d; m <= N; m += d) s[m] += p;
    }
    return s;
}

// 1 + c * sum sigma_{k-1}(n) q^n, coefficients 0..N
inline std::vector<mpz_class> eisenstein(long k, long N) {
    long c = 0;
    switch (k) {
        case 4: c = 240; break;
        case 6: c = -504; break;
        default: break;
    }
    require(c != 0, "only E4 and E6 are built directly");
    auto s = sigma_series(k - 1, N);
    s[0] = 1;
    for (long n = 1; n <= N; ++n) s[n] *= c;
    return s;
}

inline std::vector<mpz_class> mul_trunc(const std::vector<mpz_class>& x, const std::vector<mpz_class>& y, long N) {
    std::vector<mpz_class> out(N + 1, 0);
    for (long i = 0; i <= N; ++i) {
        if (x[i] == 0) continue;
        for (long j = 0; i + j <= N; ++j) out[i + j] += x[i] * y[j];
    }
    return out;
}

}  // namespace detail

// exact tau(1..N)
inline QExpansion delta_coefficients(long N, int workers = 1) {
    require(N >= 1, "N must be positive");
    if (N > 100'000) throw ResourceError("N exceeds the coefficient budget (1e5)");
    // eta^3 / q^{1/8}, needed to degree N - 1
    std::vector<std::pair<long, long>> sp;
    for (long j = 0;; ++j) {
        long e = j * (j + 1) / 2;
        if (e > N - 1) break;
        sp.push_back({e, (j % 2 ? -1 : 1) * (2 * j + 1)});
    }
    std::vector<detail::i128> cur(N, 0);
    for (auto [e, c] : sp) cur[e] = c;
    for (int step = 0; step < 7; ++step) cur = detail::sparse_times_dense(sp, cur, N, workers);
    QExpansion f;
    f.a.resize(N + 1);
    f.a[0] = 0;
    for (long n = 1; n <= N; ++n) f.a[n] = detail::to_mpz(cur[n - 1]);
    return f;
}

// normalised eigenform of weight k in {12, 16, 18, 20, 22, 26}: Delta * E_{k-12}
inline QExpansion cusp_form_coefficients(long k, long N, int workers = 1) {
    if (k == 12) return delta_coefficients(N, workers);
    require(k == 16 || k == 18 || k == 20 || k == 22 || k == 26, "weight must give a one-dimensional S_k(1)");
    if (N > 5'000) throw ResourceError("N exceeds the coefficient budget (5000) for k > 12");
    auto D = delta_coefficients(N, workers);
    std::vector<mpz_class> E;
    auto E4 = detail::eisenstein(4, N), E6 = detail::eisenstein(6, N);
    switch (k - 12) {
        case 4: E = E4; break;
        case 6: E = E6; break;
        case 8: E = detail::mul_trunc(E4, E4, N); break;
        case 10: E = detail::mul_trunc(E4, E6, N); break;
        case 14: E = detail::mul_trunc(detail::mul_trunc(E4, E4, N), E6, N); break;
    }
    std::vector<mpz_class> d(N + 1, 0);
    for (long n = 1; n <= N; ++n) d[n] = D.a[n];
    QExpansion f;
    f.k = k;
    f.a = detail::mul_trunc(d, E, N);
    f.a[0] = 0;
    return f;
}

struct ClassicalSide {
    long double value = 0;
    long double remainder = 0;  // |sum over c > C| <= this
    long double bessel_error = 0;
};

// delta(m,n) + 2 pi i^{-k} sum_{c <= C} S(m,n;c)/c J_{k-1}(4 pi sqrt(mn)/c)
inline ClassicalSide classical_geometric_side(long k, long m, long n, long C) {
    require(k >= 12 && k % 2 == 0, "k must be even and at least 12");
    require(m >= 1 && n >= 1 && C >= 1, "m, n, C must be positive");
    const long double pi = 3.141592653589793238462643383279502884L;
    auto Q = make_field(1);
    long double X = 4 * pi * std::sqrt(static_cast<long double>(m) * n);
    ClassicalSide out;
    long double sum = 0, err = 0;
    for (long c = 1; c <= C; ++c) {
        auto S = global_kloosterman(Q, Q.element(m), Q.element(n), Q.one(), Q.element(c));
        auto J = bessel_j(k - 1, X / c);
        long double t = S.approx.real() / c * J.value();
        sum += t;
        err += std::fabs(t) * J.rel_err + S.err / c * J.abs_value();
    }
    long double sgn = ((k / 2) % 2) ? -1 : 1;
    out.value = (m == n ? 1 : 0) + 2 * pi * sgn * sum;
    out.bessel_error = 2 * pi * err;
    // |S| <= c and |J_{k-1}(x)| <= (x/2)^{k-1}/(k-1)!: sum_{c > C} c^{1-k} <= 1/((k-2) C^{k-2})
    long double lg = (k - 1) * std::log(X / 2) - std::lgamma(static_cast<long double>(k));
    out.remainder = 2 * pi * std::exp(lg - std::log(static_cast<long double>(k - 2)) - (k - 2) * std::log(static_cast<long double>(C)));
    return out;
}

struct RatioRow {
    long m = 0, n = 0;
    long double geometric = 0, error = 0;
    mpz_class tau_product;
    long double C = 0;
};

struct RatioTestResult {
    long k = 12;
    std::vector<RatioRow> rows;
    long double reference = 0;  // mean of C(m, n)
    long double spread = 0;     // max |C / reference - 1|
    long double max_error = 0;  // largest certified |geometric| error
};

inline std::vector<std::pair<long, long>> default_oracle_pairs() {
    return {{1, 1}, {1, 2}, {2, 3}, {2, 2}, {1, 5}, {1, 4}, {3, 7}, {4, 9}, {5, 10}};
}

// the Q case of geometric_side, with C(m,n) = G(m,n) (mn)^{(k-1)/2} / (a(m) a(n)) constant on a
// one-dimensional space
inline RatioTestResult petersson_ratio_test(long k = 12, std::vector<std::pair<long, long>> pairs = default_oracle_pairs(),
                                            long cutoff = 400, int workers = 1) {
    require(!pairs.empty(), "at least one pair is required");
    long N = 1;
    for (auto [m, n] : pairs) {
        require(m >= 1 && n >= 1, "pairs must be positive");
        N = std::max({N, m, n});
    }
    auto f = cusp_form_coefficients(k, N, workers);
    auto Q = make_field(1);
    RatioTestResult res;
    res.k = k;
    for (auto [m, n] : pairs) {
        RatioRow row;
        row.m = m;
        row.n = n;
        row.tau_product = f[m] * f[n];
        require(row.tau_product != 0, "a(m) a(n) must be nonzero");
        GeometricSideInput in{Q, Q.one(), Q.one(), Q.element(m), Q.element(n), {k}};
        in.cutoffs = {mpq_class(cutoff)};
        in.workers = workers;
        auto rep = geometric_side(in);
        row.geometric = rep.total().real();
        row.error = rep.box_error + rep.tail_remainder_bound;
        long double lg = 0.5L * (k - 1) * std::log(static_cast<long double>(m) * n);
        row.C = row.geometric * std::exp(lg) / row.tau_product.get_d();
        res.max_error = std::max(res.max_error, row.error / std::fabs(row.geometric));
        res.rows.push_back(row);
    }
    for (auto& r : res.rows) res.reference += r.C;
    res.reference /= res.rows.size();
    for (auto& r : res.rows) res.spread = std::max(res.spread, std::fabs(r.C / res.reference - 1));
    return res;
}

}  // namespace petersson
