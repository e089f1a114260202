#pragma once

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "petersson/errors.hpp"
#include "petersson/parallel.hpp"

namespace petersson {

struct BesselRequest {
    long a = 0;
    long double x = 0;
    long double target_rel_err = 1e-9L;
};

// sign * exp(log_abs), relative error rel_err (absolute error abs_err() when the value is zero)
struct BesselResult {
    int sign = 0;
    long double log_abs = -std::numeric_limits<long double>::infinity();
    long double rel_err = 0;
    enum class Method { Exact, Series, Miller, Mpfr } method = Method::Exact;

    long double value() const { return sign == 0 ? 0.0L : sign * std::exp(log_abs); }
    long double abs_value() const { return sign == 0 ? 0.0L : std::exp(log_abs); }
    long double abs_err() const { return abs_value() * rel_err; }
};

namespace bessel_constants {
// Landau: |J_a(x)| <= b a^{-1/3}, |J_a(x)| <= c x^{-1/3}
inline constexpr long double b = 0.674885L;
inline constexpr long double c = 0.7857468704L;
// sweep over a in [10, 1e4], d in [-0.99, 0.99]: observed range [0.11703, 0.67465]
inline constexpr long double c1 = 0.11L;
inline constexpr long double c2 = 0.68L;
// sweep over a in [10, 1e4], x in [1/2, 0.995]: observed max 0.29190
inline constexpr long double C = 0.30L;
}  // namespace bessel_constants

namespace detail {

constexpr long double kLdEps = std::numeric_limits<long double>::epsilon();

inline void check_request(const BesselRequest& r) {
    require(r.a >= 0 && r.a <= 10000, "Bessel order must lie in [0, 1e4]");
    require(std::isfinite(static_cast<double>(r.x)) && r.x >= 0 && r.x <= 1e5L, "Bessel argument must lie in [0, 1e5]");
    require(r.target_rel_err > 0, "target error must be positive");
}

inline BesselResult bessel_series(long a, long double x) {
    long double q = x * x / 4;
    long double sum = 1, term = 1, mag = 1;
    for (long k = 1; k < 100000; ++k) {
        term *= -q / (static_cast<long double>(k) * static_cast<long double>(k + a));
        sum += term;
        mag += std::fabs(term);
        if (std::fabs(term) < kLdEps * std::fabs(sum) * 1e-3L) break;
    }
    BesselResult r;
    r.method = BesselResult::Method::Series;
    long double lead = a * std::log(x / 2) - std::lgamma(static_cast<long double>(a) + 1);
    if (sum == 0) {
        r.rel_err = std::numeric_limits<long double>::infinity();
        return r;
    }
    r.sign = sum > 0 ? 1 : -1;
    r.log_abs = lead + std::log(std::fabs(sum));
    long double lead_err = (std::fabs(lead) + 10) * kLdEps;
    r.rel_err = 8 * kLdEps * mag / std::fabs(sum) + lead_err;
    return r;
}

// backward recurrence from index N, normalised by J_0 + 2 sum J_2k = 1
inline void miller_run(long a, long double x, long N, int& sign, long double& log_abs) {
    constexpr long double big = 1e1000L;
    const long double log_big = std::log(big);
    long double fp1 = 0, f = 1e-300L, sum = 0, fa = 0;
    long rescales = 0, rescales_at_a = 0;
    if (N == a) { fa = f; rescales_at_a = 0; }
    for (long n = N; n >= 1; --n) {
        if (n % 2 == 0) sum += 2 * f;
        long double fm1 = (2.0L * n / x) * f - fp1;
        fp1 = f;
        f = fm1;
        if (std::fabs(f) > big) {
            f /= big;
            fp1 /= big;
            sum /= big;
            ++rescales;
        }
        if (n - 1 == a) {
            fa = f;
            rescales_at_a = rescales;
        }
    }
    sum += f;
    if (fa == 0) {
        sign = 0;
        log_abs = -std::numeric_limits<long double>::infinity();
        return;
    }
    sign = ((fa > 0) == (sum > 0)) ? 1 : -1;
    log_abs = std::log(std::fabs(fa)) - (rescales - rescales_at_a) * log_big - std::log(std::fabs(sum));
}

inline long miller_start(long a, long double x) {
    long double m = std::max<long double>(a, std::ceil(x));
    return static_cast<long>(m + 20 * std::cbrt(m) + 60);
}

inline BesselResult bessel_miller(long a, long double x) {
    long N = miller_start(a, x);
    long N2 = N + static_cast<long>(10 * std::cbrt(static_cast<long double>(N))) + 20;
    BesselResult r;
    r.method = BesselResult::Method::Miller;
    int s2;
    long double l2;
    miller_run(a, x, N, r.sign, r.log_abs);
    miller_run(a, x, N2, s2, l2);
    if (r.sign == 0) {
        r.rel_err = std::numeric_limits<long double>::infinity();
        return r;
    }
    long double diff = (s2 == r.sign) ? std::fabs(std::expm1(l2 - r.log_abs)) : 2;
    // roundoff: the recurrence is neutral below x, so it grows with the number of steps there
    long double round = 16 * kLdEps * (N + 10);
    // cancellation near a zero (oscillatory side only): neighbours are of size ~ min(1, x^{-1/3})
    long double scale_log = std::log(std::min<long double>(1, 0.8L * std::pow(std::max<long double>(x, 1), -1.0L / 3)));
    long double cancel = (x > a && scale_log > r.log_abs) ? std::exp(scale_log - r.log_abs) : 1;
    r.rel_err = diff + round * cancel;
    return r;
}

inline BesselResult bessel_mpfr(long a, long double x, mpfr_prec_t prec) {
    mpfr_t X, J, L;
    mpfr_inits2(prec, X, J, L, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_ld(X, x, MPFR_RNDN);
    mpfr_jn(J, a, X, MPFR_RNDN);
    BesselResult r;
    r.method = BesselResult::Method::Mpfr;
    r.sign = mpfr_sgn(J) > 0 ? 1 : (mpfr_sgn(J) < 0 ? -1 : 0);
    if (r.sign != 0) {
        mpfr_abs(L, J, MPFR_RNDN);
        mpfr_log(L, L, MPFR_RNDN);
        r.log_abs = mpfr_get_ld(L, MPFR_RNDN);
        // jn is correctly rounded; the log and its conversion to long double dominate
        r.rel_err = 4 * kLdEps * (1 + std::fabs(r.log_abs));
    }
    mpfr_clears(X, J, L, static_cast<mpfr_ptr>(nullptr));
    return r;
}

}  // namespace detail

inline BesselResult bessel_j(const BesselRequest& req) {
    detail::check_request(req);
    const long a = req.a;
    const long double x = req.x;
    BesselResult r;
    if (x == 0) {
        if (a == 0) {
            r.sign = 1;
            r.log_abs = 0;
        }
        return r;
    }
    r = (x * x / 4 <= a + 1) ? detail::bessel_series(a, x) : detail::bessel_miller(a, x);
    const long double tiny_log = std::log(1e-280L);
    bool ok = r.sign != 0 && (r.rel_err <= req.target_rel_err || (r.log_abs < tiny_log && r.abs_err() <= 1e-290L));
    if (!ok) r = detail::bessel_mpfr(a, x, 192);
    return r;
}

inline BesselResult bessel_j(long a, long double x) { return bessel_j(BesselRequest{a, x}); }
inline long double bessel_j_value(long a, long double x) { return bessel_j(a, x).value(); }

// Hankel expansion for x >> a^2; value and size of the first omitted term
inline std::pair<long double, long double> bessel_j_asymptotic(long a, long double x) {
    const long double pi = 3.141592653589793238462643383279502884L;
    long double mu = 4.0L * a * a;
    long double P = 0, Qs = 0, t = 1, last = 1;
    for (int k = 0; k < 60; ++k) {
        long double next = t * (mu - (2 * k + 1) * (2 * k + 1)) / ((k + 1) * 8 * x);
        if (k > 0 && std::fabs(next) > std::fabs(t)) break;
        if (k % 2 == 0) P += ((k / 2) % 2 == 0 ? 1 : -1) * t;
        else Qs += ((k / 2) % 2 == 0 ? 1 : -1) * t;
        last = next;
        t = next;
    }
    long double chi = x - (a / 2.0L + 0.25L) * pi;
    long double amp = std::sqrt(2 / (pi * x));
    return {amp * (P * std::cos(chi) - Qs * std::sin(chi)), amp * std::fabs(last)};
}

// (i): 1 <= J_a(ax)/(x^a J_a(a)) <= e^{a(1-x)}, x in (0, 1]
inline long double bound_i_log_ratio(long a, long double x, long double* err = nullptr) {
    require(a >= 1 && x > 0 && x <= 1, "bound (i) needs a >= 1 and x in (0, 1]");
    auto num = bessel_j(a, a * x), den = bessel_j(a, static_cast<long double>(a));
    require(num.sign > 0 && den.sign > 0, "J_a is positive on (0, a]");
    if (err) *err = num.rel_err + den.rel_err;
    return num.log_abs - a * std::log(x) - den.log_abs;
}

inline bool check_bound_i(long a, long double x) {
    long double err;
    long double lr = bound_i_log_ratio(a, x, &err);
    return lr >= -err - 1e-15L && lr <= a * (1 - x) + err + 1e-15L;
}

inline long double bound_iii_scaled(long a, long double d) {
    require(a >= 1 && d > -1 && d < 1, "bound (iii) needs a >= 1 and d in (-1, 1)");
    long double t = std::cbrt(static_cast<long double>(a));
    return bessel_j_value(a, a + d * t) * t;
}

inline bool check_bound_iii(long a, long double d) {
    long double v = bound_iii_scaled(a, d);
    return v >= bessel_constants::c1 && v <= bessel_constants::c2;
}

inline bool check_bound_iv(long a, long double x) {
    require(a >= 1 && x > 0, "bound (iv) needs a >= 1 and x > 0");
    auto J = bessel_j(a, x);
    long double bound = std::min(bessel_constants::b * std::pow(static_cast<long double>(a), -1.0L / 3),
                                 bessel_constants::c * std::pow(x, -1.0L / 3));
    return J.abs_value() * (1 - J.rel_err) <= bound;
}

inline long double bound_v_scaled(long a, long double x) {
    require(a >= 1 && x >= 0.5L && x < 1, "bound (v) needs a >= 1 and x in [1/2, 1)");
    return bessel_j_value(a, a * x) * std::pow(1 - x * x, 0.25L) * std::sqrt(static_cast<long double>(a));
}

inline bool check_bound_v(long a, long double x) { return bound_v_scaled(a, x) <= bessel_constants::C; }

// e^{a(1-u+log u)} b a^{-1/3}, u = x_upper / a; bounds |J_a(x)| for all 0 <= x <= x_upper
inline long double truncation_majorant(long a, long double x_upper) {
    require(a >= 1, "majorant needs a >= 1");
    require(x_upper >= 0, "majorant needs x_upper >= 0");
    long double u = x_upper / a;
    require(u <= 1, "majorant needs x_upper <= a");
    long double head = bessel_constants::b * std::pow(static_cast<long double>(a), -1.0L / 3);
    if (u == 0) return 0;
    return std::exp(a * (1 - u + std::log(u))) * head;
}

inline long double log_truncation_majorant(long a, long double x_upper) {
    require(a >= 1 && x_upper > 0 && x_upper <= a, "log majorant needs 0 < x_upper <= a");
    long double u = x_upper / a;
    return a * (1 - u + std::log(u)) + std::log(bessel_constants::b) - std::log(static_cast<long double>(a)) / 3;
}

// ---------- grid suite for the bounds ----------

struct BoundSuiteRow {
    std::string check;  // "i", "iii", "iv", "v"
    long a = 0;
    long points = 0;
    long violations = 0;
    long double min_stat = std::numeric_limits<long double>::infinity();
    long double max_stat = -std::numeric_limits<long double>::infinity();
};

inline std::vector<long> default_suite_orders() { return {10, 32, 100, 316, 1000, 3162, 10000}; }

// sample points per check; for (iii) the parameter is d, for (i) and (v) it is x with argument a x
inline std::vector<long double> suite_points(const std::string& check, long a) {
    std::vector<long double> v;
    if (check == "i") {
        for (int j = 1; j <= 40; ++j) v.push_back(j / 40.0L);
    } else if (check == "iii") {
        for (int j = -19; j <= 19; ++j) v.push_back(j / 20.0L);
    } else if (check == "iv") {
        long double top = std::min(1e5L, 100.0L * a);
        for (int j = 0; j <= 60; ++j) v.push_back(std::min(top, 0.1L * std::pow(top / 0.1L, j / 60.0L)));
        long double t = std::cbrt(static_cast<long double>(a));
        for (int j = -10; j <= 10; ++j)
            if (a + j * t / 2 > 0) v.push_back(a + j * t / 2);
    } else if (check == "v") {
        for (int j = 0; j < 50; ++j) v.push_back(0.5L + j / 100.0L);
        v.push_back(0.995L);
        v.push_back(0.999L);
    } else {
        throw ValidationError("unknown check '" + check + "' (expected i, iii, iv or v)");
    }
    return v;
}

// statistic per point: (i) log ratio / (a(1-x)), (iii) J a^{1/3}, (iv) |J| / bound, (v) J (1-x^2)^{1/4} a^{1/2}
inline BoundSuiteRow run_bound_check(const std::string& check, long a, int workers = 1) {
    auto pts = suite_points(check, a);
    std::vector<long double> stat(pts.size());
    std::vector<char> ok(pts.size());
    parallel_for(static_cast<long>(pts.size()), workers, [&](long i) {
        long double x = pts[i];
        if (check == "i") {
            long double lr = bound_i_log_ratio(a, x);
            stat[i] = x < 1 ? lr / (a * (1 - x)) : lr;
            ok[i] = check_bound_i(a, x);
        } else if (check == "iii") {
            stat[i] = bound_iii_scaled(a, x);
            ok[i] = check_bound_iii(a, x);
        } else if (check == "iv") {
            long double bound = std::min(bessel_constants::b * std::pow(static_cast<long double>(a), -1.0L / 3),
                                         bessel_constants::c * std::pow(x, -1.0L / 3));
            stat[i] = bessel_j(a, x).abs_value() / bound;
            ok[i] = check_bound_iv(a, x);
        } else {
            stat[i] = bound_v_scaled(a, x);
            ok[i] = check_bound_v(a, x);
        }
    });
    BoundSuiteRow row{check, a, static_cast<long>(pts.size()), 0};
    for (size_t i = 0; i < pts.size(); ++i) {
        row.violations += !ok[i];
        row.min_stat = std::min(row.min_stat, stat[i]);
        row.max_stat = std::max(row.max_stat, stat[i]);
    }
    return row;
}

inline std::vector<BoundSuiteRow> bessel_suite(const std::vector<std::string>& checks, const std::vector<long>& orders,
                                               int workers = 1) {
    std::vector<BoundSuiteRow> rows;
    for (const auto& c : checks)
        for (long a : orders) {
            require(a >= 1 && a <= 10000, "suite orders must lie in [1, 10000]");
            rows.push_back(run_bound_check(c, a, workers));
        }
    return rows;
}

}  // namespace petersson
