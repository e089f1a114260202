#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <vector>

#include "petersson/bessel.hpp"
#include "petersson/ideals.hpp"
#include "petersson/interval.hpp"
#include "petersson/kloosterman.hpp"
#include "petersson/lattice.hpp"
#include "petersson/parallel.hpp"

namespace petersson {

struct GeometricSideInput {
    TotallyRealField F;
    FieldElement level;  // generator of N
    FieldElement hecke;  // generator of n
    FieldElement m1, m2;
    std::vector<long> k;
    std::vector<mpq_class> cutoffs;  // empty: chosen by auto_cutoff
    int workers = 1;
    long point_budget = 200'000;
    long pair_budget = 10'000'000;
    double cutoff_target = 0.01;  // auto_cutoff stops once remainder <= target * |tail|
};

struct WindowVerdict {
    long k = 0;
    long double arg = 0;
    long double lower = 0, upper = 0;  // (k-1) - (k-1)^{1/3}, k-1
    bool inside = false;
    bool decided = true;  // false when the enclosure still straddles an endpoint
    long double margin_low() const { return arg - lower; }
    long double margin_high() const { return upper - arg; }
};

struct GeometricSideReport {
    std::complex<long double> main_term, box_term, tail_truncated;
    long double box_error = 0;             // numerical error of box_term
    long double tail_remainder_bound = 0;  // rigorous, covers the omitted points and numerical error of the tail
    long double scale = 1;                 // prod (k_j - 1)^{1/3}
    std::vector<WindowVerdict> window;
    std::vector<mpq_class> cutoffs;
    long box_points = 0, tail_points = 0;
    int t_hat = 0;

    std::complex<long double> total() const { return main_term + box_term + tail_truncated; }
    long double scaled_main() const { return std::abs(main_term) * scale; }
    long double scaled_box() const { return std::abs(box_term) * scale; }
    long double scaled_tail() const { return std::abs(tail_truncated) * scale; }
    long double scaled_remainder() const { return tail_remainder_bound * scale; }
    bool window_satisfied() const {
        for (auto& w : window)
            if (!w.inside) return false;
        return true;
    }
};

namespace detail {

inline void validate_weights(const TotallyRealField& F, const std::vector<long>& k) {
    require(static_cast<int>(k.size()) == F.r, "one weight per embedding is required");
    for (long kj : k) {
        require(kj > 2 && kj % 2 == 0, "weights must be even and > 2");
        require(kj - 1 <= 10000, "weights above 10001 are out of range");
    }
}

inline bool coprime(const TotallyRealField& F, const FieldElement& a, const FieldElement& b) {
    mpz_class g;
    mpz_class na = mpq_class(abs(F.adopt(a).norm())).get_num(), nb = mpq_class(abs(F.adopt(b).norm())).get_num();
    mpz_gcd(g.get_mpz_t(), na.get_mpz_t(), nb.get_mpz_t());
    if (g == 1) return true;
    for (auto& [p, e] : factor_integer(g))
        for (auto& P : primes_over(F, p))
            if (valuation(F, P, a) > 0 && valuation(F, P, b) > 0) return false;
    return true;
}

// eta u for the u in U with eta u totally positive
inline std::vector<FieldElement> positive_twists(const TotallyRealField& F, const FieldElement& eta) {
    std::vector<FieldElement> out;
    for (auto& u : unit_class_representatives(F).U)
        if (is_totally_positive(F, eta * u)) out.push_back(eta * u);
    return out;
}

inline long double ld_sqrt_embed(const TotallyRealField& F, const FieldElement& x, int j) {
    return std::sqrt(embed(F, x, j, 128).mid_ld());
}

// One summand: S(m1, m2; eta u; s) sqrt(Nm eta u)/Nm(s) prod 2pi(-1)^{k_j/2} J_{k_j-1}(X_j/|sigma_j s|).
struct Term {
    std::complex<long double> value;
    long double error = 0;  // numerical error plus any part that could not be evaluated
};

inline Term evaluate_term(const GeometricSideInput& in, const FieldElement& etau, const std::vector<long double>& X,
                          const FieldElement& s, const KloostermanOptions& kopt) {
    const auto& F = in.F;
    const long double two_pi = 2 * 3.141592653589793238462643383279502884L;
    long double nm_eta = mpq_class(abs(etau.norm())).get_d();
    long double nm_s = mpq_class(abs(s.norm())).get_d();
    long double log_j = 0, rel = 0, sign = 1;
    bool bessel_ok = true;
    long double log_bound = 0;  // log of prod sup|J| when some argument is out of range
    for (int j = 1; j <= F.r; ++j) {
        long a = in.k[j - 1] - 1;
        long double x = X[j - 1] / std::fabs(embed(F, s, j, 128).mid_ld());
        long double sup = std::min(bessel_constants::b * std::pow(static_cast<long double>(a), -1.0L / 3),
                                   bessel_constants::c * std::pow(x, -1.0L / 3));
        log_bound += std::log(sup);
        if (x > 1e5L) {
            bessel_ok = false;
            continue;
        }
        auto J = bessel_j(a, x);
        if (J.sign == 0) return {{0, 0}, 0};
        log_j += J.log_abs;
        rel += J.rel_err;
        sign *= J.sign * ((in.k[j - 1] / 2) % 2 ? -1 : 1);
    }
    long double pref_log = F.r * std::log(two_pi) + 0.5L * std::log(nm_eta) - std::log(nm_s);
    if (!bessel_ok) return {{0, 0}, std::exp(pref_log + log_bound) * nm_eta * nm_s};
    KloostermanValue S;
    try {
        S = global_kloosterman(F, in.m1, in.m2, etau, s, kopt);
    } catch (const ResourceError&) {
        return {{0, 0}, std::exp(pref_log + log_j) * nm_eta * nm_s};
    }
    if (std::abs(S.approx) < 1e-6L && S.is_zero()) return {{0, 0}, 0};
    long double mag = std::exp(pref_log + log_j);
    return {S.approx * (sign * mag), mag * (std::abs(S.approx) * rel + S.err)};
}

// Upper bound for |J_a(x)| over x in [X/hi, X/lo] (hi may be infinite).
inline long double shell_sup(long a, long double X, long double lo, long double hi) {
    long double head = bessel_constants::b * std::pow(static_cast<long double>(a), -1.0L / 3);
    if (lo > 0 && X / lo <= a) return truncation_majorant(a, X / lo);
    if (std::isinf(hi)) return head;
    return std::min(head, bessel_constants::c * std::pow(X / hi, -1.0L / 3));
}

inline long double ball_volume(int r, long double rho) {
    const long double pi = 3.141592653589793238462643383279502884L;
    return r == 1 ? 2 * rho : pi * rho * rho;
}

}  // namespace detail

// Rigorous bound on the sum over the points of N outside the box |sigma_j| <= R_j.
// The count of lattice points (up to sign) in a box of half-widths W_j is at most
// prod(2 W_j + delta) / (2 vol(ball of radius delta/2)); cells are dyadic shells in each coordinate.
inline long double tail_remainder(const GeometricSideInput& in, const BoxSet& B, const std::vector<mpq_class>& R) {
    const auto& F = in.F;
    const long double two_pi = 2 * 3.141592653589793238462643383279502884L;
    const long double delta = std::sqrt(B.delta_sq.get_d()) * (1 - 1e-12L);
    long double total = 0;
    for (const auto& etau : detail::positive_twists(F, F.adopt(in.hecke))) {
        FieldElement prod = etau * in.m1 * in.m2;
        long double nm_eta = mpq_class(abs(etau.norm())).get_d();
        long double inner_prod = 1, all_prod = 1;
        for (int j = 1; j <= F.r; ++j) {
            long a = in.k[j - 1] - 1;
            long double X = 4 * 3.141592653589793238462643383279502884L * detail::ld_sqrt_embed(F, prod, j) * (1 + 1e-15L);
            long double Rj = R[j - 1].get_d();
            long double g0 = (2 * Rj + delta) * detail::shell_sup(a, X, 0, Rj);
            long double S = g0, last = 0, lo = Rj;
            int m = 0;
            for (; m < 4000; ++m) {
                long double hi = 2 * lo;
                long double g = (2 * hi + delta) * detail::shell_sup(a, X, lo, hi);
                S += g;
                last = g;
                lo = hi;
                long double u = X / (lo * a);
                if (u < 0.5L) {
                    // for cells beyond: width ratio <= 2, sup ratio <= e^{a(u/2 - ln 2)}
                    long double rho = 2 * std::exp(a * (u / 2 - std::log(2.0L)));
                    if (rho < 0.5L && last <= 1e-30L * S) {
                        S += last * rho / (1 - rho);
                        break;
                    }
                }
            }
            require(m < 4000, "tail remainder shells did not close");
            inner_prod *= g0;
            all_prod *= S;
        }
        long double count_scale = 1 / (2 * detail::ball_volume(F.r, delta / 2));
        total += (all_prod - inner_prod) * count_scale * nm_eta * std::sqrt(nm_eta) * std::pow(two_pi, F.r);
    }
    return total * (1 + 1e-9L);
}

inline WindowVerdict window_verdict(const Interval& arg, long k) {
    WindowVerdict w;
    w.k = k;
    w.arg = arg.mid_ld();
    Interval up = Interval::from_long(k - 1, arg.prec());
    Interval low = up - up.cbrt();
    w.upper = k - 1;
    w.lower = low.mid_ld();
    w.inside = certainly_less(low, arg) && certainly_less(arg, up);
    w.decided = w.inside || certainly_less(arg, low) || certainly_less(up, arg);
    return w;
}

// 4 pi sqrt(sigma_j(eta m1 m2)) / |sigma_j(s)|
inline Interval window_argument(const TotallyRealField& F, const FieldElement& eta_m1m2, const FieldElement& s, int j,
                                mpfr_prec_t prec = 256) {
    Interval x = embed(F, eta_m1m2, j, prec);
    return Interval::from_long(4, prec) * Interval::pi(prec) * x.sqrt() / embed(F, s, j, prec).abs();
}

inline std::vector<WindowVerdict> hypothesis_window(const GeometricSideInput& in, const BoxSet& B) {
    detail::validate_weights(in.F, in.k);
    require(!B.A.empty(), "box set is empty");
    auto tw = detail::positive_twists(in.F, in.F.adopt(in.hecke));
    require(!tw.empty(), "no totally positive twist of the Hecke generator");
    FieldElement x = tw.front() * in.m1 * in.m2;
    std::vector<WindowVerdict> out;
    for (int j = 1; j <= in.F.r; ++j) {
        WindowVerdict w;
        for (mpfr_prec_t p = 128; p <= 4096; p *= 2) {
            w = window_verdict(window_argument(in.F, x, B.A.front(), j, p), in.k[j - 1]);
            if (w.decided) break;
        }
        out.push_back(w);
    }
    return out;
}

inline void validate_input(const GeometricSideInput& in) {
    const auto& F = in.F;
    detail::validate_weights(F, in.k);
    FieldElement N = F.adopt(in.level), n = F.adopt(in.hecke), m1 = F.adopt(in.m1), m2 = F.adopt(in.m2);
    require(!N.is_zero() && N.is_integral(), "level must be a nonzero integral element");
    require(!n.is_zero() && n.is_integral(), "Hecke ideal must be a nonzero integral element");
    require(is_totally_positive(F, m1) && is_totally_positive(F, m2), "m1, m2 must be totally positive");
    require(in_inverse_different(F, m1) && in_inverse_different(F, m2), "m1, m2 must lie in the inverse different");
    require(detail::coprime(F, n, N), "(n, N) must be coprime");
    if (F.r == 2) require(verify_class_number_one(F), "class number one is required (t = 1)");
    require(in.cutoffs.empty() || static_cast<int>(in.cutoffs.size()) == F.r, "one cutoff per embedding is required");
}

inline std::complex<long double> main_term(const GeometricSideInput& in, int* t_hat = nullptr) {
    const auto& F = in.F;
    auto n = make_ideal(F, in.hecke);
    int t = main_term_indicator(F, in.m1, in.m2, n);
    if (t_hat) *t_hat = t;
    return {t * std::sqrt(static_cast<long double>(F.disc.get_d()) * n.norm.get_d()), 0};
}

namespace detail {

using TermCache = std::map<std::pair<size_t, std::string>, Term>;

inline std::pair<std::complex<long double>, long double> sum_terms(const GeometricSideInput& in,
                                                                   const std::vector<FieldElement>& pts,
                                                                   TermCache* cache = nullptr) {
    const auto& F = in.F;
    KloostermanOptions kopt;
    kopt.pair_budget = in.pair_budget;
    std::complex<long double> sum = 0;
    long double err = 0;
    auto twists = positive_twists(F, F.adopt(in.hecke));
    for (size_t ti = 0; ti < twists.size(); ++ti) {
        FieldElement prod = twists[ti] * in.m1 * in.m2;
        std::vector<long double> X;
        for (int j = 1; j <= F.r; ++j) X.push_back(4 * 3.141592653589793238462643383279502884L * ld_sqrt_embed(F, prod, j));
        std::vector<Term> terms(pts.size());
        std::vector<long> todo;
        for (size_t i = 0; i < pts.size(); ++i) {
            if (cache) {
                auto it = cache->find({ti, pts[i].str()});
                if (it != cache->end()) {
                    terms[i] = it->second;
                    continue;
                }
            }
            todo.push_back(static_cast<long>(i));
        }
        parallel_for(todo.size(), in.workers,
                     [&](long i) { terms[todo[i]] = evaluate_term(in, twists[ti], X, pts[todo[i]], kopt); });
        if (cache)
            for (long i : todo) (*cache)[{ti, pts[i].str()}] = terms[i];
        for (auto& t : terms) {
            sum += t.value;
            err += t.error;
        }
    }
    return {sum, err};
}

}  // namespace detail

inline std::pair<std::complex<long double>, long double> box_term(const GeometricSideInput& in, const BoxSet& B) {
    return detail::sum_terms(in, B.A);
}

struct TailResult {
    std::complex<long double> value;
    long double remainder = 0;
    long points = 0;
};

inline TailResult tail_sum(const GeometricSideInput& in, const BoxSet& B, const std::vector<mpq_class>& R,
                           detail::TermCache* cache = nullptr) {
    auto pts = enumerate_complement(in.F, B, R, in.point_budget);
    auto [v, err] = detail::sum_terms(in, pts, cache);
    return {v, err + tail_remainder(in, B, R), static_cast<long>(pts.size())};
}

// Grow the cutoffs by 3/2 until the certified remainder is at most cutoff_target * |tail|,
// or the point budget runs out (the last completed cutoff is kept).
inline std::vector<mpq_class> auto_cutoff(const GeometricSideInput& in, const BoxSet& B, TailResult* out = nullptr) {
    const auto& F = in.F;
    mpq_class base(static_cast<long>(std::ceil(std::sqrt(mpq_class(B.delta_sq / F.r).get_d()) * 1e6)) + 1, 1000000);
    base.canonicalize();
    std::vector<mpq_class> R(F.r, base);
    detail::TermCache cache;
    TailResult best;
    std::vector<mpq_class> bestR;
    for (int it = 0; it < 40; ++it) {
        TailResult t;
        try {
            t = tail_sum(in, B, R, &cache);
        } catch (const ResourceError&) {
            break;
        }
        best = t;
        bestR = R;
        if (t.remainder <= in.cutoff_target * std::abs(t.value) || t.remainder < 1e-300L) break;
        for (auto& r : R) r *= mpq_class(3, 2);
    }
    require(!bestR.empty(), "tail enumeration exceeds the point budget even at the smallest cutoff");
    if (out) *out = best;
    return bestR;
}

inline GeometricSideReport geometric_side(const GeometricSideInput& in) {
    validate_input(in);
    const auto& F = in.F;
    auto B = box_set(F, make_ideal(F, in.level));
    GeometricSideReport rep;
    rep.main_term = main_term(in, &rep.t_hat);
    auto [bv, be] = box_term(in, B);
    rep.box_term = bv;
    rep.box_error = be;
    rep.box_points = static_cast<long>(B.A.size());
    TailResult t;
    if (in.cutoffs.empty()) {
        rep.cutoffs = auto_cutoff(in, B, &t);
    } else {
        rep.cutoffs = in.cutoffs;
        t = tail_sum(in, B, in.cutoffs);
    }
    rep.tail_truncated = t.value;
    rep.tail_remainder_bound = t.remainder;
    rep.tail_points = t.points;
    rep.window = hypothesis_window(in, B);
    for (long kj : in.k) rep.scale *= std::cbrt(static_cast<long double>(kj - 1));
    long double im = std::fabs(rep.total().imag());
    if (im > 1e-12L + 1e-12L * std::abs(rep.total()))
        throw std::logic_error("geometric side has a non-negligible imaginary part");
    return rep;
}

}  // namespace petersson
