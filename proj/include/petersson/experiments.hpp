#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "petersson/traceformula.hpp"

namespace petersson {

// ---------- weight schedules ----------

struct ScheduleEntry {
    long l = 0;
    bool admissible = false;
    std::vector<long> k;               // empty when not admissible
    std::vector<long double> arg;      // 4 pi sqrt(sigma_j(p^l / d^2)) / |s~|
    std::vector<WindowVerdict> window;
    std::string gap;                   // why l was rejected
};

struct WeightSchedule {
    TotallyRealField F;
    long level = 1;
    FieldElement p;
    std::vector<ScheduleEntry> entries;
    long double log_k_over_l = 0;  // min over admissible entries and j of log(k_j)/l

    std::vector<const ScheduleEntry*> admissible() const {
        std::vector<const ScheduleEntry*> out;
        for (auto& e : entries)
            if (e.admissible) out.push_back(&e);
        return out;
    }
};

// smallest even k > 2 with arg in ((k-1) - (k-1)^{1/3}, k-1); only k-1 = next odd integer above arg can work,
// since both endpoints increase with k
inline std::optional<WindowVerdict> smallest_even_weight(const Interval& arg_in, const TotallyRealField& F,
                                                         const FieldElement& x, const FieldElement& s, int j) {
    Interval arg = arg_in;
    for (mpfr_prec_t p = arg.prec();; p *= 2) {
        long f = static_cast<long>(std::floor(arg.lo_ld()));
        long c = static_cast<long>(std::floor(arg.hi_ld()));
        if (f == c) {
            long km1 = (f % 2 == 0) ? f + 1 : f + 2;  // smallest odd > arg
            if (km1 < 3) km1 = 3;
            auto w = window_verdict(arg, km1 + 1);
            if (w.decided) {
                if (w.inside) return w;
                return std::nullopt;
            }
        }
        if (p > 8192) throw ResourceError("window decision did not converge");
        arg = window_argument(F, x, s, j, p * 2);
    }
}

inline WeightSchedule weight_schedule(const TotallyRealField& F, long level, const FieldElement& p_tilde,
                                      const std::vector<long>& ls) {
    require(level >= 1, "level s~ must be a positive integer");
    FieldElement p = F.adopt(p_tilde);
    require(p.is_integral() && !p.is_zero(), "p~ must be a nonzero integral element");
    require(is_totally_positive(F, p), "p~ must be totally positive so that m1 is");
    auto fac = factor_ideal(F, make_ideal(F, p));
    require(fac.size() == 1 && fac[0].second == 1, "p~ must generate a prime ideal");
    WeightSchedule W{F, level, p, {}, std::numeric_limits<long double>::infinity()};
    FieldElement dsq = F.d_gen * F.d_gen;
    for (long l : ls) {
        require(l >= 1 && l % 2 == 1, "only odd exponents l are allowed");
        ScheduleEntry e;
        e.l = l;
        FieldElement x = p.pow(l) / dsq;
        FieldElement s = F.element(level);
        bool ok = true;
        for (int j = 1; j <= F.r; ++j) {
            Interval arg = window_argument(F, x, s, j, 256);
            e.arg.push_back(arg.mid_ld());
            auto w = smallest_even_weight(arg, F, x, s, j);
            if (!w) {
                ok = false;
                char buf[160];
                std::snprintf(buf, sizeof buf, "j=%d: no even k has arg %.6Lf in its window", j, arg.mid_ld());
                e.gap += (e.gap.empty() ? "" : "; ") + std::string(buf);
                continue;
            }
            if (w->k - 1 > 10000) {
                ok = false;
                e.gap += (e.gap.empty() ? "" : "; ") + std::string("weight beyond the supported Bessel order");
                continue;
            }
            e.window.push_back(*w);
            e.k.push_back(w->k);
        }
        e.admissible = ok;
        if (!ok) {
            e.k.clear();
            e.window.clear();
        } else {
            for (long kj : e.k) W.log_k_over_l = std::min(W.log_k_over_l, std::log(static_cast<long double>(kj)) / l);
        }
        W.entries.push_back(e);
    }
    if (W.admissible().empty()) W.log_k_over_l = 0;
    return W;
}

// ---------- Chebyshev polynomials of the second kind, X_l(2 cos t) = sin((l+1)t)/sin t ----------

inline long double chebyshev_U(long l, long double x) {
    require(l >= 0, "degree must be nonnegative");
    long double a = 1, b = x;
    if (l == 0) return a;
    for (long i = 1; i < l; ++i) {
        long double c = x * b - a;
        a = b;
        b = c;
    }
    return b;
}

inline long double chebyshev_U_derivative(long l, long double x) {
    // X'_{l+1} = X_l + x X'_l - X'_{l-1}
    long double a = 1, b = x, da = 0, db = 1;
    if (l == 0) return 0;
    for (long i = 1; i < l; ++i) {
        long double c = x * b - a, dc = b + x * db - da;
        a = b;
        b = c;
        da = db;
        db = dc;
    }
    return db;
}

inline long double chebyshev_U_trig(long l, long double theta) {
    long double s = std::sin(theta);
    if (std::fabs(s) < 1e-300L) {
        long double sign = (std::cos(theta) > 0) ? 1 : ((l % 2) ? -1 : 1);
        return sign * (l + 1);
    }
    return std::sin((l + 1) * theta) / s;
}

// sup of |X'_l| on [-2, 2] is attained at +-2 and equals l(l+1)(l+2)/6
inline long double chebyshev_derivative_sup(long l) { return l * (l + 1.0L) * (l + 2.0L) / 6; }

inline bool check_derivative_bound(long l, long double C) {
    return chebyshev_derivative_sup(l) <= C * static_cast<long double>(l) * l;
}

// total variation of X_l on [-2, 2]
inline long double chebyshev_total_variation(long l, int n = 20000) {
    long double tv = 0, prev = chebyshev_U(l, -2);
    for (int i = 1; i <= n; ++i) {
        long double x = -2 + 4.0L * i / n;
        long double v = chebyshev_U(l, x);
        tv += std::fabs(v - prev);
        prev = v;
    }
    return tv;
}

// ---------- measures ----------

inline long double sato_tate_density(long double x) {
    const long double pi = 3.141592653589793238462643383279502884L;
    if (x <= -2 || x >= 2) return 0;
    return std::sqrt(1 - x * x / 4) / pi;
}

inline long double mu_p_density(long double p, long double x) {
    require(p > 1, "p must exceed 1");
    const long double pi = 3.141592653589793238462643383279502884L;
    if (x <= -2 || x >= 2) return 0;
    long double q = std::sqrt(p) + 1 / std::sqrt(p);
    return (p + 1) / pi * std::sqrt(1 - x * x / 4) / (q * q - x * x);
}

struct QuadratureResult {
    long double value = 0;
    long double error = 0;
    long nodes = 0;
};

// int g dmu_inf by Gauss-Chebyshev of the second kind; n+1 -> 2(n+1) reuses every node
inline QuadratureResult sato_tate_integral(const std::function<long double(long double)>& g, long double tol = 1e-12L,
                                           long max_nodes = 1L << 20) {
    const long double pi = 3.141592653589793238462643383279502884L;
    auto rule = [&](long n) {
        long double s = 0;
        for (long i = 1; i <= n; ++i) {
            long double t = i * pi / (n + 1);
            long double st = std::sin(t);
            s += st * st * g(2 * std::cos(t));
        }
        return 2 * s / (n + 1);  // (2/pi) * (pi/(n+1)) sum sin^2 g
    };
    long n = 15;
    long double prev = rule(n);
    while (true) {
        long m = 2 * n + 1;
        long double cur = rule(m);
        long double err = std::fabs(cur - prev);
        if (err <= tol || m > max_nodes) return {cur, err, m};
        n = m;
        prev = cur;
    }
}

inline QuadratureResult mu_p_integral(long double p, const std::function<long double(long double)>& g,
                                      long double tol = 1e-12L) {
    long double q = std::sqrt(p) + 1 / std::sqrt(p);
    return sato_tate_integral([&](long double x) { return g(x) * (p + 1) / (q * q - x * x); }, tol);
}

enum class Reference { SatoTate, MuP };

struct ReferenceMeasure {
    Reference kind = Reference::SatoTate;
    long double p = 0;

    // mu([-2, x])
    long double cdf(long double x) const {
        const long double pi = 3.141592653589793238462643383279502884L;
        if (x <= -2) return 0;
        if (x >= 2) return 1;
        long double th = std::acos(x / 2);
        if (kind == Reference::SatoTate) return (pi - th + std::sin(th) * std::cos(th)) / pi;
        // (2/pi) int_th^pi sin^2 f * w(2 cos f) df
        long double q = std::sqrt(p) + 1 / std::sqrt(p);
        auto f = [&](long double phi) {
            long double s = std::sin(phi), c = 2 * std::cos(phi);
            return 2 / pi * s * s * (p + 1) / (q * q - c * c);
        };
        long double err;
        return boost::math::quadrature::gauss_kronrod<long double, 61>::integrate(f, th, pi, 15, 1e-14L, &err);
    }
};

struct DiscreteMeasure {
    std::vector<std::pair<long double, long double>> atoms;  // (location, weight)

    long double total() const {
        long double t = 0;
        for (auto& a : atoms) t += a.second;
        return t;
    }
    void validate() const {
        for (auto& [x, w] : atoms) {
            require(x >= -2 && x <= 2, "atom locations must lie in [-2, 2]");
            require(w >= 0, "atom weights must be nonnegative");
        }
    }
    DiscreteMeasure normalized() const {
        long double t = total();
        require(t > 0, "cannot normalise a measure of zero mass");
        DiscreteMeasure m = *this;
        for (auto& a : m.atoms) a.second /= t;
        return m;
    }
};

// sup over closed I in [-2, 2] of |nu(I) - mu(I)| by a sweep over the sorted atoms.
// With G(x) = nu[-2,x] - mu[-2,x]: nu(I) - mu(I) = G(b) - G(a-). G jumps up at atoms and decreases in between.
inline long double discrepancy(const DiscreteMeasure& nu0, const ReferenceMeasure& ref = {}, bool normalize = false) {
    nu0.validate();
    DiscreteMeasure nu = normalize ? nu0.normalized() : nu0;
    auto at = nu.atoms;
    std::sort(at.begin(), at.end());
    std::vector<std::pair<long double, long double>> merged;
    for (auto& a : at) {
        if (!merged.empty() && merged.back().first == a.first) merged.back().second += a.second;
        else merged.push_back(a);
    }
    long double mass = 0;
    std::vector<long double> pre, post;  // G(x_i-), G(x_i)
    for (auto& [x, w] : merged) {
        long double F = ref.cdf(x);
        pre.push_back(mass - F);
        mass += w;
        post.push_back(mass - F);
    }
    long double end = mass - 1;  // G(2)
    // positive side: max over i <= j of post_j - min(0, pre_i)
    long double best = 0, low = 0;
    for (size_t j = 0; j < merged.size(); ++j) {
        low = std::min(low, pre[j]);
        best = std::max(best, post[j] - low);
    }
    // negative side: max over a before b of G(a-) - G(b); a just after atom i (or -2), b just before atom j > i (or 2)
    long double high = 0;
    for (size_t j = 0; j < merged.size(); ++j) {
        best = std::max(best, high - pre[j]);
        high = std::max(high, post[j]);
    }
    best = std::max(best, high - end);
    return best;
}

// ---------- decay sweep ----------

struct SweepRow {
    long l = 0;
    std::vector<long> k;
    std::vector<long double> arg;
    long double main_abs = 0, box_abs = 0, tail_abs = 0, tail_bound = 0;
    long double scaled_box = 0, scaled_tail = 0, scaled_bound = 0;
    bool s_nonzero = false;
    long double d_lower_bound = 0;
    long tail_points = 0;
    std::vector<mpq_class> cutoffs;
};

using MPairBuilder = std::function<std::pair<FieldElement, FieldElement>(const TotallyRealField&, const FieldElement&, long)>;

// m1 = p^l / d, m2 = 1 / d
inline std::pair<FieldElement, FieldElement> default_m_pair(const TotallyRealField& F, const FieldElement& p, long l) {
    return {p.pow(l) / F.d_gen, F.one() / F.d_gen};
}

struct SweepOptions {
    int workers = 1;
    long point_budget = 20'000;
    double cutoff_target = 0.01;
    MPairBuilder builder = default_m_pair;
};

inline std::vector<SweepRow> decay_sweep(const WeightSchedule& W, const SweepOptions& opt = {}) {
    const auto& F = W.F;
    auto rows_src = W.admissible();
    std::vector<SweepRow> rows(rows_src.size());
    int outer = std::max(1, std::min<int>(opt.workers, static_cast<int>(rows_src.size())));
    int inner = std::max(1, opt.workers / outer);
    parallel_for(rows_src.size(), outer, [&](long i) {
        const auto& e = *rows_src[i];
        auto [m1, m2] = opt.builder(F, W.p, e.l);
        GeometricSideInput in{F, F.element(W.level), F.one(), m1, m2, e.k};
        in.workers = inner;
        in.point_budget = opt.point_budget;
        in.cutoff_target = opt.cutoff_target;
        auto rep = geometric_side(in);
        SweepRow r;
        r.l = e.l;
        r.k = e.k;
        r.arg = e.arg;
        r.main_abs = std::abs(rep.main_term);
        r.box_abs = std::abs(rep.box_term);
        r.tail_abs = std::abs(rep.tail_truncated);
        r.tail_bound = rep.tail_remainder_bound;
        r.scaled_box = rep.scaled_box();
        r.scaled_tail = rep.scaled_tail();
        r.scaled_bound = rep.scaled_remainder();
        r.tail_points = rep.tail_points;
        r.cutoffs = rep.cutoffs;
        auto S = global_kloosterman(F, m1, m2, F.one(), F.element(W.level));
        r.s_nonzero = !S.is_zero();
        long kmax = *std::max_element(e.k.begin(), e.k.end());
        long double lk = std::log(static_cast<long double>(kmax));
        r.d_lower_bound = 1 / (lk * lk * rep.scale);
        rows[i] = r;
    });
    return rows;
}

namespace detail {

inline std::string fmt(long double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(v));
    return buf;
}

}  // namespace detail

inline std::string sweep_csv(const std::vector<SweepRow>& rows, int r) {
    std::ostringstream os;
    os << "l";
    for (int j = 1; j <= r; ++j) os << ",k" << j;
    for (int j = 1; j <= r; ++j) os << ",arg" << j;
    os << ",main_abs,box_abs,tail_abs,tail_bound,scaled_box,scaled_tail,S_nonzero,D_lower_bound\n";
    for (auto& row : rows) {
        os << row.l;
        for (long k : row.k) os << ',' << k;
        for (auto a : row.arg) os << ',' << detail::fmt(a);
        os << ',' << detail::fmt(row.main_abs) << ',' << detail::fmt(row.box_abs) << ',' << detail::fmt(row.tail_abs) << ','
           << detail::fmt(row.tail_bound) << ',' << detail::fmt(row.scaled_box) << ',' << detail::fmt(row.scaled_tail) << ','
           << (row.s_nonzero ? 1 : 0) << ',' << detail::fmt(row.d_lower_bound) << '\n';
    }
    return os.str();
}

inline nlohmann::ordered_json sweep_json(const std::vector<SweepRow>& rows) {
    auto arr = nlohmann::ordered_json::array();
    for (auto& row : rows) {
        nlohmann::ordered_json o;
        o["l"] = row.l;
        o["k"] = row.k;
        std::vector<double> args(row.arg.begin(), row.arg.end());
        o["arg"] = args;
        o["main_abs"] = static_cast<double>(row.main_abs);
        o["box_abs"] = static_cast<double>(row.box_abs);
        o["tail_abs"] = static_cast<double>(row.tail_abs);
        o["tail_bound"] = static_cast<double>(row.tail_bound);
        o["scaled_box"] = static_cast<double>(row.scaled_box);
        o["scaled_tail"] = static_cast<double>(row.scaled_tail);
        o["S_nonzero"] = row.s_nonzero;
        o["D_lower_bound"] = static_cast<double>(row.d_lower_bound);
        arr.push_back(o);
    }
    return arr;
}

inline std::string schedule_csv(const WeightSchedule& W) {
    std::ostringstream os;
    int r = W.F.r;
    os << "l,admissible";
    for (int j = 1; j <= r; ++j) os << ",k" << j;
    for (int j = 1; j <= r; ++j) os << ",arg" << j;
    for (int j = 1; j <= r; ++j) os << ",margin_low" << j << ",margin_high" << j;
    os << ",gap\n";
    for (auto& e : W.entries) {
        os << e.l << ',' << (e.admissible ? 1 : 0);
        for (int j = 0; j < r; ++j) os << ',' << (e.admissible ? std::to_string(e.k[j]) : "");
        for (int j = 0; j < r; ++j) os << ',' << detail::fmt(e.arg[j]);
        for (int j = 0; j < r; ++j) {
            if (e.admissible) os << ',' << detail::fmt(e.window[j].margin_low()) << ',' << detail::fmt(e.window[j].margin_high());
            else os << ",,";
        }
        os << ',' << '"' << e.gap << '"' << '\n';
    }
    return os.str();
}

}  // namespace petersson
