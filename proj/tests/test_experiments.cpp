#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "petersson/experiments.hpp"

using namespace petersson;

namespace {

const long double kPi = 3.141592653589793238462643383279502884L;

// O(n^2) over closed [a, b] and open (a, b) with endpoints in {-2, atoms, 2}
long double brute_discrepancy(const DiscreteMeasure& nu, const ReferenceMeasure& ref) {
    std::vector<long double> E{-2, 2};
    for (auto& a : nu.atoms) E.push_back(a.first);
    std::sort(E.begin(), E.end());
    long double best = 0;
    for (size_t i = 0; i < E.size(); ++i)
        for (size_t j = i; j < E.size(); ++j) {
            long double a = E[i], b = E[j], closed = 0, open = 0;
            for (auto& [x, w] : nu.atoms) {
                if (x >= a && x <= b) closed += w;
                if (x > a && x < b) open += w;
            }
            long double mu = ref.cdf(b) - ref.cdf(a);
            best = std::max({best, closed - mu, mu - open});
        }
    return best;
}

}  // namespace

TEST(Schedule, SmallestEvenWeight) {
    auto Q = make_field(1);
    auto w = smallest_even_weight(Interval::from_rational(mpq_class(201, 2)), Q, Q.one(), Q.one(), 1);
    ASSERT_TRUE(w.has_value());
    EXPECT_EQ(w->k, 102);
    auto w2 = smallest_even_weight(Interval::from_rational(mpq_class(21, 2)), Q, Q.one(), Q.one(), 1);
    ASSERT_TRUE(w2.has_value());
    EXPECT_EQ(w2->k, 12);
    // arg exactly odd: k - 1 must exceed it strictly
    auto w3 = smallest_even_weight(Interval::from_long(11), Q, Q.one(), Q.one(), 1);
    ASSERT_TRUE(w3.has_value());
    EXPECT_EQ(w3->k, 14);
    EXPECT_FALSE(smallest_even_weight(Interval::from_rational(mpq_class(1, 2)), Q, Q.one(), Q.one(), 1).has_value());
}

TEST(Schedule, RealQuadraticPThree) {
    auto F = make_field(2, 2);
    auto W = weight_schedule(F, 1, F.element(3), {1, 3, 5, 7});
    ASSERT_EQ(W.entries.size(), 4u);
    EXPECT_FALSE(W.entries[0].admissible);
    EXPECT_FALSE(W.entries[0].gap.empty());
    const auto& e = W.entries[1];
    ASSERT_TRUE(e.admissible);
    EXPECT_EQ(e.k, (std::vector<long>{12, 58}));
    for (const auto& en : W.admissible()) {
        for (int j = 0; j < 2; ++j) {
            EXPECT_TRUE(en->window[j].inside);
            EXPECT_GT(en->window[j].margin_low(), 0.0L);
            EXPECT_GT(en->window[j].margin_high(), 0.0L);
            EXPECT_EQ(en->k[j] % 2, 0);
            // nothing smaller works: k - 2 has window ending at k - 3 < arg
            EXPECT_GE(en->arg[j], en->k[j] - 3.0L);
        }
    }
    EXPECT_GT(W.log_k_over_l, 0.6L);
    auto csv = schedule_csv(W);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "l,admissible,k1,k2,arg1,arg2,margin_low1,margin_high1,margin_low2,margin_high2,gap");
}

TEST(Schedule, RationalPTwo) {
    auto Q = make_field(1);
    auto W = weight_schedule(Q, 1, Q.element(2), {5});
    ASSERT_TRUE(W.entries[0].admissible);
    EXPECT_EQ(W.entries[0].k[0], 74);
    EXPECT_NEAR(static_cast<double>(W.entries[0].arg[0]), 4 * M_PI * std::sqrt(32.0), 1e-12);
}

TEST(Schedule, Validation) {
    auto F = make_field(2, 2);
    EXPECT_THROW(weight_schedule(F, 1, F.element(3), {2}), ValidationError);
    EXPECT_THROW(weight_schedule(F, 1, F.element(2), {1}), ValidationError);  // (2) = P^2
    EXPECT_THROW(weight_schedule(F, 1, F.element(7), {1}), ValidationError);  // 7 splits
    EXPECT_THROW(weight_schedule(F, 0, F.element(3), {1}), ValidationError);
    EXPECT_THROW(weight_schedule(F, 1, F.w() - F.element(2), {1}), ValidationError);  // not totally positive
}

TEST(Chebyshev, RecurrenceMatchesTrig) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<long> L(0, 60);
    std::uniform_real_distribution<double> T(0.0, M_PI);
    for (int i = 0; i < 1000; ++i) {
        long l = L(rng);
        long double t = T(rng);
        long double v = chebyshev_U(l, 2 * std::cos(t)), ref = chebyshev_U_trig(l, t);
        EXPECT_NEAR(static_cast<double>(v), static_cast<double>(ref), 1e-10 * (l + 1) * (l + 1)) << l << " " << (double)t;
    }
    EXPECT_NEAR(static_cast<double>(chebyshev_U(5, 1.2L)), -0.82368, 1e-15);
    EXPECT_EQ(chebyshev_U(7, 2), 8.0L);
    EXPECT_EQ(chebyshev_U(7, -2), -8.0L);
}

TEST(Chebyshev, DerivativeSupremum) {
    for (long l = 1; l <= 40; ++l) {
        long double sup = chebyshev_derivative_sup(l);
        EXPECT_NEAR(static_cast<double>(chebyshev_U_derivative(l, 2)), static_cast<double>(sup), 1e-9 * sup);
        long double seen = 0;
        for (int i = 0; i <= 4000; ++i) seen = std::max(seen, std::fabs(chebyshev_U_derivative(l, -2 + i / 1000.0L)));
        EXPECT_LE(seen, sup * (1 + 1e-12L));
        // finite difference at an interior point
        long double x = 0.37L, h = 1e-6L;
        EXPECT_NEAR(static_cast<double>(chebyshev_U_derivative(l, x)),
                    static_cast<double>((chebyshev_U(l, x + h) - chebyshev_U(l, x - h)) / (2 * h)), 1e-5 * sup);
    }
    // a pointwise l^2 bound fails for large l, a cubic one holds
    EXPECT_TRUE(check_derivative_bound(10, 2.2L));
    EXPECT_FALSE(check_derivative_bound(10, 2.19L));
    EXPECT_FALSE(check_derivative_bound(100, 2.0L));
}

// extrema of X_l(2 cos t) are about 1/sin t_i, so the variation is of order l log l
TEST(Chebyshev, TotalVariationGrowsLikeLLogL) {
    for (long l : {5, 10, 20, 40, 80}) {
        long double tv = chebyshev_total_variation(l, 400000);
        long double lg = l * std::log(static_cast<long double>(l));
        EXPECT_GE(tv, 2.0L * (l + 1) - 1e-9L);
        EXPECT_GT(tv, lg);
        EXPECT_LT(tv, 3 * lg);
        EXPECT_LT(tv, chebyshev_derivative_sup(l) * 4);
    }
}

TEST(Measures, Integrals) {
    auto one = sato_tate_integral([](long double) { return 1.0L; });
    EXPECT_NEAR(static_cast<double>(one.value), 1.0, 1e-14);
    for (long l = 1; l <= 12; ++l) {
        auto r = sato_tate_integral([l](long double x) { return chebyshev_U(l, x); });
        EXPECT_NEAR(static_cast<double>(r.value), 0.0, 1e-12) << l;
        auto sq = sato_tate_integral([l](long double x) { long double u = chebyshev_U(l, x); return u * u; });
        EXPECT_NEAR(static_cast<double>(sq.value), 1.0, 1e-12) << l;
    }
    for (long double p : {2.0L, 3.0L, 5.0L, 101.0L}) {
        EXPECT_NEAR(static_cast<double>(mu_p_integral(p, [](long double) { return 1.0L; }).value), 1.0, 1e-12);
        EXPECT_NEAR(static_cast<double>(ReferenceMeasure{Reference::MuP, p}.cdf(1.999999L)), 1.0, 1e-8);
    }
    // cdf of mu_inf against the density
    for (long double x : {-1.5L, -0.3L, 0.0L, 0.8L, 1.9L}) {
        auto q = boost::math::quadrature::gauss_kronrod<long double, 61>::integrate(sato_tate_density, -2.0L, x, 15, 1e-15L);
        EXPECT_NEAR(static_cast<double>(ReferenceMeasure{}.cdf(x)), static_cast<double>(q), 1e-12);
    }
    EXPECT_NEAR(static_cast<double>(ReferenceMeasure{}.cdf(0)), 0.5, 1e-18);
}

TEST(Measures, MuPApproachesSatoTate) {
    ReferenceMeasure st{}, mp{Reference::MuP, 1e6L};
    for (long double x = -2; x <= 2; x += 0.25L) EXPECT_NEAR(static_cast<double>(mp.cdf(x)), static_cast<double>(st.cdf(x)), 1e-5);
    for (long double x = -1.9L; x < 2; x += 0.5L)
        EXPECT_NEAR(static_cast<double>(mu_p_density(1e6L, x)), static_cast<double>(sato_tate_density(x)), 1e-5);
}

TEST(Discrepancy, MatchesBruteForce) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> X(-2, 2), W(0, 1);
    for (int trial = 0; trial < 60; ++trial) {
        DiscreteMeasure nu;
        int n = 1 + trial % 50;
        for (int i = 0; i < n; ++i) nu.atoms.push_back({X(rng), W(rng)});
        if (trial % 7 == 0) nu.atoms.push_back(nu.atoms[0]);  // repeated location
        auto norm = nu.normalized();
        ReferenceMeasure ref = (trial % 2) ? ReferenceMeasure{Reference::MuP, 3} : ReferenceMeasure{};
        EXPECT_NEAR(static_cast<double>(discrepancy(nu, ref, true)), static_cast<double>(brute_discrepancy(norm, ref)), 1e-12);
    }
}

TEST(Discrepancy, ClosedForms) {
    EXPECT_NEAR(static_cast<double>(discrepancy({{{0.0L, 1.0L}}})), 1.0, 1e-15);
    // 1/2 (delta_{-1} + delta_1): the open interval (-1, 1) is the worst, 1/3 + sqrt 3/(2 pi)
    DiscreteMeasure two{{{-1.0L, 0.5L}, {1.0L, 0.5L}}};
    EXPECT_NEAR(static_cast<double>(discrepancy(two)), 1.0 / 3 + std::sqrt(3.0) / (2 * M_PI), 1e-14);
    // quantile atoms
    const int n = 2000;
    DiscreteMeasure q;
    ReferenceMeasure st{};
    for (int i = 0; i < n; ++i) {
        long double target = (i + 0.5L) / n, lo = -2, hi = 2;
        for (int it = 0; it < 80; ++it) {
            long double mid = (lo + hi) / 2;
            (st.cdf(mid) < target ? lo : hi) = mid;
        }
        q.atoms.push_back({(lo + hi) / 2, 1.0L / n});
    }
    EXPECT_LE(discrepancy(q), 1e-3L);
    EXPECT_THROW(discrepancy({{{2.5L, 1.0L}}}), ValidationError);
    EXPECT_THROW(discrepancy({{{0.0L, -1.0L}}}), ValidationError);
    EXPECT_THROW(discrepancy({{{0.0L, 0.0L}}}, {}, true), ValidationError);
}

TEST(Sweep, DecayAndColumns) {
    auto F = make_field(2, 2);
    auto W = weight_schedule(F, 1, F.element(3), {1, 3, 5, 7});
    SweepOptions opt;
    opt.workers = 3;
    auto rows = decay_sweep(W, opt);
    ASSERT_EQ(rows.size(), 3u);
    for (size_t i = 0; i < rows.size(); ++i) {
        EXPECT_TRUE(rows[i].s_nonzero);
        EXPECT_EQ(rows[i].main_abs, 0.0L);
        EXPECT_GT(rows[i].scaled_box, 0.5L);
        EXPECT_LE(rows[i].tail_bound, 0.1L * rows[i].tail_abs);
        if (i) {
            EXPECT_LE(2 * rows[i].scaled_tail, rows[i - 1].scaled_tail);
        }
        long double lk = std::log(static_cast<long double>(*std::max_element(rows[i].k.begin(), rows[i].k.end())));
        EXPECT_NEAR(static_cast<double>(rows[i].d_lower_bound * lk * lk * rows[i].scaled_box),
                    static_cast<double>(rows[i].box_abs), 1e-12 * static_cast<double>(rows[i].box_abs));
    }
    auto csv = sweep_csv(rows, 2);
    std::istringstream is(csv);
    std::string header, line;
    std::getline(is, header);
    EXPECT_EQ(header, "l,k1,k2,arg1,arg2,main_abs,box_abs,tail_abs,tail_bound,scaled_box,scaled_tail,S_nonzero,D_lower_bound");
    int lines = 0;
    while (std::getline(is, line)) {
        ++lines;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), std::count(header.begin(), header.end(), ','));
    }
    EXPECT_EQ(lines, 3);
    auto js = sweep_json(rows);
    EXPECT_EQ(js.size(), 3u);
    EXPECT_EQ(js[0]["k"][1], 58);
    // deterministic across worker counts
    opt.workers = 1;
    auto again = decay_sweep(W, opt);
    EXPECT_EQ(sweep_csv(again, 2), csv);
}
