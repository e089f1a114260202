#include <gtest/gtest.h>

#include "petersson/traceformula.hpp"

using namespace petersson;

namespace {

const long double kPi = 3.141592653589793238462643383279502884L;

long double mpfr_j(long a, long double x) {
    mpfr_t X, J;
    mpfr_inits2(200, X, J, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_ld(X, x, MPFR_RNDN);
    mpfr_jn(J, a, X, MPFR_RNDN);
    long double v = mpfr_get_ld(J, MPFR_RNDN);
    mpfr_clears(X, J, static_cast<mpfr_ptr>(nullptr));
    return v;
}

// classical S(m, n; c) via integer arithmetic
long double classical_kloosterman(long m, long n, long c) {
    long double s = 0;
    for (long x = 0; x < c; ++x) {
        if (std::gcd(x, c) != 1) continue;
        long r0 = c, r1 = x, t0 = 0, t1 = 1;
        while (r1) {
            long q = r0 / r1;
            std::tie(r0, r1) = std::make_pair(r1, r0 - q * r1);
            std::tie(t0, t1) = std::make_pair(t1, t0 - q * t1);
        }
        long xi = ((t0 % c) + c) % c;
        s += std::cos(2 * kPi * ((m * x + n * xi) % c) / c);
    }
    return s;
}

// delta(m,n) + 2 pi i^{-k} sum_{c=lo}^{hi} S(m,n;c)/c J_{k-1}(4 pi sqrt(mn)/c), c >= lo
long double classical_series(long m, long n, long k, long lo, long hi) {
    long double s = 0;
    for (long c = lo; c <= hi; ++c) s += classical_kloosterman(m, n, c) / c * mpfr_j(k - 1, 4 * kPi * std::sqrt((long double)m * n) / c);
    return 2 * kPi * ((k / 2) % 2 ? -1 : 1) * s;
}

GeometricSideInput classical_input(long m, long n, long k) {
    auto Q = make_field(1);
    return {Q, Q.one(), Q.one(), Q.element(m), Q.element(n), {k}};
}

}  // namespace

TEST(Window, OpenEndpoints) {
    EXPECT_FALSE(window_verdict(Interval::from_long(11), 12).inside);
    EXPECT_FALSE(window_verdict(Interval::from_long(11), 12).decided);
    auto w = window_verdict(Interval::from_rational(mpq_class(108, 10)), 12);
    EXPECT_TRUE(w.inside);
    EXPECT_NEAR(static_cast<double>(w.lower), 11 - std::cbrt(11.0), 1e-13);
    EXPECT_NEAR(static_cast<double>(w.margin_high()), 0.2, 1e-15);
    EXPECT_FALSE(window_verdict(Interval::from_rational(mpq_class(87, 10)), 12).inside);  // 8.7 < 11 - 11^{1/3}
    EXPECT_TRUE(window_verdict(Interval::from_rational(mpq_class(87, 10)), 12).decided);
}

TEST(Window, ScheduleInstanceInside) {
    // Q(sqrt 2), level 1, p = 3, l = 3: k = (12, 58)
    auto F = make_field(2, 2);
    auto id = F.one() / F.d_gen;
    GeometricSideInput in{F, F.one(), F.one(), F.element(27) * id, id, {12, 58}};
    auto B = box_set(F, make_ideal(F, F.one()));
    auto w = hypothesis_window(in, B);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_TRUE(w[0].inside && w[1].inside);
    EXPECT_NEAR(static_cast<double>(w[0].arg), 9.5624916133023667, 1e-12);
}

TEST(MainTerm, Examples) {
    int t;
    EXPECT_NEAR(static_cast<double>(main_term(classical_input(1, 1, 12), &t).real()), 1.0, 1e-18);
    EXPECT_EQ(t, 1);
    EXPECT_EQ(main_term(classical_input(1, 2, 12)).real(), 0.0L);
    auto F = make_field(2, 2);
    auto id = F.one() / F.d_gen;
    GeometricSideInput in{F, F.one(), F.one(), id, id, {12, 12}};
    EXPECT_NEAR(static_cast<double>(main_term(in).real()), std::sqrt(8.0), 1e-14);
    for (long l : {1, 3, 5}) {
        in.m1 = F.element(3).pow(l) * id;
        EXPECT_EQ(main_term(in).real(), 0.0L) << l;
    }
}

TEST(BoxTerm, ClassicalLeadingTerm) {
    auto in = classical_input(1, 1, 12);
    auto B = box_set(in.F, make_ideal(in.F, in.F.one()));
    auto [v, err] = box_term(in, B);
    long double expect = 2 * kPi * mpfr_j(11, 4 * kPi);
    EXPECT_NEAR(static_cast<double>(v.real()), static_cast<double>(expect), 1e-14);
    EXPECT_LT(err, 1e-12L);
}

TEST(BoxTerm, LevelThreeComposition) {
    auto F = make_field(2, 2);
    auto id = F.one() / F.d_gen;
    GeometricSideInput in{F, F.element(3), F.one(), F.element(9) * F.w() * id + id, id, {12, 14}};
    in.m1 = F.element(3).pow(5) * id;
    auto B = box_set(F, make_ideal(F, in.level));
    ASSERT_EQ(B.A.size(), 1u);
    EXPECT_EQ(B.A[0], F.element(3));
    auto [v, err] = box_term(in, B);
    auto S = global_kloosterman(F, in.m1, in.m2, F.one(), F.element(3));
    long double expect = S.approx.real() / 9;
    FieldElement x = in.m1 * in.m2;
    for (int j = 1; j <= 2; ++j) {
        long double arg = 4 * kPi * std::sqrt(embed(F, x, j).mid_ld()) / 3;
        expect *= 2 * kPi * ((in.k[j - 1] / 2) % 2 ? -1 : 1) * mpfr_j(in.k[j - 1] - 1, arg);
    }
    EXPECT_NEAR(static_cast<double>(v.real()), static_cast<double>(expect), 1e-12 * std::fabs((double)expect) + 1e-300);
}

TEST(BoxTerm, VanishingKloostermanGivesZero) {
    // S(1, 0; 1; 4) = mu(4) = 0 over Q: the single box term vanishes
    auto Q = make_field(1);
    GeometricSideInput in{Q, Q.element(4), Q.one(), Q.one(), Q.element(4), {12}};
    in.m2 = Q.element(4);
    auto B = box_set(Q, make_ideal(Q, in.level));
    auto S = global_kloosterman(Q, in.m1, in.m2, Q.one(), Q.element(4));
    EXPECT_TRUE(S.is_zero());
    auto [v, err] = box_term(in, B);
    EXPECT_EQ(std::abs(v), 0.0L);
    EXPECT_EQ(err, 0.0L);
}

TEST(TailSum, MinimalCutoffIsEmpty) {
    auto in = classical_input(1, 1, 12);
    auto B = box_set(in.F, make_ideal(in.F, in.F.one()));
    auto t = tail_sum(in, B, {mpq_class(1)});
    EXPECT_EQ(t.points, 0);
    EXPECT_EQ(std::abs(t.value), 0.0L);
    EXPECT_GT(t.remainder, 0.0L);
    EXPECT_NEAR(static_cast<double>(t.remainder), static_cast<double>(tail_remainder(in, B, {mpq_class(1)})), 1e-18);
}

TEST(TailSum, ClassicalSeriesAndRigorousRemainder) {
    for (long k : {12, 16, 24}) {
        auto in = classical_input(1, 1, k);
        auto B = box_set(in.F, make_ideal(in.F, in.F.one()));
        auto t = tail_sum(in, B, {mpq_class(40)});
        EXPECT_EQ(t.points, 39);
        long double direct = classical_series(1, 1, k, 2, 40);
        EXPECT_NEAR(static_cast<double>(t.value.real()), static_cast<double>(direct), 1e-10);
        long double beyond = classical_series(1, 1, k, 41, 3000);
        EXPECT_LE(std::fabs(beyond), t.remainder) << k;
    }
}

TEST(TailSum, MajorantDrivenRemainderIsTiny) {
    // k0 >= 30 and cutoffs with every majorant below 1e-15
    auto in = classical_input(1, 1, 32);
    auto B = box_set(in.F, make_ideal(in.F, in.F.one()));
    long double X = 4 * kPi;
    mpq_class R(1);
    while (truncation_majorant(31, X / R.get_d()) >= 1e-15L) R *= 2;
    EXPECT_LT(tail_remainder(in, B, {R}), 1e-12L);
}

TEST(TailSum, RemainderCoversLargerCutoffsInRealQuadratic) {
    auto F = make_field(2, 2);
    auto id = F.one() / F.d_gen;
    GeometricSideInput in{F, F.one(), F.one(), F.element(27) * id, id, {12, 58}};
    auto B = box_set(F, make_ideal(F, F.one()));
    std::vector<mpq_class> R1(2, mpq_class(6)), R2(2, mpq_class(40));
    auto t1 = tail_sum(in, B, R1), t2 = tail_sum(in, B, R2);
    EXPECT_GT(t2.points, t1.points);
    EXPECT_LE(std::abs(t2.value - t1.value), t1.remainder);
}

TEST(GeometricSide, ClassicalReduction) {
    for (auto [m, n, k] : std::vector<std::tuple<long, long, long>>{{1, 1, 12}, {1, 2, 12}, {2, 3, 16}, {3, 3, 20}, {1, 4, 12}}) {
        auto rep = geometric_side(classical_input(m, n, k));
        long double delta = (m == n) ? 1 : 0;
        long double series = delta + classical_series(m, n, k, 1, 400);
        EXPECT_NEAR(static_cast<double>(rep.total().real()), static_cast<double>(series),
                    static_cast<double>(rep.tail_remainder_bound + rep.box_error) + 1e-9)
            << m << " " << n << " " << k;
        EXPECT_LT(std::fabs(rep.total().imag()), 1e-12L);
        EXPECT_LE(rep.tail_remainder_bound, 0.01L * std::abs(rep.tail_truncated) + 1e-300L);
    }
}

TEST(GeometricSide, WindowInstanceHasLargeScaledBox) {
    auto F = make_field(2, 2);
    auto id = F.one() / F.d_gen;
    GeometricSideInput in{F, F.one(), F.one(), F.element(243) * id, id, {30, 170}};
    auto rep = geometric_side(in);
    EXPECT_TRUE(rep.window_satisfied());
    EXPECT_EQ(rep.t_hat, 0);
    EXPECT_GT(rep.scaled_box(), 1.0L);
    EXPECT_NEAR(static_cast<double>(rep.scale), std::cbrt(29.0) * std::cbrt(169.0), 1e-12);
    EXPECT_NEAR(static_cast<double>(rep.scaled_tail()), static_cast<double>(std::abs(rep.tail_truncated) * rep.scale), 1e-20);
}

TEST(GeometricSide, SuppressedBesselLeavesMainTerm) {
    auto F = make_field(2, 2);
    auto id = F.one() / F.d_gen;
    GeometricSideInput in{F, F.one(), F.one(), id, id, {40, 40}};
    auto rep = geometric_side(in);
    EXPECT_EQ(rep.t_hat, 1);
    EXPECT_NEAR(static_cast<double>(rep.total().real()), std::sqrt(8.0), 1e-10);
    EXPECT_LT(std::abs(rep.box_term + rep.tail_truncated) + rep.tail_remainder_bound, 1e-10L);
}

TEST(GeometricSide, OtherFields) {
    for (long d : {5, 13}) {
        auto F = make_field(2, d);
        auto id = F.one() / F.d_gen;
        GeometricSideInput in{F, F.element(2), F.one(), F.element(9) * id, id, {12, 12}};
        if (!is_totally_positive(F, in.m1)) continue;
        auto rep = geometric_side(in);
        EXPECT_LT(std::fabs(rep.total().imag()), 1e-12L);
        EXPECT_TRUE(std::isfinite(static_cast<double>(rep.total().real())));
    }
}

TEST(GeometricSide, Validation) {
    auto Q = make_field(1);
    EXPECT_THROW(geometric_side({Q, Q.one(), Q.one(), Q.one(), Q.one(), {11}}), ValidationError);
    EXPECT_THROW(geometric_side({Q, Q.one(), Q.one(), Q.one(), Q.one(), {2}}), ValidationError);
    EXPECT_THROW(geometric_side({Q, Q.element(2), Q.element(6), Q.one(), Q.one(), {12}}), ValidationError);
    EXPECT_THROW(geometric_side({Q, Q.one(), Q.one(), Q.element(-1), Q.one(), {12}}), ValidationError);
    EXPECT_THROW(geometric_side({Q, Q.one(), Q.one(), Q.element(mpq_class(1, 2)), Q.one(), {12}}), ValidationError);
    auto F = make_field(2, 2);
    EXPECT_THROW(geometric_side({F, F.one(), F.one(), F.one(), F.one(), {12}}), ValidationError);
    auto G = make_field(2, 10);  // class number 2
    EXPECT_THROW(geometric_side({G, G.one(), G.one(), G.one(), G.one(), {12, 12}}), ValidationError);
}
