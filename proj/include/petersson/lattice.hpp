#pragma once

// The lattice sigma(I) in R^r for a principal ideal I: shortest vectors,
// the box set A = {s : |sigma_j(s)| <= delta/sqrt(r)} and its complement.
// Squared lengths are exact: |sigma(s)|^2 = Tr(s^2).

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ideals.hpp"

namespace petersson {

struct BoxSet {
    PrincipalIdeal ideal;
    mpq_class delta_sq;        // delta^2
    mpq_class delta_tilde_sq;  // (delta / (2 sqrt r))^2
    std::vector<FieldElement> A;
    std::vector<FieldElement> minimizers;

    double delta() const { return std::sqrt(delta_sq.get_d()); }
    double delta_tilde() const { return std::sqrt(delta_tilde_sq.get_d()); }
};

namespace detail {

// representative of {s, -s} with sigma_1 > 0
inline FieldElement plus_rep(const FieldElement& s) { return s.sign(1) < 0 ? -s : s; }

// sigma_j(x)^2 <= q  (exact)
inline bool embedding_sq_at_most(const FieldElement& x, const mpq_class& q, int j) {
    FieldElement diff = FieldElement(x.radicand(), q) - x * x;
    return diff.sign(j) >= 0;
}

inline bool in_box(const TotallyRealField& F, const FieldElement& x, const std::vector<mpq_class>& Rsq) {
    for (int j = 1; j <= F.r; ++j)
        if (!embedding_sq_at_most(x, Rsq[j - 1], j)) return false;
    return true;
}

inline void sort_points(std::vector<FieldElement>& v) {
    std::sort(v.begin(), v.end(), [](const FieldElement& x, const FieldElement& y) {
        mpq_class nx = abs(x.norm()), ny = abs(y.norm());
        if (nx != ny) return nx < ny;
        return (x - y).sign(1) < 0;
    });
}

inline double sqrt_up(const mpq_class& q) { return std::sqrt(q.get_d()) * (1 + 1e-12) + 1e-300; }

}  // namespace detail

struct ShortestVector {
    mpq_class delta_sq;
    std::vector<FieldElement> minimizers;
};

inline ShortestVector shortest_vector(const TotallyRealField& F, const PrincipalIdeal& I) {
    const FieldElement& g = I.gen;
    mpq_class best = (g * g).trace();
    std::vector<FieldElement> pts;
    double R = detail::sqrt_up(best);
    for_each_lattice_point_in_box(F, g, std::vector<double>(F.r, R), [&](long, long, const FieldElement& s) {
        if (s.is_zero() || s.sign(1) < 0) return;
        mpq_class t = (s * s).trace();
        if (t < best) {
            best = t;
            pts.clear();
        }
        if (t == best) pts.push_back(s);
    });
    detail::sort_points(pts);
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return {best, pts};
}

inline BoxSet box_set(const TotallyRealField& F, const PrincipalIdeal& I) {
    BoxSet B;
    B.ideal = I;
    auto sv = shortest_vector(F, I);
    B.delta_sq = sv.delta_sq;
    B.minimizers = sv.minimizers;
    B.delta_tilde_sq = sv.delta_sq / (4 * F.r);
    mpq_class lim = sv.delta_sq / F.r;  // (2 delta~)^2
    std::vector<mpq_class> Rsq(F.r, lim);
    for_each_lattice_point_in_box(F, I.gen, std::vector<double>(F.r, detail::sqrt_up(lim)),
                                  [&](long, long, const FieldElement& s) {
                                      if (s.is_zero() || s.sign(1) < 0) return;
                                      if (detail::in_box(F, s, Rsq)) B.A.push_back(s);
                                  });
    detail::sort_points(B.A);
    return B;
}

// Points of the complement A' with |sigma_j(s)| <= R_j, one per {s, -s}.
inline std::vector<FieldElement> enumerate_complement(const TotallyRealField& F, const BoxSet& B,
                                                      const std::vector<mpq_class>& R,
                                                      long max_points = 5'000'000) {
    require(static_cast<int>(R.size()) == F.r, "one cutoff per embedding is required");
    mpq_class lim = B.delta_sq / F.r;
    std::vector<mpq_class> Rsq;
    std::vector<double> Rd;
    for (const auto& r : R) {
        require(r >= 0 && r * r >= lim, "cutoffs must be at least 2*delta~");
        Rsq.push_back(r * r);
        Rd.push_back(r.get_d() * (1 + 1e-12) + 1e-300);
    }
    std::vector<mpq_class> Asq(F.r, lim);
    std::vector<FieldElement> out;
    for_each_lattice_point_in_box(
        F, B.ideal.gen, Rd,
        [&](long, long, const FieldElement& s) {
            if (s.is_zero() || s.sign(1) < 0) return;
            if (!detail::in_box(F, s, Rsq) || detail::in_box(F, s, Asq)) return;
            out.push_back(s);
            if (static_cast<long>(out.size()) > max_points)
                throw ResourceError("complement enumeration exceeds the point budget");
        },
        16 * max_points + 1024);
    detail::sort_points(out);
    return out;
}

// If some minimizer has all |sigma_j| equal, A must be exactly that point.
inline bool lemma_equal_coordinates_holds(const BoxSet& B) {
    for (const auto& s : B.minimizers) {
        if (!(s * s).is_rational()) continue;
        return B.A.size() == 1 && B.A[0] == s;
    }
    return true;
}

}  // namespace petersson
