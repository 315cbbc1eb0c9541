#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "herrlab/zp_matrix.hpp"

namespace herrlab {

// Finite abelian p-groups presented as direct sums of cyclic p-power groups.
// A Carrier is the shape ⊕_b Z/p^{exps[b]}; maps between carriers are integer
// matrices subject to the usual divisibility condition.  Everything is stored
// modulo p^M for one ambient M, with per-slot orders as metadata.

struct Carrier {
    std::vector<int> exps;  // cyclic orders p^exps[b], each in [0, M]

    int dim() const { return int(exps.size()); }
    bool operator==(const Carrier& o) const { return exps == o.exps; }

    double log_p_order() const { return std::accumulate(exps.begin(), exps.end(), 0); }
};

// Elementary divisors of a finite abelian p-group, as exponents sorted
// descending (p^{a_1} >= p^{a_2} >= ...).
using Divisors = std::vector<int>;

inline long long divisor_log_order(const Divisors& d) {
    long long s = 0;
    for (int e : d) s += e;
    return s;
}

struct LinMap {
    Carrier src, tgt;
    Mat m;  // tgt.dim() x src.dim()
};

// A map of carriers is well defined iff m[i][j] * p^{src_j} = 0 mod p^{tgt_i}.
inline void check_map(const ZMod& zm, const LinMap& f, const char* what = "map") {
    if (f.m.r != f.tgt.dim() || f.m.c != f.src.dim())
        throw ValidationError(std::string(what) + ": shape mismatch");
    for (int i = 0; i < f.m.r; ++i)
        for (int j = 0; j < f.m.c; ++j) {
            int need = f.tgt.exps[i] - f.src.exps[j];
            if (need > 0 && zm.val(f.m.at(i, j)) < need)
                throw ValidationError(std::string(what) + ": not well defined on orders");
        }
}

// Canonicalize an element of a carrier (reduce slot b modulo p^{exps[b]}).
inline std::vector<i64> carrier_reduce(const ZMod& zm, const Carrier& c, std::vector<i64> v) {
    for (int i = 0; i < c.dim(); ++i) v[i] = zm.reduce(v[i]) % zm.ppow[c.exps[i]];
    return v;
}

namespace detail {

// Columns of `extra` giving p^{exps[j]} e_j for each slot with exps[j] < M —
// the relations that encode the carrier's finite orders inside (Z/p^M)^dim.
inline Mat order_gens(const ZMod& zm, const Carrier& c) {
    std::vector<int> slots;
    for (int j = 0; j < c.dim(); ++j)
        if (c.exps[j] < zm.M) slots.push_back(j);
    Mat E(c.dim(), int(slots.size()));
    for (size_t k = 0; k < slots.size(); ++k) E.at(slots[k], int(k)) = zm.ppow[c.exps[slots[k]]];
    return E;
}

inline Mat hcat(const Mat& A, const Mat& B) {
    Mat R(std::max(A.r, B.r), A.c + B.c);
    for (int i = 0; i < A.r; ++i)
        for (int j = 0; j < A.c; ++j) R.at(i, j) = A.at(i, j);
    for (int i = 0; i < B.r; ++i)
        for (int j = 0; j < B.c; ++j) R.at(i, A.c + j) = B.at(i, j);
    return R;
}

}  // namespace detail

// Kernel of a carrier map: columns generating {x in src : f(x) = 0 in tgt},
// canonicalized.  Includes the order relations of src (so the span, as a
// subgroup of src, is exactly right).
inline Mat map_kernel(const ZMod& zm, const LinMap& f) {
    Mat scaled(f.m.r, f.m.c);
    for (int i = 0; i < f.m.r; ++i)
        for (int j = 0; j < f.m.c; ++j)
            scaled.at(i, j) = zm.mul(f.m.at(i, j), zm.ppow[zm.M - f.tgt.exps[i]]);
    Mat K = kernel_free(zm, scaled);
    Mat full = detail::hcat(K, detail::order_gens(zm, f.src));
    return col_howell(zm, full);
}

// Image of a carrier map as a canonical submodule matrix of tgt.
inline Mat map_image(const ZMod& zm, const LinMap& f) {
    Mat full = detail::hcat(f.m, detail::order_gens(zm, f.tgt));
    return col_howell(zm, full);
}

// Canonical submodule generated by arbitrary columns inside a carrier.
inline Mat submodule_canon(const ZMod& zm, const Carrier& c, const Mat& gens) {
    return col_howell(zm, detail::hcat(gens, detail::order_gens(zm, c)));
}

inline bool submodule_contains(const ZMod& zm, const Mat& canon, const std::vector<i64>& v) {
    return solve(zm, canon, v).has_value();
}

// Divisors of the subgroup spanned by `gens` inside carrier c.
inline Divisors subgroup_divisors(const ZMod& zm, const Carrier& c, const Mat& gens) {
    // span(gens)/0: present via relations of the generator tuple.
    Mat G = detail::hcat(gens, detail::order_gens(zm, c));
    // relations among columns of G viewed in the free module: ker(G), plus
    // carrier orders on the target side
    LinMap gm{Carrier{std::vector<int>(size_t(G.c), zm.M)}, c, G};
    Mat rel = map_kernel(zm, gm);
    SnfResult s = snf(zm, rel);
    Divisors out;
    for (int j = 0; j < G.c; ++j) {
        int v = (j < int(s.diag_val.size())) ? s.diag_val[j] : zm.M;
        if (v > 0) out.push_back(std::min(v, zm.M));
    }
    std::sort(out.rbegin(), out.rend());
    return out;
}

// A subquotient span(K)/span(I) of a carrier, normalized to ⊕ Z/p^{e_j} with
// enough bookkeeping to push elements in and induced maps through.
struct HGroup {
    Carrier carrier;
    Mat K;              // kernel generators (carrier coords), canonical
    Divisors divisors;  // exponents e_j, descending
    Mat reps;           // carrier.dim() x s — representative of generator j
    Mat U;              // SNF row transform of the relation matrix (k x k)
    std::vector<int> slots;  // rows of U giving the kept coordinates
    std::vector<int> slot_exp;

    long long log_order() const { return divisor_log_order(divisors); }

    // Coordinates of a carrier element known to lie in span(K) + span(I).
    std::vector<i64> coords(const ZMod& zm, const std::vector<i64>& v) const {
        auto z = solve(zm, K, v);
        if (!z) throw Error("element not in subquotient carrier span");
        std::vector<i64> y = mat_apply(zm, U, *z);
        std::vector<i64> out(slots.size());
        for (size_t j = 0; j < slots.size(); ++j)
            out[j] = zm.reduce(y[slots[j]]) % zm.ppow[slot_exp[j]];
        return out;
    }
};

// Build span(K)/span(I).  I's columns must lie in span(K).
inline HGroup make_subquotient(const ZMod& zm, const Carrier& c, const Mat& Kraw, const Mat& I) {
    HGroup h;
    h.carrier = c;
    h.K = submodule_canon(zm, c, Kraw);
    const int k = h.K.c;
    // relations: kernel of K as a map (free)^k -> carrier, plus I in K-coords
    LinMap ktoc{Carrier{std::vector<int>(size_t(k), zm.M)}, c, h.K};
    Mat relk = map_kernel(zm, ktoc);
    Mat zi(k, I.c);
    for (int j = 0; j < I.c; ++j) {
        auto z = solve(zm, h.K, I.col(j));
        if (!z) throw Error("image generator outside kernel span (d^2 != 0?)");
        zi.set_col(j, *z);
    }
    Mat rel = detail::hcat(relk, zi);
    SnfResult s = snf(zm, rel);
    h.U = s.U;
    Mat Uinv = mat_inverse(zm, s.U);
    std::vector<std::pair<int, int>> keep;  // (exp, slot)
    for (int i = 0; i < k; ++i) {
        int v = (i < int(s.diag_val.size())) ? s.diag_val[i] : zm.M;
        int e = std::min(v, zm.M);
        if (e > 0) keep.push_back({e, i});
    }
    std::stable_sort(keep.begin(), keep.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    h.reps = Mat(c.dim(), int(keep.size()));
    for (size_t j = 0; j < keep.size(); ++j) {
        h.divisors.push_back(keep[j].first);
        h.slots.push_back(keep[j].second);
        h.slot_exp.push_back(keep[j].first);
        std::vector<i64> rep = mat_apply(zm, h.K, Uinv.col(keep[j].second));
        h.reps.set_col(int(j), carrier_reduce(zm, c, rep));
    }
    return h;
}

// Induced homomorphism on subquotients from a carrier map T with
// T(span K_A) ⊆ span K_B and T(span I_A) ⊆ span I_B (caller's contract).
// Returned matrix G is divisors_B x divisors_A with G[i][j] mod p^{e_i^B}.
inline Mat induced_map(const ZMod& zm, const HGroup& A, const LinMap& T, const HGroup& B) {
    Mat G(int(B.divisors.size()), int(A.divisors.size()));
    for (int j = 0; j < int(A.divisors.size()); ++j) {
        std::vector<i64> v = mat_apply(zm, T.m, A.reps.col(j));
        v = carrier_reduce(zm, B.carrier, v);
        std::vector<i64> y = B.coords(zm, v);
        for (int i = 0; i < int(B.divisors.size()); ++i) G.at(i, j) = y[i];
    }
    return G;
}

// Treat a divisor list as a carrier to reuse the submodule machinery.
inline Carrier divisors_carrier(const Divisors& d) { return Carrier{d}; }

// Canonical image of a map given in divisor coordinates (G as from
// induced_map).  Comparable bytewise across equal target groups.
inline Mat divisor_map_image(const ZMod& zm, const Divisors& dsrc, const Divisors& dtgt,
                             const Mat& G) {
    // scale into (Z/p^M)^s: coordinate i carries weight p^(M - e_i)
    Mat scaled(G.r, G.c);
    for (int i = 0; i < G.r; ++i)
        for (int j = 0; j < G.c; ++j) scaled.at(i, j) = zm.mul(G.at(i, j), zm.ppow[zm.M - dtgt[i]]);
    Mat full = detail::hcat(scaled, Mat(G.r, 0));
    return col_howell(zm, full);
}

inline Divisors divisor_image_divisors(const ZMod& zm, const Divisors& dtgt, const Mat& scaled_img) {
    Carrier free_c{std::vector<int>(dtgt.size(), zm.M)};
    return subgroup_divisors(zm, free_c, scaled_img);
}

// Convert a scaled canonical image back to plain divisor-carrier
// coordinates (column entries are p^(M - e_i) multiples by construction).
inline Mat divisor_image_unscale(const ZMod& zm, const Divisors& dtgt, const Mat& scaled) {
    Mat out(scaled.r, scaled.c);
    for (int i = 0; i < scaled.r; ++i)
        for (int j = 0; j < scaled.c; ++j) {
            i64 x = zm.reduce(scaled.at(i, j));
            i64 f = zm.ppow[zm.M - dtgt[size_t(i)]];
            if (x % f != 0) throw Error("scaled image entry not a lattice multiple");
            out.at(i, j) = (x / f) % zm.ppow[dtgt[size_t(i)]];
        }
    return out;
}

// Whole group in the scaled representation (for surjectivity tests).
inline Mat divisor_full_module(const ZMod& zm, const Divisors& d) {
    Mat E(int(d.size()), int(d.size()));
    for (size_t i = 0; i < d.size(); ++i) E.at(int(i), int(i)) = zm.ppow[zm.M - d[i]];
    Mat full = detail::hcat(E, Mat(int(d.size()), 0));
    return col_howell(zm, full);
}

inline bool divisor_map_is_iso(const ZMod& zm, const Divisors& dsrc, const Divisors& dtgt,
                               const Mat& G) {
    if (dsrc != dtgt) return false;
    return divisor_map_image(zm, dsrc, dtgt, G) == divisor_full_module(zm, dtgt);
}

inline bool divisor_map_is_zero(const ZMod& zm, const Divisors& dtgt, const Mat& G) {
    for (int i = 0; i < G.r; ++i)
        for (int j = 0; j < G.c; ++j)
            if (zm.reduce(G.at(i, j)) % zm.ppow[dtgt[i]] != 0) return false;
    return true;
}

// Compose divisor-coordinate maps (entries reduced mod target order).
inline Mat divisor_map_compose(const ZMod& zm, const Divisors& dtgt, const Mat& G2, const Mat& G1) {
    Mat R = mat_mul(zm, G2, G1);
    for (int i = 0; i < R.r; ++i)
        for (int j = 0; j < R.c; ++j) R.at(i, j) = zm.reduce(R.at(i, j)) % zm.ppow[dtgt[i]];
    return R;
}

}  // namespace herrlab
