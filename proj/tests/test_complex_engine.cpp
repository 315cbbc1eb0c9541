#include "herrlab/complex_engine.hpp"

#include <gtest/gtest.h>

#include "enum_oracle.hpp"

using namespace herrlab;

namespace {

Mat from_rows(int r, int c, std::initializer_list<i64> xs) {
    Mat m(r, c);
    auto it = xs.begin();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m.at(i, j) = *it++;
    return m;
}

FiniteComplex times3_on_z9(const ZMod&) {
    FiniteComplex C;
    C.lo = 0;
    C.terms = {Carrier{{2}}, Carrier{{2}}};
    C.d = {from_rows(1, 1, {3})};
    return C;
}

TEST(Cohomology, TimesThreeOnZ9BruteForce) {
    ZMod zm(3, 2);
    FiniteComplex C = times3_on_z9(zm);
    auto divs = cohomology_divisors(zm, C);
    ASSERT_EQ(divs.size(), 2u);
    EXPECT_EQ(divs[0], (Divisors{1}));  // H^0 = Z/3
    EXPECT_EQ(divs[1], (Divisors{1}));  // H^1 = Z/3
    EXPECT_EQ(divs, oracle::brute_cohomology(zm, C));
}

TEST(Cohomology, ZeroDifferentialsGiveTerms) {
    ZMod zm(3, 2);
    FiniteComplex C;
    C.lo = 0;
    C.terms = {Carrier{{2, 1}}, Carrier{{1}}};
    C.d = {Mat(1, 2)};
    auto divs = cohomology_divisors(zm, C);
    EXPECT_EQ(divs[0], (Divisors{2, 1}));
    EXPECT_EQ(divs[1], (Divisors{1}));
}

TEST(Cohomology, AcyclicIdentityComplex) {
    ZMod zm(3, 2);
    FiniteComplex C;
    C.lo = 0;
    C.terms = {Carrier{{2, 2}}, Carrier{{2, 2}}};
    C.d = {Mat::identity(2)};
    for (const auto& d : cohomology_divisors(zm, C)) EXPECT_TRUE(d.empty());
}

TEST(Cohomology, RejectsNonComplexes) {
    ZMod zm(3, 2);
    FiniteComplex C;
    C.lo = 0;
    C.terms = {Carrier{{2}}, Carrier{{2}}, Carrier{{2}}};
    C.d = {Mat::identity(1), Mat::identity(1)};  // d^2 = id != 0
    EXPECT_THROW(cohomology(zm, C), NotAComplex);
}

TEST(Koszul, ZeroAndInvertibleOperators) {
    ZMod zm(3, 2);
    Carrier M{{2, 1}};
    // r = 1, t = 0
    {
        FiniteComplex K = koszul(zm, M, {Mat(2, 2)});
        auto divs = cohomology_divisors(zm, K);
        EXPECT_EQ(divs[0], (Divisors{2, 1}));
        EXPECT_EQ(divs[1], (Divisors{2, 1}));
    }
    // r = 2, both zero
    {
        FiniteComplex K = koszul(zm, M, {Mat(2, 2), Mat(2, 2)});
        auto divs = cohomology_divisors(zm, K);
        EXPECT_EQ(divs[0], (Divisors{2, 1}));
        EXPECT_EQ(divs[1], (Divisors{2, 2, 1, 1}));
        EXPECT_EQ(divs[2], (Divisors{2, 1}));
    }
    // r = 1, invertible
    {
        FiniteComplex K = koszul(zm, M, {Mat::identity(2)});
        for (const auto& d : cohomology_divisors(zm, K)) EXPECT_TRUE(d.empty());
    }
    // non-commuting operators rejected
    Carrier M2{{2, 2}};
    Mat a = from_rows(2, 2, {0, 1, 0, 0});
    Mat b = from_rows(2, 2, {0, 0, 1, 0});
    EXPECT_THROW(koszul(zm, M2, {a, b}), NonCommuting);
}

TEST(Koszul, EulerCharacteristicWithZeroOperators) {
    ZMod zm(3, 2);
    Carrier M{{2, 2, 1}};
    for (int r = 1; r <= 3; ++r) {
        FiniteComplex K = koszul(zm, M, std::vector<Mat>(size_t(r), Mat(3, 3)));
        long long chi = 0;
        int sign = 1;
        long long logM = divisor_log_order(M.exps);
        long long expect = 0;
        for (int i = 0; i <= r; ++i) {
            auto divs = cohomology_divisors(zm, K)[i];
            chi += sign * divisor_log_order(divs);
            long long binom = 1;
            for (int t = 0; t < i; ++t) binom = binom * (r - t) / (t + 1);
            expect += sign * binom * logM;
            sign = -sign;
        }
        EXPECT_EQ(chi, expect);
    }
}

TEST(TotalCone, IdentityZeroAndHerrShapes) {
    ZMod zm(3, 2);
    FiniteComplex C = times3_on_z9(zm);
    // cone of identity: acyclic
    {
        ChainMap cm{C, C, {Mat::identity(1), Mat::identity(1)}};
        for (const auto& d : cohomology_divisors(zm, total_cone(zm, cm))) EXPECT_TRUE(d.empty());
    }
    // cone of the zero map: H^n = H^n(C) + H^{n-1}(D)
    {
        ChainMap cm{C, C, {Mat(1, 1), Mat(1, 1)}};
        auto divs = cohomology_divisors(zm, total_cone(zm, cm));
        auto base = cohomology_divisors(zm, C);
        ASSERT_EQ(divs.size(), 3u);
        EXPECT_EQ(divs[0], base[0]);
        EXPECT_EQ(divs[2], base[1]);
        Divisors mid = base[1];
        mid.insert(mid.end(), base[0].begin(), base[0].end());
        std::sort(mid.rbegin(), mid.rend());
        EXPECT_EQ(divs[1], mid);
    }
    // Herr shape: one-term complexes M -> M with map (f - 1)
    {
        FiniteComplex one;
        one.lo = 0;
        one.terms = {Carrier{{2}}};
        one.d = {};
        Mat fminus1 = from_rows(1, 1, {3});  // f = 4, f - 1 = 3 on Z/9
        ChainMap cm{one, one, {fminus1}};
        auto divs = cohomology_divisors(zm, total_cone(zm, cm));
        EXPECT_EQ(divs[0], (Divisors{1}));  // ker(x3)
        EXPECT_EQ(divs[1], (Divisors{1}));  // coker(x3)
    }
}

TEST(QuasiIso, WitnessesExactly) {
    ZMod zm(3, 2);
    FiniteComplex C = times3_on_z9(zm);
    ChainMap id{C, C, {Mat::identity(1), Mat::identity(1)}};
    EXPECT_TRUE(is_quasi_iso(zm, id).is_qiso);
    ChainMap zero{C, C, {Mat(1, 1), Mat(1, 1)}};
    EXPECT_FALSE(is_quasi_iso(zm, zero).is_qiso);
    // x3 between one-term complexes Z/9 -> Z/9: witness Z/3 in two degrees
    FiniteComplex one;
    one.lo = 0;
    one.terms = {Carrier{{2}}};
    ChainMap t3{one, one, {from_rows(1, 1, {3})}};
    QuasiIsoWitness w = is_quasi_iso(zm, t3);
    EXPECT_FALSE(w.is_qiso);
    int nontrivial = 0;
    for (const auto& d : w.cone_divisors)
        if (!d.empty()) {
            EXPECT_EQ(d, (Divisors{1}));
            ++nontrivial;
        }
    EXPECT_EQ(nontrivial, 2);
}

TEST(PontrjaginDual, InvolutionAndOrderPreservation) {
    ZMod zm(3, 2);
    FiniteComplex C = times3_on_z9(zm);
    FiniteComplex D = pontrjagin_dual(zm, C);
    FiniteComplex DD = pontrjagin_dual(zm, D);
    auto divC = cohomology_divisors(zm, C);
    auto divD = cohomology_divisors(zm, D);
    auto divDD = cohomology_divisors(zm, DD);
    EXPECT_EQ(divC, divDD);
    // |H^i(C^dual)| = |H^{-i}(C)|
    for (int i = 0; i < C.len(); ++i) {
        int deg = C.lo + i;
        int dk = -deg - D.lo;
        ASSERT_GE(dk, 0);
        EXPECT_EQ(divisor_log_order(divD[dk]), divisor_log_order(divC[i]));
    }
    // dual of acyclic is acyclic
    FiniteComplex A;
    A.lo = 0;
    A.terms = {Carrier{{2, 2}}, Carrier{{2, 2}}};
    A.d = {Mat::identity(2)};
    for (const auto& d : cohomology_divisors(zm, pontrjagin_dual(zm, A))) EXPECT_TRUE(d.empty());
}

// Seeded complexes from commuting polynomial operators, cross-checked
// against exhaustive enumeration (carrier <= 3^8).
TEST(EnumerationOracle, RandomKoszulConesAgree) {
    ZMod zm(3, 2);
    SplitMix64 rng(20240817);
    for (int trial = 0; trial < 12; ++trial) {
        Carrier M{{2, 1, 1}};  // 36 elements
        Mat T(3, 3);
        for (auto& x : T.a) x = i64(rng.below(9));
        // commuting operators: polynomials in T
        auto poly = [&](i64 a, i64 b, i64 c) {
            Mat R = Mat::identity(3);
            for (auto& x : R.a) x = 0;
            Mat T2 = mat_mul(zm, T, T);
            for (int i = 0; i < 9; ++i)
                R.a[i] = zm.reduce(a * (i % 4 == 0) + b * T.a[i] + c * T2.a[i]);
            return R;
        };
        Mat t1 = poly(i64(rng.below(9)), i64(rng.below(9)), i64(rng.below(9)));
        Mat t2 = poly(i64(rng.below(9)), i64(rng.below(9)), i64(rng.below(9)));
        // carrier validity: reduce entries for order compatibility
        auto fix = [&](Mat& m) {
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    int need = M.exps[i] - M.exps[j];
                    if (need > 0 && zm.val(m.at(i, j)) < need)
                        m.at(i, j) = zm.mul(m.at(i, j), zm.ppow[need - zm.val(m.at(i, j))]);
                }
        };
        fix(t1);
        fix(t2);
        // after fixing they may no longer commute; skip those trials
        Mat comm = mat_sub(zm, mat_mul(zm, t1, t2), mat_mul(zm, t2, t1));
        bool ok = true;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (zm.reduce(comm.at(i, j)) % zm.ppow[M.exps[i]] != 0) ok = false;
        if (!ok) continue;
        FiniteComplex K = koszul(zm, M, {t1, t2});
        EXPECT_EQ(cohomology_divisors(zm, K), oracle::brute_cohomology(zm, K)) << trial;
        // a cone against a commuting map
        Mat h = poly(i64(rng.below(9)), i64(rng.below(9)), 0);
        fix(h);
        Mat c1 = mat_sub(zm, mat_mul(zm, h, t1), mat_mul(zm, t1, h));
        Mat c2 = mat_sub(zm, mat_mul(zm, h, t2), mat_mul(zm, t2, h));
        if (!mat_is_zero(c1) || !mat_is_zero(c2)) continue;
        std::vector<Mat> comps;
        for (int i = 0; i < K.len(); ++i) {
            int blocks = K.terms[i].dim() / 3;
            Mat F(K.terms[i].dim(), K.terms[i].dim());
            for (int b = 0; b < blocks; ++b)
                for (int r = 0; r < 3; ++r)
                    for (int s = 0; s < 3; ++s) F.at(b * 3 + r, b * 3 + s) = h.at(r, s);
            comps.push_back(F);
        }
        ChainMap cm{K, K, comps};
        FiniteComplex cone = total_cone(zm, cm);
        if (oracle::carrier_card(zm, cone.terms[1]) <= 6561)
            EXPECT_EQ(cohomology_divisors(zm, cone), oracle::brute_cohomology(zm, cone)) << trial;
    }
}

TEST(MlStabilize, ThreeClassifications) {
    ZMod zm(3, 2);
    // constant tower with identity maps: stabilized at the first level
    {
        TowerOfGroups T;
        for (int i = 0; i < 6; ++i) T.groups.push_back({1, 1});
        for (int i = 0; i < 5; ++i) T.maps.push_back(Mat::identity(2));
        MLResult r = ml_stabilize(zm, T, 3);
        EXPECT_EQ(r.kind, MLKind::Stabilized);
        EXPECT_EQ(r.value, (Divisors{1, 1}));
        EXPECT_EQ(r.level, 0);
    }
    // zero transitions: ML-zero
    {
        TowerOfGroups T;
        for (int i = 0; i < 6; ++i) T.groups.push_back({1});
        for (int i = 0; i < 5; ++i) T.maps.push_back(Mat(1, 1));
        MLResult r = ml_stabilize(zm, T, 3);
        EXPECT_EQ(r.kind, MLKind::MLZero);
    }
    // strictly growing tower with surjective transitions: images stabilize
    // per level but the stable divisors keep growing -> NotStabilized
    {
        TowerOfGroups T;
        for (int i = 1; i <= 6; ++i) T.groups.push_back(Divisors(size_t(i), 1));
        for (int i = 1; i <= 5; ++i) {
            Mat M(i, i + 1);
            for (int j = 0; j < i; ++j) M.at(j, j) = 1;
            T.maps.push_back(M);
        }
        MLResult r = ml_stabilize(zm, T, 3);
        EXPECT_EQ(r.kind, MLKind::NotStabilized);
    }
}

TEST(Json, ComplexRoundTrip) {
    ZMod zm(3, 2);
    FiniteComplex C = times3_on_z9(zm);
    auto j = complex_to_json(C);
    FiniteComplex back = complex_from_json(j);
    EXPECT_EQ(back.lo, C.lo);
    ASSERT_EQ(back.terms.size(), C.terms.size());
    for (size_t i = 0; i < C.terms.size(); ++i) EXPECT_EQ(back.terms[i].exps, C.terms[i].exps);
    for (size_t i = 0; i < C.d.size(); ++i) EXPECT_EQ(back.d[i], C.d[i]);
}


// Synthetic (psi - 1) shapes for the 4-term sequence: psi = identity makes
// the map zero (kernel and cokernel are the whole carrier); psi = 0 makes
// it -id (both vanish).
TEST(IwasawaShapes, SyntheticKernelCokernelPairs) {
    ZMod zm(3, 2);
    Carrier M{{2, 1, 1, 1}};  // 81 elements
    // psi = identity: psi - 1 = 0
    {
        LinMap zero{M, M, Mat(4, 4)};
        Mat K = map_kernel(zm, zero);
        EXPECT_EQ(subgroup_divisors(zm, M, K), (Divisors{2, 1, 1, 1}));
        HGroup cok = make_subquotient(zm, M, Mat::identity(4), map_image(zm, zero));
        EXPECT_EQ(cok.divisors, (Divisors{2, 1, 1, 1}));
    }
    // psi = 0: psi - 1 = -id, bijective
    {
        Mat neg(4, 4);
        for (int i = 0; i < 4; ++i) neg.at(i, i) = zm.neg(1);
        LinMap minus{M, M, neg};
        Mat K = map_kernel(zm, minus);
        EXPECT_TRUE(subgroup_divisors(zm, M, K).empty());
        HGroup cok = make_subquotient(zm, M, Mat::identity(4), map_image(zm, minus));
        EXPECT_TRUE(cok.divisors.empty());
    }
}

// Divisor lists of the Koszul-cone are invariant under reordering the
// commuting generators.
TEST(TotalCone, KoszulGeneratorPermutationInvariance) {
    ZMod zm(3, 2);
    SplitMix64 rng(0xBEEF);
    for (int trial = 0; trial < 6; ++trial) {
        Carrier M{{2, 1}};
        Mat T(2, 2);
        for (auto& x : T.a) x = i64(rng.below(9));
        auto poly = [&](i64 a, i64 b) {
            Mat R(2, 2);
            for (int i = 0; i < 2; ++i) R.at(i, i) = zm.reduce(a);
            for (int i = 0; i < 4; ++i) R.a[i] = zm.add(R.a[i], zm.mul(b, T.a[i]));
            return R;
        };
        Mat t1 = poly(i64(rng.below(9)), i64(rng.below(9)));
        Mat t2 = poly(i64(rng.below(9)), i64(rng.below(9)));
        Mat h = poly(i64(rng.below(9)), i64(rng.below(9)));
        auto fix = [&](Mat& m) {
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    int need = M.exps[i] - M.exps[j];
                    if (need > 0 && zm.val(m.at(i, j)) < need) m.at(i, j) = 0;
                }
        };
        fix(t1);
        fix(t2);
        fix(h);
        auto cone_divs = [&](std::vector<Mat> ops) {
            FiniteComplex K = koszul(zm, M, ops);
            std::vector<Mat> comps;
            for (int i = 0; i < K.len(); ++i) {
                int blocks = K.terms[size_t(i)].dim() / 2;
                Mat F(K.terms[size_t(i)].dim(), K.terms[size_t(i)].dim());
                for (int b = 0; b < blocks; ++b)
                    for (int r = 0; r < 2; ++r)
                        for (int s = 0; s < 2; ++s) F.at(b * 2 + r, b * 2 + s) = h.at(r, s);
                comps.push_back(F);
            }
            return cohomology_divisors(zm, total_cone(zm, ChainMap{K, K, comps}));
        };
        bool commute =
            mat_is_zero(mat_sub(zm, mat_mul(zm, t1, t2), mat_mul(zm, t2, t1))) &&
            mat_is_zero(mat_sub(zm, mat_mul(zm, h, t1), mat_mul(zm, t1, h))) &&
            mat_is_zero(mat_sub(zm, mat_mul(zm, h, t2), mat_mul(zm, t2, h)));
        if (!commute) continue;
        EXPECT_EQ(cone_divs({t1, t2}), cone_divs({t2, t1})) << trial;
    }
}

}  // namespace
