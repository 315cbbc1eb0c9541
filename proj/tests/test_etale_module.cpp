#include "herrlab/etale_module.hpp"

#include <gtest/gtest.h>

using namespace herrlab;

namespace {

RingCtx q3(int m, int degree_budget = 16) {
    return make_ring(qp_field(3), m, guard_for(qp_field(3), degree_budget, 2));
}

TEST(TrivialModule, EtaleAndCommutationHold) {
    RingCtx ctx = q3(2);
    for (FrobKind kind : {FrobKind::standard, FrobKind::cyclotomic}) {
        FrobData phi = default_frobenius(ctx, kind, 12);
        PhiGammaModule mod = trivial_module(ctx, phi);
        EXPECT_EQ(mod.rank, 1);
        EXPECT_EQ(mod.gammas.size(), 1u);
        EXPECT_EQ(mod.deltas.size(), 1u);
        // phi_M acts as plain substitution
        SeriesVec one{s_const(ctx, 1)};
        EXPECT_TRUE(s_equal_mod(apply_phi(mod, one)[0], s_const(ctx, 1)));
        for (int k = 1; k <= 3; ++k) {
            SeriesVec xk{s_monomial(ctx, k, ring_one(ctx))};
            LaurentTrunc img = apply_phi(mod, xk)[0];
            EXPECT_TRUE(ring_is_unit(s_coeff(img, 3 * k)));
        }
    }
}

TEST(RankOneModule, ConstantsPassPerturbationsFail) {
    RingCtx ctx = q3(2);
    FrobData phi = default_frobenius(ctx, FrobKind::standard, 12);
    // unramified-type twist: unit constant phi-factor, trivial gamma factors
    PhiGammaModule mod = rank_one_module(ctx, phi, s_const(ctx, 2), {s_const(ctx, 1)});
    EXPECT_EQ(mod.rank, 1);
    // incompatible pair: a non-constant phi factor with trivial gamma factor
    LaurentTrunc bad = s_add(s_const(ctx, 1), s_x(ctx));
    EXPECT_THROW(rank_one_module(ctx, phi, bad, {s_const(ctx, 1)}), CommutationFailure);
    // non-etale: pi times a unit
    EXPECT_THROW(rank_one_module(ctx, phi, s_const(ctx, 3), {s_const(ctx, 1)}), NotEtale);
}

TEST(ChiLtTwist, CyclotomicDerivativeOracle) {
    RingCtx ctx = q3(2);
    FrobData phi = default_frobenius(ctx, FrobKind::cyclotomic, 12);
    PhiGammaModule mod = trivial_module(ctx, phi);
    PhiGammaModule tw = chi_lt_twist(mod, 12);
    // phi-factor: phi'/pi = derivative of (1+X)^3 - 1 over 3 = (1+X)^2
    LaurentTrunc expect = s_add(s_add(s_const(ctx, 1), s_scale(s_x(ctx), ring_int(ctx, 2))),
                                s_mul(s_x(ctx), s_x(ctx)));
    EXPECT_TRUE(s_equal_mod(tw.Phi[0][0], expect));
    // twist of the trivial module re-validates (done in constructor); the
    // gamma factor at u = 1 would be [1]' = 1
    LTEndo idendo = lt_endomorphism(ring_one(ctx), phi, 12);
    EXPECT_TRUE(s_equal_mod(s_derivative(idendo.series), s_const(ctx, 1)));
}

TEST(ApplyPhi, SemilinearitySeeded) {
    RingCtx ctx = q3(2);
    FrobData phi = default_frobenius(ctx, FrobKind::standard, 12);
    PhiGammaModule mod = trivial_module(ctx, phi);
    SplitMix64 rng(8);
    for (int trial = 0; trial < 6; ++trial) {
        LaurentTrunc f = s_zero(ctx, -2, 6);
        LaurentTrunc v = s_zero(ctx, -2, 6);
        for (int e = -2; e < 6; ++e) {
            if (rng.below(2)) f = s_add(f, s_monomial(ctx, e, ring_int(ctx, i64(rng.below(9))), 6));
            if (rng.below(2)) v = s_add(v, s_monomial(ctx, e, ring_int(ctx, i64(rng.below(9))), 6));
        }
        LaurentTrunc lhs = apply_phi(mod, {s_mul(f, v)}, 6)[0];
        LaurentTrunc rhs = s_mul(phi_substitute(f, mod.phi, 6), apply_phi(mod, {v}, 6)[0]);
        EXPECT_TRUE(s_is_zero_mod(s_sub(lhs, rhs)));
    }
}

TEST(ApplyPsi, TraceContractOnTrivialModule) {
    RingCtx ctx = q3(2);
    for (FrobKind kind : {FrobKind::standard, FrobKind::cyclotomic}) {
        FrobData phi = default_frobenius(ctx, kind, 12);
        PhiGammaModule mod = trivial_module(ctx, phi);
        // psi(1) = q/pi = 1 over Q_3
        EXPECT_TRUE(s_equal_mod(apply_psi(mod, {s_const(ctx, 1)})[0], s_const(ctx, 1)));
        // psi(phi(v)) = v and the projection formula, seeded
        SplitMix64 rng(kind == FrobKind::standard ? 3 : 4);
        for (int trial = 0; trial < 4; ++trial) {
            LaurentTrunc v = s_zero(ctx, -2, 6);
            LaurentTrunc f = s_zero(ctx, -2, 6);
            for (int e = -2; e < 6; ++e) {
                if (rng.below(2)) v = s_add(v, s_monomial(ctx, e, ring_int(ctx, i64(rng.below(9))), 6));
                if (rng.below(2)) f = s_add(f, s_monomial(ctx, e, ring_int(ctx, i64(rng.below(9))), 6));
            }
            LaurentTrunc back = apply_psi(mod, apply_phi(mod, {v}, 8))[0];
            EXPECT_TRUE(s_is_zero_mod(s_sub(back, v)));
            LaurentTrunc pf = phi_substitute(f, mod.phi, 8);
            LaurentTrunc lhs = apply_psi(mod, {s_mul(pf, v)})[0];
            LaurentTrunc rhs = s_mul(f, apply_psi(mod, {v})[0]);
            EXPECT_TRUE(s_is_zero_mod(s_sub(lhs, rhs)));
        }
    }
}

TEST(ApplyPsi, ModPiReadoutOnPowers) {
    RingCtx ctx = q3(1);
    FrobData phi = default_frobenius(ctx, FrobKind::standard, 12);
    PhiGammaModule mod = trivial_module(ctx, phi);
    for (int k = 1; k <= 2; ++k) {
        LaurentTrunc img = apply_psi(mod, {s_monomial(ctx, 3 * k, ring_one(ctx))})[0];
        EXPECT_TRUE(ring_equal_mod(s_coeff(img, k), ring_one(ctx)));
    }
}

TEST(ApplyPsi, TwistedModulePsiStaysIntegral) {
    RingCtx ctx = q3(2);
    FrobData phi = default_frobenius(ctx, FrobKind::cyclotomic, 12);
    PhiGammaModule tw = chi_lt_twist(trivial_module(ctx, phi), 12);
    SeriesVec v{s_monomial(ctx, 2, ring_one(ctx))};
    SeriesVec back = apply_psi(tw, apply_phi(tw, v, 10));
    EXPECT_TRUE(s_is_zero_mod(s_sub(back[0], v[0])));
}

TEST(DeltaGroup, MuTwoOnQ3) {
    RingCtx ctx = q3(1);
    FrobData phi = default_frobenius(ctx, FrobKind::standard, 12);
    PhiGammaModule mod = trivial_module(ctx, phi);
    DeltaGroup g = delta_group(mod);
    EXPECT_EQ(g.elements.size(), 2u);  // mu_2 = {1, -1}
}

TEST(DeltaProjector, ParitySelectionModP) {
    RingCtx ctx = q3(1);
    FrobData phi = default_frobenius(ctx, FrobKind::standard, 14);
    PhiGammaModule mod = trivial_module(ctx, phi);
    QuotWindow w{2, 5};
    LinMap e = materialize_op(mod, ModOp::DeltaProjector, 0, w, w);
    const ZMod& zm = ctx.zm();
    // idempotent
    Mat e2 = mat_mul(zm, e.m, e.m);
    for (int i = 0; i < e.m.r; ++i)
        for (int j = 0; j < e.m.c; ++j)
            EXPECT_EQ(zm.reduce(e2.at(i, j)) % 3, zm.reduce(e.m.at(i, j)) % 3);
    // [-1] = -X mod pi forces parity selection: e kills odd powers, keeps even
    QuotientBasis qb = quotient_basis(mod, w);
    for (int exp = -2; exp < 5; ++exp) {
        std::vector<i64> v(qb.dim(), 0);
        v[qb.index(0, exp, 0)] = 1;
        auto img = mat_apply(zm, e.m, v);
        if (exp % 2 != 0) {
            for (i64 x : img) EXPECT_EQ(zm.reduce(x) % 3, 0) << "odd exp " << exp;
        } else {
            EXPECT_EQ(zm.reduce(img[size_t(qb.index(0, exp, 0))]) % 3, 1) << "even exp " << exp;
        }
    }
}

TEST(FiniteQuotient, TrivialModuleSmallWindowShapes) {
    RingCtx ctx = q3(1);
    FrobData phi = default_frobenius(ctx, FrobKind::standard, 14);
    PhiGammaModule mod = trivial_module(ctx, phi);
    FiniteQuotient fq = finite_quotient(mod, 0, 3);
    // carrier: F_3-span of X^0, X^1, X^2 -> 27 elements
    QuotientBasis qb = quotient_basis(mod, fq.source);
    EXPECT_EQ(qb.dim(), 3);
    long long card = 1;
    for (int e : qb.carrier.exps) card *= ctx.zm().ppow[e];
    EXPECT_EQ(card, 27);
    // (phi - 1) on [0,3): X^0 -> 0, X^1 -> -X^1, X^2 -> -X^2 (X^3, X^6 leave)
    const Mat& M = fq.phi_minus_one.m;
    QuotientBasis qt = quotient_basis(mod, fq.phi_target);
    const ZMod& zm = ctx.zm();
    for (int e = 0; e < 3; ++e) {
        std::vector<i64> v(qb.dim(), 0);
        v[qb.index(0, e, 0)] = 1;
        auto img = mat_apply(zm, M, v);
        for (int ee = -fq.phi_target.N; ee < fq.phi_target.n; ++ee) {
            i64 got = zm.reduce(img[size_t(qt.index(0, ee, 0))]) % 3;
            i64 want = (e >= 1 && ee == e) ? 2 : 0;  // -1 = 2 mod 3
            EXPECT_EQ(got, want) << "e=" << e << " ee=" << ee;
        }
    }
}

TEST(FiniteQuotient, TransitionsCommuteWithOperators) {
    RingCtx ctx = q3(1);
    FrobData phi = default_frobenius(ctx, FrobKind::standard, 20);
    PhiGammaModule mod = trivial_module(ctx, phi);
    const ZMod& zm = ctx.zm();
    QuotWindow big{2, 6}, small{1, 4};
    // inclusion part only: [-1,4) -> [-2,6) needs N grow, n grow: use two steps
    // transition maps here go (N up, n down): big -> small
    LinMap trans = materialize_transition(mod, big, QuotWindow{2, 4});
    for (auto op : {ModOp::PhiMinusOne, ModOp::GammaMinusOne}) {
        QuotWindow tgt_big{14, op == ModOp::PhiMinusOne ? 6 : 6};
        QuotWindow tgt_small{14, 4};
        LinMap ob = materialize_op(mod, op, 0, big, tgt_big);
        LinMap os = materialize_op(mod, op, 0, QuotWindow{2, 4}, tgt_small);
        LinMap ttgt = materialize_transition(mod, tgt_big, tgt_small);
        Mat lhs = mat_mul(zm, ttgt.m, ob.m);
        Mat rhs = mat_mul(zm, os.m, trans.m);
        Mat diff = mat_sub(zm, lhs, rhs);
        for (int i = 0; i < diff.r; ++i)
            for (int j = 0; j < diff.c; ++j)
                EXPECT_EQ(zm.reduce(diff.at(i, j)) % 3, 0) << int(op);
    }
}

TEST(FiniteQuotient, RamifiedBaseSmokeTest) {
    FieldParams fp = ramified_quadratic_field(3);
    RingCtx ctx = make_ring(fp, 1, guard_for(fp, 24, 2));
    FrobData phi = default_frobenius(ctx, FrobKind::standard, 14);
    PhiGammaModule mod = trivial_module(ctx, phi);
    EXPECT_EQ(mod.gammas.size(), 2u);  // rank-2 free part
    FiniteQuotient fq = finite_quotient(mod, 1, 3);
    const ZMod& zm = ctx.zm();
    // gamma operators commute on the window (matrix identity)
    QuotWindow w = fq.source;
    QuotWindow tgt{w.N, w.n};
    LinMap g0 = materialize_op(mod, ModOp::GammaMinusOne, 0, w, tgt);
    LinMap g1 = materialize_op(mod, ModOp::GammaMinusOne, 1, w, tgt);
    // (gamma_0 - 1)(gamma_1 - 1) = (gamma_1 - 1)(gamma_0 - 1)
    Mat lhs = mat_mul(zm, g0.m, g1.m);
    Mat rhs = mat_mul(zm, g1.m, g0.m);
    Mat diff = mat_sub(zm, lhs, rhs);
    for (int i = 0; i < diff.r; ++i)
        for (int j = 0; j < diff.c; ++j)
            EXPECT_EQ(zm.reduce(diff.at(i, j)) % 3, 0);
}


TEST(DeltaProject, EmptyDeltaIsIdentityAndNormFlags) {
    RingCtx ctx = q3(2);
    FrobData phi = default_frobenius(ctx, FrobKind::standard, 12);
    PhiGammaModule mod = trivial_module(ctx, phi, {ring_int(ctx, 4)}, {});
    mod.deltas.clear();
    DeltaProjected pr = delta_project(mod);
    EXPECT_TRUE(pr.group_elements.empty());
    // with Delta present, the group is enumerated (mu_2 over Q_3)
    PhiGammaModule full = trivial_module(ctx, phi);
    EXPECT_EQ(delta_project(full).group_elements.size(), 2u);
    // psi normalizations: over Q_p the left inverse equals the integral one
    SeriesVec v{s_monomial(ctx, 2, ring_one(ctx))};
    LaurentTrunc a = apply_psi(full, v, 24, PsiNormalization::integral)[0];
    LaurentTrunc b = apply_psi(full, v, 24, PsiNormalization::left_inverse)[0];
    EXPECT_TRUE(s_is_zero_mod(s_sub(a, b)));
    // over a ramified base q/pi is not a unit
    FieldParams rp = ramified_quadratic_field(3);
    RingCtx rctx = make_ring(rp, 1, guard_for(rp, 24, 2));
    FrobData rphi = default_frobenius(rctx, FrobKind::standard, 12);
    PhiGammaModule rmod = trivial_module(rctx, rphi);
    SeriesVec rv{s_monomial(rctx, 2, ring_one(rctx))};
    EXPECT_THROW(apply_psi(rmod, rv, 24, PsiNormalization::left_inverse), ValidationError);
}


TEST(FiniteQuotient, PsiTransitionsCommute) {
    RingCtx ctx = q3(1, 40);
    FrobData phi = default_frobenius(ctx, FrobKind::standard, 16);
    PhiGammaModule mod = trivial_module(ctx, phi);
    const ZMod& zm = ctx.zm();
    QuotWindow big{3, 9}, small{3, 6};
    QuotWindow tb{3, op_tail_bound(mod, ModOp::PsiMinusOne, 0, big.n)};
    QuotWindow ts{3, op_tail_bound(mod, ModOp::PsiMinusOne, 0, small.n)};
    LinMap pb = materialize_op(mod, ModOp::PsiMinusOne, 0, big, tb);
    LinMap ps = materialize_op(mod, ModOp::PsiMinusOne, 0, small, ts);
    Mat trs = materialize_transition(mod, big, small).m;
    Mat trt = materialize_transition(mod, tb, ts).m;
    Mat lhs = mat_mul(zm, trt, pb.m);
    Mat rhs = mat_mul(zm, ps.m, trs);
    Mat diff = mat_sub(zm, lhs, rhs);
    for (int i = 0; i < diff.r; ++i)
        for (int j = 0; j < diff.c; ++j)
            EXPECT_EQ(zm.reduce(diff.at(i, j)) % zm.ppow[ps.tgt.exps[size_t(i)]], 0);
}

}  // namespace
